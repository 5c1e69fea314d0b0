#include "cstte/trajdata/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cstte/error.hpp"
#include "cstte/log.hpp"

namespace cstte::traj {

Trajectory take(const Trajectory& traj, std::span<const std::size_t> positions) {
  Trajectory out{traj.id, {}};
  out.records.reserve(positions.size());
  for (auto p : positions) {
    if (p >= traj.size()) throw ContractError("position out of range in take()");
    out.records.push_back(traj.records[p]);
  }
  return out;
}

Trajectory resample(const Trajectory& traj, std::int64_t interval_s) {
  if (interval_s <= 0) throw ConfigError("resample interval must be positive");
  Trajectory out{traj.id, {}};
  for (const auto& r : traj.records) {
    if (out.records.empty() || r.t >= out.records.back().t + interval_s) out.records.push_back(r);
  }
  return out;
}

std::vector<Trajectory> filter_min_length(std::vector<Trajectory> trajs, std::size_t min_length) {
  if (min_length < 2) throw ConfigError("min_length must be at least 2");
  std::erase_if(trajs, [&](const Trajectory& t) { return t.size() < min_length; });
  if (trajs.empty())
    log_warning("no trajectory has at least " + std::to_string(min_length) + " records");
  return trajs;
}

DatasetSplit chronological_split(std::span<const Trajectory> trajs, std::array<double, 3> ratios) {
  const std::size_t n = trajs.size();
  if (n < 3) {
    throw DataError("chronological split needs at least 3 trajectories, got " + std::to_string(n));
  }
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("split ratios must be positive");
  }
  const double total = ratios[0] + ratios[1] + ratios[2];
  // small guard so 0.8·10 lands on 8 rather than 7.999...
  auto cut = [&](double frac) {
    return std::min(n, static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9)));
  };
  const std::size_t c1 = cut(ratios[0] / total);
  const std::size_t c2 = std::max(c1, cut((ratios[0] + ratios[1]) / total));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ta = trajs[a].start_time(), tb = trajs[b].start_time();
    return ta != tb ? ta < tb : trajs[a].id < trajs[b].id;
  });
  DatasetSplit s;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < c1 ? s.train : (i < c2 ? s.validation : s.test);
    dst.push_back(trajs[order[i]].id);
  }
  return s;
}

Normalization fit_normalization(std::span<const Trajectory> train) {
  if (train.empty()) throw DataError("cannot fit time normalisation on an empty set");
  Normalization n;
  n.epoch = train.front().start_time();
  for (const auto& t : train) {
    for (const auto& r : t.records) n.epoch = std::min(n.epoch, r.t);
  }
  return n;
}

FeatureSequence to_features(const Trajectory& traj, const Normalization& norm) {
  FeatureSequence out;
  out.reserve(traj.size());
  for (const auto& r : traj.records) out.push_back({r.loc, norm.apply(r.t), r.lon, r.lat});
  return out;
}

}  // namespace cstte::traj
