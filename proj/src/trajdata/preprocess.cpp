#include "cstte/trajdata/preprocess.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "cstte/error.hpp"

namespace cstte::traj {

const Trajectory& Dataset::get(const std::string& id) const {
  auto it = std::find_if(trajectories.begin(), trajectories.end(),
                         [&](const Trajectory& t) { return t.id == id; });
  if (it == trajectories.end()) throw DataError("unknown trajectory id '" + id + "'");
  return *it;
}

std::vector<Trajectory> Dataset::part(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string_view, const Trajectory*> index;
  for (const auto& t : trajectories) index.emplace(t.id, &t);
  std::vector<Trajectory> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("unknown trajectory id '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

Dataset preprocess(std::vector<Trajectory> raw, const PreprocessOptions& opts) {
  for (auto& t : raw) t = resample(t, opts.interval_s);
  auto trajs = filter_min_length(std::move(raw), opts.min_length);
  if (trajs.empty()) throw DataError("no trajectory survives preprocessing");

  Dataset ds;
  ds.mode = opts.mode;
  if (opts.mode == VocabularyMode::grid) {
    BoundingBox box;
    if (opts.box) {
      box = *opts.box;
    } else {
      box = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
             std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
      for (const auto& t : trajs) {
        for (const auto& r : t.records) {
          box.min_lon = std::min(box.min_lon, r.lon);
          box.min_lat = std::min(box.min_lat, r.lat);
          box.max_lon = std::max(box.max_lon, r.lon);
          box.max_lat = std::max(box.max_lat, r.lat);
        }
      }
    }
    ds.grid = GridSpec(box.min_lon, box.min_lat, box.max_lon, box.max_lat, opts.cell_size_m);
    ds.n_locations = ds.grid.n_locations();
    for (auto& t : trajs) {
      for (auto& r : t.records) r.loc = ds.grid.assign(r.lon, r.lat);
    }
  } else {
    std::uint32_t top = 0;
    for (const auto& t : trajs) {
      for (const auto& r : t.records) top = std::max(top, r.loc);
    }
    ds.n_locations = std::size_t{top} + 1;
  }

  ds.split = chronological_split(trajs, opts.ratios);
  std::unordered_map<std::string, Trajectory*> by_id;
  for (auto& t : trajs) by_id.emplace(t.id, &t);
  if (by_id.size() != trajs.size()) throw DataError("duplicate trajectory ids");
  for (const auto* part : {&ds.split.train, &ds.split.validation, &ds.split.test}) {
    for (const auto& id : *part) ds.trajectories.push_back(std::move(*by_id.at(id)));
  }
  ds.normalization =
      fit_normalization(std::span<const Trajectory>(ds.trajectories).first(ds.split.train.size()));
  return ds;
}

}  // namespace cstte::traj
