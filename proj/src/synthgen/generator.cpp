#include "cstte/synthgen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "cstte/error.hpp"
#include "cstte/numcore/parallel.hpp"
#include "cstte/numcore/random.hpp"

namespace cstte::synth {

namespace {

constexpr std::size_t kCurveSteps = 2048;  // polyline resolution of a path
constexpr std::uint64_t kHubStream = 0x687562;

struct Vec2 {
  double x = 0.0, y = 0.0;
};

// Path as a fine polyline in local meters; lengths[i] is the arc length
// up to vertex i.
struct Polyline {
  std::vector<Vec2> pts;
  std::vector<double> lengths;

  double length() const { return lengths.back(); }

  Vec2 at(double s) const {
    if (s <= 0.0) return pts.front();
    if (s >= length()) return pts.back();
    const auto it = std::upper_bound(lengths.begin(), lengths.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - lengths.begin());
    const double seg = lengths[i] - lengths[i - 1];
    const double f = seg > 0.0 ? (s - lengths[i - 1]) / seg : 0.0;
    return {pts[i - 1].x + f * (pts[i].x - pts[i - 1].x),
            pts[i - 1].y + f * (pts[i].y - pts[i - 1].y)};
  }
};

Polyline bezier(Vec2 p0, Vec2 p1, Vec2 p2) {
  Polyline line;
  line.pts.reserve(kCurveSteps + 1);
  line.lengths.reserve(kCurveSteps + 1);
  for (std::size_t i = 0; i <= kCurveSteps; ++i) {
    const double t = static_cast<double>(i) / kCurveSteps, u = 1.0 - t;
    line.pts.push_back({u * u * p0.x + 2 * u * t * p1.x + t * t * p2.x,
                        u * u * p0.y + 2 * u * t * p1.y + t * t * p2.y});
    line.lengths.push_back(i == 0 ? 0.0
                                  : line.lengths.back() +
                                        std::hypot(line.pts[i].x - line.pts[i - 1].x,
                                                   line.pts[i].y - line.pts[i - 1].y));
  }
  line.pts.back() = p2;
  return line;
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synth: " + m); };
  if (n_trajectories == 0) fail("n_trajectories must be positive");
  if (!(max_lon > min_lon) || !(max_lat > min_lat)) fail("degenerate bounding box");
  if (n_hubs == 0) fail("n_hubs must be positive");
  if (min_points < 2 || max_points < min_points) fail("points range must satisfy 2 <= min <= max");
  if (!(min_speed > 0.0) || max_speed < min_speed) fail("speed range must satisfy 0 < min <= max");
  if (interval_s <= 0) fail("interval must be positive");
  if (!(noise_sigma_m >= 0.0)) fail("noise sigma must be non-negative");
  if (!(span_days > 0.0)) fail("span_days must be positive");
  if (!(cell_size_m > 0.0)) fail("cell size must be positive");
  if (!(min_hub_separation_m >= 0.0)) fail("hub separation must be non-negative");
}

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthDataset ds;
  ds.grid = traj::GridSpec(cfg.min_lon, cfg.min_lat, cfg.max_lon, cfg.max_lat, cfg.cell_size_m);
  const double mx = ds.grid.meters_per_deg_lon(), my = ds.grid.meters_per_deg_lat();
  const double width = (cfg.max_lon - cfg.min_lon) * mx, height = (cfg.max_lat - cfg.min_lat) * my;

  // hubs in the central 60% of the box, pairwise separated
  num::Rng hub_rng(num::derive_seed(cfg.seed, {kHubStream}));
  std::uniform_real_distribution<double> ux(0.2 * width, 0.8 * width),
      uy(0.2 * height, 0.8 * height);
  std::uniform_real_distribution<double> hour(0.0, 24.0);
  std::vector<Vec2> hub_xy;
  for (std::size_t tries = 0; hub_xy.size() < cfg.n_hubs; ++tries) {
    if (tries > 1000 * cfg.n_hubs) {
      throw ConfigError("synth: box too small to separate " + std::to_string(cfg.n_hubs) +
                        " hubs by " + std::to_string(cfg.min_hub_separation_m) + " m");
    }
    const Vec2 c{ux(hub_rng), uy(hub_rng)};
    const bool clear = std::all_of(hub_xy.begin(), hub_xy.end(), [&](const Vec2& h) {
      return std::hypot(h.x - c.x, h.y - c.y) >= cfg.min_hub_separation_m;
    });
    if (clear) hub_xy.push_back(c);
  }
  for (const auto& h : hub_xy) {
    ds.hubs.push_back({cfg.min_lon + h.x / mx, cfg.min_lat + h.y / my, hour(hub_rng)});
  }

  const std::size_t n = cfg.n_trajectories;
  ds.trajectories.resize(n);
  ds.hub_of.resize(n);
  const int digits = std::max(5, static_cast<int>(std::to_string(n - 1).size()));
  const double span_s = cfg.span_days * 86400.0;

  num::parallel_for(n, 32, [&](std::size_t b, std::size_t e) {
    std::vector<double> weights(cfg.n_hubs);
    for (std::size_t k = b; k < e; ++k) {
      num::Rng rng(num::derive_seed(cfg.seed, {k}));
      const auto start =
          cfg.start_epoch +
          static_cast<std::int64_t>(std::uniform_real_distribution<double>(0.0, span_s)(rng));
      const double h_of_day =
          std::fmod(static_cast<double>(start - cfg.start_epoch) / 3600.0, 24.0);
      for (std::size_t h = 0; h < cfg.n_hubs; ++h) {
        weights[h] = std::exp(
            2.0 * std::cos(2.0 * std::numbers::pi * (h_of_day - ds.hubs[h].peak_hour) / 24.0));
      }
      const std::size_t hub =
          std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);
      const std::size_t points =
          std::uniform_int_distribution<std::size_t>(cfg.min_points, cfg.max_points)(rng);
      const double speed =
          std::uniform_real_distribution<double>(cfg.min_speed, cfg.max_speed)(rng);
      const double length =
          speed * static_cast<double>(points - 1) * static_cast<double>(cfg.interval_s) / 60.0;

      // start direction and bend; prefer paths that stay inside the box
      const Vec2 end = hub_xy[hub];
      Polyline path;
      for (int attempt = 0; attempt < 64; ++attempt) {
        const double theta = std::uniform_real_distribution<double>(0.0, 2 * std::numbers::pi)(rng);
        const double bend = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
        const Vec2 dir{std::cos(theta), std::sin(theta)}, perp{-dir.y, dir.x};
        // unit-distance curve, then scale so its length is `length`
        const Polyline unit = bezier(
            {dir.x, dir.y}, {0.5 * dir.x + bend * perp.x, 0.5 * dir.y + bend * perp.y}, {0.0, 0.0});
        const double dist = length / unit.length();
        const Vec2 p0{end.x + dist * dir.x, end.y + dist * dir.y};
        const Vec2 p1{end.x + dist * (0.5 * dir.x + bend * perp.x),
                      end.y + dist * (0.5 * dir.y + bend * perp.y)};
        path = bezier(p0, p1, end);
        const bool inside = p0.x >= 0 && p0.x <= width && p0.y >= 0 && p0.y <= height &&
                            p1.x >= 0 && p1.x <= width && p1.y >= 0 && p1.y <= height;
        if (inside) break;
      }

      std::normal_distribution<double> noise(0.0, 1.0);
      traj::Trajectory& t = ds.trajectories[k];
      char id[32];
      std::snprintf(id, sizeof id, "t%0*zu", digits, k);
      t.id = id;
      t.records.reserve(points);
      for (std::size_t i = 0; i < points; ++i) {
        const double s = path.length() * static_cast<double>(i) / static_cast<double>(points - 1);
        Vec2 p = i + 1 == points ? end : path.at(s);
        if (cfg.noise_sigma_m > 0.0) {
          p.x += cfg.noise_sigma_m * noise(rng);
          p.y += cfg.noise_sigma_m * noise(rng);
        }
        traj::VisitRecord r;
        r.t = start + static_cast<std::int64_t>(i) * cfg.interval_s;
        r.lon = std::clamp(cfg.min_lon + p.x / mx, -180.0, 180.0);
        r.lat = std::clamp(cfg.min_lat + p.y / my, -90.0, 90.0);
        r.loc = ds.grid.assign(r.lon, r.lat);
        t.records.push_back(r);
      }
      ds.hub_of[k] = hub;
    }
  });
  return ds;
}

void write_ground_truth(const std::filesystem::path& path, const SynthDataset& ds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "traj_id,hub_id\n";
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    out << ds.trajectories[i].id << ',' << ds.hub_of[i] << '\n';
  }
}

}  // namespace cstte::synth
