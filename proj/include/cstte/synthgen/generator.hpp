#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cstte/trajdata/grid.hpp"
#include "cstte/trajdata/trajectory.hpp"

namespace cstte::synth {

struct SynthConfig {
  std::size_t n_trajectories = 2000;
  double min_lon = 104.0, min_lat = 30.62, max_lon = 104.104, max_lat = 30.71;
  double cell_size_m = 250.0;
  std::size_t n_hubs = 12;
  double min_hub_separation_m = 750.0;
  std::size_t min_points = 20, max_points = 40;
  double min_speed = 120.0, max_speed = 240.0;  // meters per minute
  std::int64_t interval_s = 60;
  double noise_sigma_m = 20.0;
  std::int64_t start_epoch = 1541030400;  // 2018-11-01 00:00 UTC
  double span_days = 7.0;
  std::uint64_t seed = 42;

  void validate() const;  // ConfigError
};

struct Hub {
  double lon = 0.0, lat = 0.0;
  double peak_hour = 0.0;  // time of day when this hub is most popular
};

struct SynthDataset {
  std::vector<traj::Trajectory> trajectories;
  std::vector<std::size_t> hub_of;  // per trajectory
  std::vector<Hub> hubs;
  traj::GridSpec grid;
};

/// Each trajectory travels a quadratic Bezier from a random start to a hub
/// (chosen with time-of-day weights) at a drawn speed, sampled every
/// interval at equal arc length, with Gaussian position noise.
/// ConfigError when hubs cannot be placed with the required separation.
SynthDataset generate(const SynthConfig& cfg);

/// `traj_id,hub_id` per trajectory.
void write_ground_truth(const std::filesystem::path& path, const SynthDataset& ds);

}  // namespace cstte::synth
