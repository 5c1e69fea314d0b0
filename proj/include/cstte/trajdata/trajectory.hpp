#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cstte::traj {

/// One observed presence: location index, epoch seconds, lon/lat degrees.
struct VisitRecord {
  std::uint32_t loc = 0;
  std::int64_t t = 0;
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const VisitRecord&, const VisitRecord&) = default;
};

struct Trajectory {
  std::string id;
  std::vector<VisitRecord> records;

  std::size_t size() const { return records.size(); }
  std::int64_t start_time() const { return records.front().t; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Sub-trajectory made of the records at the given 0-based positions.
Trajectory take(const Trajectory& traj, std::span<const std::size_t> positions);

/// Greedy decimation: keep the first record, then every record at least
/// `interval_s` seconds after the last kept one. Never interpolates.
Trajectory resample(const Trajectory& traj, std::int64_t interval_s = 60);

/// Trajectories with at least `min_length` records. Warns when none survive.
std::vector<Trajectory> filter_min_length(std::vector<Trajectory> trajs,
                                          std::size_t min_length = 20);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Orders by first timestamp (ties by id) and cuts at floor(r0·n) and
/// floor((r0+r1)·n) of the normalised ratios. Needs n ≥ 3.
DatasetSplit chronological_split(std::span<const Trajectory> trajs,
                                 std::array<double, 3> ratios = {8.0, 1.0, 1.0});

/// Time transform fed to the encoder: minutes since `epoch`.
struct Normalization {
  std::int64_t epoch = 0;
  double seconds_per_unit = 60.0;

  double apply(std::int64_t t) const { return static_cast<double>(t - epoch) / seconds_per_unit; }
  double invert(double v) const { return static_cast<double>(epoch) + v * seconds_per_unit; }
};

/// Record as seen by the encoder: time normalised, coordinates in degrees.
struct FeatureRecord {
  std::uint32_t loc = 0;
  double t = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

using FeatureSequence = std::vector<FeatureRecord>;

/// Epoch = earliest timestamp over the given (training) trajectories.
Normalization fit_normalization(std::span<const Trajectory> train);

FeatureSequence to_features(const Trajectory& traj, const Normalization& norm);

}  // namespace cstte::traj
