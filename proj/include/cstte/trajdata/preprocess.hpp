#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cstte/trajdata/grid.hpp"
#include "cstte/trajdata/trajectory.hpp"

namespace cstte::traj {

enum class VocabularyMode {
  grid,         // locations are grid cells of the coordinates
  passthrough,  // locations come with the data (e.g. tower ids)
};

struct BoundingBox {
  double min_lon = 0, min_lat = 0, max_lon = 0, max_lat = 0;
};

struct PreprocessOptions {
  std::int64_t interval_s = 60;
  std::size_t min_length = 20;
  VocabularyMode mode = VocabularyMode::grid;
  double cell_size_m = 250.0;
  std::optional<BoundingBox> box;  // default: bounds of the input records
  std::array<double, 3> ratios = {8.0, 1.0, 1.0};
};

struct Dataset {
  std::vector<Trajectory> trajectories;  // chronological
  VocabularyMode mode = VocabularyMode::grid;
  GridSpec grid;  // meaningful in grid mode only
  std::size_t n_locations = 0;
  Normalization normalization;
  DatasetSplit split;

  const Trajectory& get(const std::string& id) const;
  std::vector<Trajectory> part(const std::vector<std::string>& ids) const;
};

/// resample → length filter → location assignment → split → time
/// normalisation fitted on the training part.
Dataset preprocess(std::vector<Trajectory> raw, const PreprocessOptions& opts);

}  // namespace cstte::traj
