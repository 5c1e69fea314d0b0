#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "cstte/trajdata/trajectory.hpp"

namespace cstte::traj {

struct ParseResult {
  std::vector<Trajectory> trajectories;  // in order of first appearance
  std::size_t rows = 0;
  std::size_t skipped = 0;  // malformed rows
  bool has_loc_index = false;
};

/// Reads `traj_id,timestamp,lon,lat[,loc_index]` (columns located by header
/// name). Records are grouped by id and sorted by timestamp. Malformed rows
/// are skipped and counted; more than half malformed is a DataError.
ParseResult parse_trajectories(std::istream& is);
ParseResult parse_trajectories(const std::filesystem::path& path);

/// Inverse of parse_trajectories. Doubles use the shortest round-trip form.
void write_trajectories(std::ostream& os, std::span<const Trajectory> trajs, bool with_loc_index);
void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajs,
                        bool with_loc_index);

}  // namespace cstte::traj
