#pragma once

#include <span>
#include <vector>

#include "cstte/downstream/metrics.hpp"
#include "cstte/downstream/search.hpp"

namespace cstte::down {

struct Point {
  double x = 0.0;  // lon
  double y = 0.0;  // lat
};

std::vector<Point> points_of(const traj::Trajectory& t);

/// Full-window DTW with Euclidean local cost (degrees). ContractError on an
/// empty input. Uses O(min) memory: two DP rows.
double dtw_distance(std::span<const Point> a, std::span<const Point> b);

/// Ranks candidates by ascending DTW distance.
RankingResult dtw_search_eval(const SearchSets& sets);

}  // namespace cstte::down
