#include "cstte/downstream/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cstte/error.hpp"
#include "cstte/numcore/parallel.hpp"

namespace cstte::down {

std::vector<Point> points_of(const traj::Trajectory& t) {
  std::vector<Point> out;
  out.reserve(t.size());
  for (const auto& r : t.records) out.push_back({r.lon, r.lat});
  return out;
}

double dtw_distance(std::span<const Point> a, std::span<const Point> b) {
  if (a.empty() || b.empty()) throw ContractError("dtw_distance on an empty sequence");
  const std::size_t m = b.size();
  std::vector<double> prev(m), cur(m);
  auto cost = [&](std::size_t i, std::size_t j) {
    return std::hypot(a[i].x - b[j].x, a[i].y - b[j].y);
  };
  prev[0] = cost(0, 0);
  for (std::size_t j = 1; j < m; ++j) prev[j] = prev[j - 1] + cost(0, j);
  for (std::size_t i = 1; i < a.size(); ++i) {
    cur[0] = prev[0] + cost(i, 0);
    for (std::size_t j = 1; j < m; ++j) {
      cur[j] = cost(i, j) + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

RankingResult dtw_search_eval(const SearchSets& sets) {
  const std::size_t n = sets.size();
  if (n < 2) throw DataError("search needs at least 2 candidates");
  std::vector<std::vector<Point>> q(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = points_of(sets.odd[i]);
    c[i] = points_of(sets.even[i]);
  }
  num::Array scores({n, n});
  num::parallel_for(n, 4, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t j = 0; j < n; ++j) scores.at(i, j) = -dtw_distance(q[i], c[j]);
    }
  });
  std::vector<std::size_t> truth(n);
  std::iota(truth.begin(), truth.end(), 0);
  return evaluate_scores(scores, truth);
}

}  // namespace cstte::down
