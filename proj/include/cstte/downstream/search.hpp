#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cstte/downstream/metrics.hpp"
#include "cstte/numcore/array.hpp"
#include "cstte/trajdata/trajectory.hpp"

namespace cstte::down {

/// Odd-position halves (queries) and even-position halves (candidates);
/// index i on both sides comes from the same source.
struct SearchSets {
  std::vector<std::string> ids;
  std::vector<traj::Trajectory> odd;
  std::vector<traj::Trajectory> even;

  std::size_t size() const { return ids.size(); }
};

/// Sources shorter than 4 records are skipped with a warning.
SearchSets build_search_sets(std::span<const traj::Trajectory> test);

/// Maps trajectories to embedding rows [n × d].
using Embedder = std::function<num::Array(std::span<const traj::Trajectory>)>;

/// Ranks all candidates by descending dot product with each query. Search
/// macro-F1 treats top-1 retrieval as classification over candidate ids.
RankingResult search_eval(const Embedder& embedder, const SearchSets& sets);

/// Same, from precomputed query/candidate embeddings with matching rows.
RankingResult search_eval(const num::Array& queries, const num::Array& candidates);

}  // namespace cstte::down
