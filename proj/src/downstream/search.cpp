#include "cstte/downstream/search.hpp"

#include <numeric>

#include "cstte/augment/samplers.hpp"
#include "cstte/error.hpp"
#include "cstte/log.hpp"
#include "cstte/numcore/parallel.hpp"

namespace cstte::down {

SearchSets build_search_sets(std::span<const traj::Trajectory> test) {
  SearchSets s;
  std::size_t skipped = 0;
  for (const auto& t : test) {
    const auto pair = aug::two_hop_split(t.size());
    if (!pair) {
      ++skipped;
      continue;
    }
    s.ids.push_back(t.id);
    s.odd.push_back(traj::take(t, pair->query));
    s.even.push_back(traj::take(t, pair->positive));
  }
  if (skipped > 0) {
    log_warning("search sets: skipped " + std::to_string(skipped) +
                " trajectories under 4 records");
  }
  return s;
}

namespace {

num::Array embed_checked(const Embedder& embedder, std::span<const traj::Trajectory> trajs) {
  try {
    auto e = embedder(trajs);
    if (e.rank() != 2 || e.rows() != trajs.size()) {
      throw DimensionError("embedder returned " + num::shape_string(e.shape()) + " for " +
                           std::to_string(trajs.size()) + " trajectories");
    }
    return e;
  } catch (const DimensionError&) {
    throw;
  } catch (const std::exception& batch_error) {
    // find the first trajectory that fails on its own
    for (const auto& t : trajs) {
      try {
        embedder(std::span(&t, 1));
      } catch (const std::exception& e) {
        throw DataError("embedding failed for trajectory '" + t.id + "': " + e.what());
      }
    }
    throw;
  }
}

}  // namespace

RankingResult search_eval(const num::Array& queries, const num::Array& candidates) {
  if (queries.rank() != 2 || candidates.rank() != 2 || queries.rows() != candidates.rows() ||
      queries.cols() != candidates.cols()) {
    throw DimensionError("search embeddings " + num::shape_string(queries.shape()) + " vs " +
                         num::shape_string(candidates.shape()));
  }
  const std::size_t n = queries.rows(), d = queries.cols();
  if (n < 2) throw DataError("search needs at least 2 candidates");
  num::Array scores({n, n});
  num::parallel_for(n, 8, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto q = queries.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        const auto c = candidates.row(j);
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += q[k] * c[k];
        scores.at(i, j) = s;
      }
    }
  });
  std::vector<std::size_t> truth(n);
  std::iota(truth.begin(), truth.end(), 0);
  return evaluate_scores(scores, truth);
}

RankingResult search_eval(const Embedder& embedder, const SearchSets& sets) {
  if (sets.size() < 2) throw DataError("search needs at least 2 candidates");
  return search_eval(embed_checked(embedder, sets.odd), embed_checked(embedder, sets.even));
}

}  // namespace cstte::down
