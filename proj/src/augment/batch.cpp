#include "cstte/augment/batch.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "cstte/error.hpp"

namespace cstte::aug {

ContrastiveBatch assign_negatives(std::vector<SamplePair> pairs, std::size_t n_neg, num::Rng& rng) {
  const std::size_t b = pairs.size();
  // candidates are the other pairs' queries and positives
  if (!enough_negatives(b, n_neg)) {
    throw ConfigError("batch of " + std::to_string(b) + " pairs cannot supply " +
                      std::to_string(n_neg) + " negatives; use a batch size of at least " +
                      std::to_string(std::max<std::size_t>(2, (n_neg + 3) / 2)));
  }
  ContrastiveBatch batch;
  batch.negatives.resize(b);
  std::vector<std::size_t> pool;
  pool.reserve(2 * b);
  for (std::size_t i = 0; i < b; ++i) {
    pool.clear();
    for (std::size_t j = 0; j < 2 * b; ++j) {
      if (j != i && j != b + i) pool.push_back(j);
    }
    // partial Fisher-Yates
    for (std::size_t k = 0; k < n_neg; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(rng)]);
    }
    batch.negatives[i].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_neg));
  }
  batch.pairs = std::move(pairs);
  return batch;
}

}  // namespace cstte::aug
