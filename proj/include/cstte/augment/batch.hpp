#pragma once

#include <cstddef>
#include <vector>

#include "cstte/augment/samplers.hpp"
#include "cstte/numcore/random.hpp"

namespace cstte::aug {

/// Pairs plus in-batch negatives. With B pairs the encoded batch is laid
/// out as [query_0..query_{B-1}, positive_0..positive_{B-1}]; a negative is
/// an index into that layout.
struct ContrastiveBatch {
  std::vector<SamplePair> pairs;
  std::vector<std::vector<std::size_t>> negatives;

  std::size_t size() const { return pairs.size(); }
};

/// For each pair draws n_neg distinct references, uniformly without
/// replacement, among the 2(B-1) queries/positives of the other pairs.
/// ConfigError when fewer than n_neg candidates exist.
/// True when a batch of `pairs` pairs can give every pair n_neg negatives.
inline bool enough_negatives(std::size_t pairs, std::size_t n_neg) {
  return pairs >= 2 && 2 * (pairs - 1) >= n_neg;
}

ContrastiveBatch assign_negatives(std::vector<SamplePair> pairs, std::size_t n_neg, num::Rng& rng);

}  // namespace cstte::aug
