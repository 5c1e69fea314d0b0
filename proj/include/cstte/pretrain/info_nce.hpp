#pragma once

#include <span>

#include "cstte/augment/batch.hpp"
#include "cstte/numcore/tape.hpp"

namespace cstte::pre {

/// -log softmax of the positive among {k_pos} ∪ negatives, with logits
/// q·k/tau. Vectors are [1×d] rows. ConfigError when tau <= 0.
num::Var info_nce(num::Var q, num::Var k_pos, std::span<const num::Var> k_negs, double tau);

/// Mean InfoNCE over a batch. `embeddings` is [2B×d]: queries then
/// positives, the layout negatives refer to. With `cosine` the rows are
/// L2-normalised first.
num::Var batch_info_nce(num::Var embeddings, const aug::ContrastiveBatch& batch, double tau,
                        bool cosine = false);

}  // namespace cstte::pre
