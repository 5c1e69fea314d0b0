#include "cstte/pretrain/info_nce.hpp"

#include <string>
#include <vector>

#include "cstte/error.hpp"
#include "cstte/numcore/ops.hpp"

namespace cstte::pre {

using num::Var;

namespace {
void check_tau(double tau) {
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive, got " + std::to_string(tau));
}
}  // namespace

Var info_nce(Var q, Var k_pos, std::span<const Var> k_negs, double tau) {
  check_tau(tau);
  std::vector<Var> logits{num::matmul(q, num::transpose(k_pos))};
  for (const auto& k : k_negs) logits.push_back(num::matmul(q, num::transpose(k)));
  const std::size_t target[] = {0};
  return num::cross_entropy(num::scale(num::concat_cols(logits), 1.0 / tau), target);
}

Var batch_info_nce(Var embeddings, const aug::ContrastiveBatch& batch, double tau, bool cosine) {
  check_tau(tau);
  const std::size_t b = batch.size();
  if (b == 0) throw ContractError("empty contrastive batch");
  if (embeddings.shape().at(0) != 2 * b) {
    throw DimensionError("batch of " + std::to_string(b) + " pairs needs " + std::to_string(2 * b) +
                         " embedding rows, got " + num::shape_string(embeddings.shape()));
  }
  const std::size_t k = 1 + batch.negatives.front().size();
  std::vector<std::size_t> index;
  index.reserve(b * k);
  for (std::size_t i = 0; i < b; ++i) {
    if (batch.negatives[i].size() + 1 != k) throw ContractError("ragged negative lists");
    index.push_back(b + i);
    index.insert(index.end(), batch.negatives[i].begin(), batch.negatives[i].end());
  }
  if (cosine) embeddings = num::l2_normalize_rows(embeddings);
  const Var queries = num::slice_rows(embeddings, 0, b);
  const Var logits = num::pick_cols(num::matmul(queries, num::transpose(embeddings)), index, k);
  const std::vector<std::size_t> targets(b, 0);
  return num::cross_entropy(num::scale(logits, 1.0 / tau), targets);
}

}  // namespace cstte::pre
