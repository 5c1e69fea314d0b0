#include "cstte/downstream/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "cstte/error.hpp"
#include "cstte/numcore/parallel.hpp"

namespace cstte::down {

std::size_t rank_of(std::span<const double> scores, std::size_t target) {
  if (target >= scores.size()) throw ContractError("rank_of: target out of range");
  const double s = scores[target];
  std::size_t ahead = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > s || (scores[j] == s && j < target)) ++ahead;
  }
  return ahead + 1;
}

std::size_t top1(std::span<const double> scores) {
  if (scores.empty()) throw ContractError("top1 of an empty score vector");
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  return best;
}

std::vector<std::size_t> ranking(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

double accuracy_at(std::span<const std::size_t> ranks, std::size_t n) {
  if (ranks.empty()) return 0.0;
  const auto hits =
      std::count_if(ranks.begin(), ranks.end(), [&](std::size_t r) { return r <= n; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) throw ContractError("macro_f1: length mismatch");
  struct Tally {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::size_t, Tally> classes;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) {
      ++classes[truth[i]].tp;
    } else {
      ++classes[truth[i]].fn;
      ++classes[predicted[i]].fp;
    }
  }
  if (classes.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [cls, t] : classes) {
    total += 2.0 * static_cast<double>(t.tp) / static_cast<double>(2 * t.tp + t.fp + t.fn);
  }
  return total / static_cast<double>(classes.size());
}

Metrics summarize(std::span<const std::size_t> ranks, std::span<const std::size_t> truth,
                  std::span<const std::size_t> predicted) {
  Metrics m;
  m.queries = ranks.size();
  m.acc1 = accuracy_at(ranks, 1);
  m.acc5 = accuracy_at(ranks, 5);
  m.acc10 = accuracy_at(ranks, 10);
  m.acc20 = accuracy_at(ranks, 20);
  m.macro_f1 = macro_f1(truth, predicted);
  return m;
}

RankingResult evaluate_scores(const num::Array& scores, std::span<const std::size_t> truth) {
  const std::size_t q = scores.rows();
  if (scores.rank() != 2 || truth.size() != q) {
    throw DimensionError("score table " + num::shape_string(scores.shape()) + " vs " +
                         std::to_string(truth.size()) + " labels");
  }
  RankingResult r;
  r.ranks.resize(q);
  r.top1.resize(q);
  r.truth.assign(truth.begin(), truth.end());
  num::parallel_for(q, 16, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      r.ranks[i] = rank_of(scores.row(i), truth[i]);
      r.top1[i] = top1(scores.row(i));
    }
  });
  r.metrics = summarize(r.ranks, r.truth, r.top1);
  return r;
}

}  // namespace cstte::down
