#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cstte/numcore/array.hpp"

namespace cstte::down {

/// Acc@N as fractions in [0, 1]; macro-F1 likewise.
struct Metrics {
  double acc1 = 0.0, acc5 = 0.0, acc10 = 0.0, acc20 = 0.0;
  double macro_f1 = 0.0;
  std::size_t queries = 0;
};

/// 1-based rank of `target` when scores are sorted descending with ties
/// broken by ascending index.
std::size_t rank_of(std::span<const double> scores, std::size_t target);

/// Highest score, lowest index among ties.
std::size_t top1(std::span<const double> scores);

/// All indices, descending score, ties by ascending index.
std::vector<std::size_t> ranking(std::span<const double> scores);

/// Fraction of ranks <= n.
double accuracy_at(std::span<const std::size_t> ranks, std::size_t n);

/// Unweighted mean per-class F1 over classes that occur in `truth` or
/// `predicted`; classes absent from both are excluded.
double macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted);

Metrics summarize(std::span<const std::size_t> ranks, std::span<const std::size_t> truth,
                  std::span<const std::size_t> predicted);

/// Per-query ranks and top-1 predictions of a score table.
struct RankingResult {
  std::vector<std::size_t> ranks;  // rank of the true answer, 1-based
  std::vector<std::size_t> top1;
  std::vector<std::size_t> truth;
  Metrics metrics;
};

/// Row i of `scores` [Q×C] scores the candidates of query i; truth[i] is
/// its correct column.
RankingResult evaluate_scores(const num::Array& scores, std::span<const std::size_t> truth);

}  // namespace cstte::down
