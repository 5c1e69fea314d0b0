#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "cstte/downstream/metrics.hpp"
#include "cstte/trajdata/trajectory.hpp"

namespace cstte::down {

/// First-order location transitions with add-one smoothing:
/// P(j | i) = (c_ij + 1) / (c_i + N_l).
class MarkovChain {
 public:
  explicit MarkovChain(std::size_t n_locations);

  void fit(std::span<const traj::Trajectory> trajs);

  std::size_t n_locations() const { return n_; }
  std::uint64_t count(std::uint32_t from, std::uint32_t to) const;
  std::uint64_t total(std::uint32_t from) const;
  double probability(std::uint32_t from, std::uint32_t to) const;
  std::vector<double> distribution(std::uint32_t from) const;
  /// All locations, most probable first, ties by ascending index.
  std::vector<std::size_t> rank(std::uint32_t from) const;

 private:
  std::size_t n_;
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
  std::vector<std::uint64_t> totals_;
};

/// Scores each input by P(· | last observed location).
RankingResult markov_destination_eval(const MarkovChain& mc,
                                      std::span<const traj::Trajectory> inputs,
                                      std::span<const std::size_t> labels);

}  // namespace cstte::down
