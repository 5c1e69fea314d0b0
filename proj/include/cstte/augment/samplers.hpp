#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cstte/numcore/random.hpp"

namespace cstte::aug {

/// Query and positive as ascending 0-based record positions of one source
/// trajectory; apply with traj::take.
struct SamplePair {
  std::vector<std::size_t> query;
  std::vector<std::size_t> positive;
  std::size_t source = 0;  // caller-defined index of the source trajectory

  friend bool operator==(const SamplePair&, const SamplePair&) = default;
};

enum class Sampler { two_hop, random, adjacent, overlap, subsume };

Sampler parse_sampler(std::string_view name);  // ConfigError on unknown names
std::string to_string(Sampler s);

/// Shortest trajectory each sampler accepts.
std::size_t min_length(Sampler s);

/// Odd positions (1st, 3rd, ...) vs even positions (2nd, 4th, ...).
/// nullopt when n < 4.
std::optional<SamplePair> two_hop_split(std::size_t n);

/// Two independent Bernoulli(keep_prob) subsets. Redraws while a side has
/// fewer than 2 records, at most `max_tries` times.
std::optional<SamplePair> sample_random(std::size_t n, double keep_prob, num::Rng& rng,
                                        std::size_t max_tries = 16);

/// Cut c uniform on [2, n-2] (1-based): records 1..c vs c+1..n.
std::optional<SamplePair> sample_adjacent(std::size_t n, num::Rng& rng);

/// Windows [a1,b1], [a2,b2] with a1 < a2 <= b1 < b2, uniform over all such
/// quadruples. Query is the earlier window.
std::optional<SamplePair> sample_overlap(std::size_t n, num::Rng& rng);

/// Long window (>= 4 records) uniform over all windows, then a short window
/// (>= 2 records) uniform over proper sub-windows. Query is the long one.
std::optional<SamplePair> sample_subsume(std::size_t n, num::Rng& rng);

struct AugmentOptions {
  Sampler sampler = Sampler::two_hop;
  double keep_prob = 0.5;
  std::size_t max_tries = 16;
};

std::optional<SamplePair> draw_pair(const AugmentOptions& opts, std::size_t n, num::Rng& rng);

}  // namespace cstte::aug
