#include "cstte/augment/samplers.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <random>

#include "cstte/error.hpp"

namespace cstte::aug {

namespace {

std::vector<std::size_t> range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out(end - begin);
  std::iota(out.begin(), out.end(), begin);
  return out;
}

std::size_t uniform_index(std::size_t n, num::Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

Sampler parse_sampler(std::string_view name) {
  if (name == "two_hop") return Sampler::two_hop;
  if (name == "random") return Sampler::random;
  if (name == "adjacent") return Sampler::adjacent;
  if (name == "overlap") return Sampler::overlap;
  if (name == "subsume") return Sampler::subsume;
  throw ConfigError("unknown augmentation '" + std::string(name) +
                    "' (expected two_hop, random, adjacent, overlap or subsume)");
}

std::string to_string(Sampler s) {
  switch (s) {
    case Sampler::two_hop:
      return "two_hop";
    case Sampler::random:
      return "random";
    case Sampler::adjacent:
      return "adjacent";
    case Sampler::overlap:
      return "overlap";
    case Sampler::subsume:
      return "subsume";
  }
  return "?";
}

std::size_t min_length(Sampler s) {
  switch (s) {
    case Sampler::random:
      return 2;
    case Sampler::overlap:
      return 3;
    default:
      return 4;
  }
}

std::optional<SamplePair> two_hop_split(std::size_t n) {
  if (n < 4) return std::nullopt;
  SamplePair p;
  for (std::size_t i = 0; i < n; ++i) (i % 2 == 0 ? p.query : p.positive).push_back(i);
  return p;
}

std::optional<SamplePair> sample_random(std::size_t n, double keep_prob, num::Rng& rng,
                                        std::size_t max_tries) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ConfigError("keep_prob must be in (0, 1]");
  if (n < 2) return std::nullopt;
  std::bernoulli_distribution keep(keep_prob);
  for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
    SamplePair p;
    for (std::size_t i = 0; i < n; ++i) {
      if (keep(rng)) p.query.push_back(i);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (keep(rng)) p.positive.push_back(i);
    }
    if (p.query.size() >= 2 && p.positive.size() >= 2) return p;
  }
  return std::nullopt;
}

std::optional<SamplePair> sample_adjacent(std::size_t n, num::Rng& rng) {
  if (n < 4) return std::nullopt;
  const std::size_t c = std::uniform_int_distribution<std::size_t>(2, n - 2)(rng);
  return SamplePair{range(0, c), range(c, n), 0};
}

std::optional<SamplePair> sample_overlap(std::size_t n, num::Rng& rng) {
  if (n < 3) return std::nullopt;
  // uniform 4-subset x1<x2<x3<x4 of {1..n+1} maps one-to-one onto
  // a1=x1, a2=x2, b1=x3-1, b2=x4-1
  std::array<std::size_t, 4> x{};
  for (std::size_t k = 0; k < 4;) {
    const std::size_t v = 1 + uniform_index(n + 1, rng);
    if (std::find(x.begin(), x.begin() + k, v) == x.begin() + k) x[k++] = v;
  }
  std::sort(x.begin(), x.end());
  const std::size_t a1 = x[0], a2 = x[1], b1 = x[2] - 1, b2 = x[3] - 1;
  return SamplePair{range(a1 - 1, b1), range(a2 - 1, b2), 0};
}

std::optional<SamplePair> sample_subsume(std::size_t n, num::Rng& rng) {
  if (n < 4) return std::nullopt;
  // long window: uniform over (A, B) with B - A >= 3
  std::size_t k = uniform_index((n - 3) * (n - 2) / 2, rng);
  std::size_t len = 4;
  while (k >= n - len + 1) {
    k -= n - len + 1;
    ++len;
  }
  const std::size_t A = k, B = k + len - 1;  // 0-based, inclusive
  // short window: uniform over a < b inside [A, B], excluding (A, B) itself
  std::size_t j = uniform_index(len * (len - 1) / 2 - 1, rng);
  std::size_t a = A, b = A + 1;
  for (std::size_t i = 0;; ++i) {
    std::size_t lo = A + i;
    std::size_t count = B - lo;  // choices of b in (lo, B]
    if (lo == A) --count;        // drop b == B
    if (j < count) {
      a = lo;
      b = lo + 1 + j;
      break;
    }
    j -= count;
  }
  return SamplePair{range(A, B + 1), range(a, b + 1), 0};
}

std::optional<SamplePair> draw_pair(const AugmentOptions& opts, std::size_t n, num::Rng& rng) {
  switch (opts.sampler) {
    case Sampler::two_hop:
      return two_hop_split(n);
    case Sampler::random:
      return sample_random(n, opts.keep_prob, rng, opts.max_tries);
    case Sampler::adjacent:
      return sample_adjacent(n, rng);
    case Sampler::overlap:
      return sample_overlap(n, rng);
    case Sampler::subsume:
      return sample_subsume(n, rng);
  }
  return std::nullopt;
}

}  // namespace cstte::aug
