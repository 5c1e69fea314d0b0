#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include "cstte/numcore/array.hpp"

namespace cstte::num {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream coordinates (epoch, trajectory, ...) into an
/// independent seed. splitmix64 finaliser applied per component.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

/// Stable 64-bit hash of a string (FNV-1a), for deriving per-id streams.
std::uint64_t hash_string(std::string_view s);

/// Uniform on [-bound, bound].
Array uniform_array(Shape shape, double bound, Rng& rng);

}  // namespace cstte::num
