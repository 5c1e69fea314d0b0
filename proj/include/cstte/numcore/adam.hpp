#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "cstte/numcore/tape.hpp"

namespace cstte::num {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moments are keyed by parameter name and created (as zeros) on first use.
struct AdamState {
  AdamOptions options;
  std::uint64_t step_count = 0;
  std::map<std::string, Array> first_moment;
  std::map<std::string, Array> second_moment;
};

/// One bias-corrected Adam update of every parameter, then clears the
/// gradients. Throws ContractError if any parameter lacks a gradient.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace cstte::num
