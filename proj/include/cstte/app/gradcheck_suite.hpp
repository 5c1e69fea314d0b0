#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cstte/numcore/gradcheck.hpp"
#include "cstte/numcore/tape.hpp"

namespace cstte::app {

/// A seeded finite-difference case: parameters plus a scalar loss over
/// them. Linear cases are held to the tighter tolerance.
struct GradCase {
  std::string name;
  bool linear = false;
  double tolerance = 1e-4;
  std::shared_ptr<num::ParameterSet> params;
  num::LossBuilder loss;
};

/// Every differentiable operator with extents <= 8, plus the composed
/// encoder + InfoNCE loss on a 3-pair toy batch.
std::vector<GradCase> gradient_cases(std::uint64_t seed = 7);

struct GradCaseResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

std::vector<GradCaseResult> run_gradient_suite(std::uint64_t seed = 7);

}  // namespace cstte::app
