#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cstte/numcore/tape.hpp"

namespace cstte::num {

/// Records a scalar loss on the given tape from the parameters it closes over.
using LossBuilder = std::function<Var(Tape&)>;

struct TensorGradError {
  std::string name;
  double max_abs_error = 0.0;
  double scale = 0.0;      // largest |gradient| of either route
  double rel_error = 0.0;  // max_abs_error / max(scale, 1e-6)
};

/// Compares backward-pass gradients of every parameter with central finite
/// differences (step h). Relative error is taken per tensor, normalised by
/// the tensor's largest gradient magnitude (floored at 1e-6). Leaves
/// parameter values and gradients as they were.
std::vector<TensorGradError> compare_with_finite_differences(std::vector<Parameter*> params,
                                                             const LossBuilder& loss,
                                                             double h = 1e-5);

double max_rel_error(const std::vector<TensorGradError>& errors);

}  // namespace cstte::num
