#include "cstte/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cstte::num {

namespace {
// Tensors whose true gradient vanishes (e.g. a bias under a softmax) would
// otherwise divide rounding noise by zero. The stencil's own noise is about
// eps·|L|/h, so gradients below 1e6 times that are compared near-absolutely.
constexpr double kScaleFloor = 1e-6;
constexpr double kNoiseMargin = 1e6;
}  // namespace

std::vector<TensorGradError> compare_with_finite_differences(std::vector<Parameter*> params,
                                                             const LossBuilder& loss, double h) {
  std::vector<std::optional<Array>> saved;
  saved.reserve(params.size());
  for (auto* p : params) {
    saved.push_back(std::move(p->grad));
    p->grad.reset();
  }

  {
    Tape tape;
    tape.backward(loss(tape));
  }
  std::vector<Array> analytic;
  for (auto* p : params) analytic.push_back(p->grad ? *p->grad : Array(p->value.shape(), 0.0));

  auto eval = [&] {
    Tape tape(GradMode::inference);
    return loss(tape).value().item();
  };
  const double noise = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(eval())) / h;
  const double floor = std::max(kScaleFloor, kNoiseMargin * noise);

  std::vector<TensorGradError> out;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    TensorGradError e{p->name};
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double up = eval();
      p->value[i] = orig - h;
      const double down = eval();
      p->value[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      e.max_abs_error = std::max(e.max_abs_error, std::abs(a - numeric));
      e.scale = std::max({e.scale, std::abs(a), std::abs(numeric)});
    }
    e.rel_error = e.max_abs_error / std::max(e.scale, floor);
    out.push_back(e);
  }

  for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = std::move(saved[k]);
  return out;
}

double max_rel_error(const std::vector<TensorGradError>& errors) {
  double m = 0.0;
  for (const auto& e : errors) m = std::max(m, e.rel_error);
  return m;
}

}  // namespace cstte::num
