#include "cstte/numcore/adam.hpp"

#include <cmath>

#include "cstte/error.hpp"

namespace cstte::num {

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  for (const auto* p : params) {
    if (!p->grad) throw ContractError("adam_step: parameter '" + p->name + "' has no gradient");
  }
  const auto& o = state.options;
  const auto step = ++state.step_count;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(step));
  for (auto* p : params) {
    auto [m_it, m_new] = state.first_moment.try_emplace(p->name, p->value.shape(), 0.0);
    auto [v_it, v_new] = state.second_moment.try_emplace(p->name, p->value.shape(), 0.0);
    auto m = m_it->second.values();
    auto v = v_it->second.values();
    auto w = p->value.values();
    const auto g = p->grad->values();
    if (m.size() != w.size() || v.size() != w.size()) {
      throw DimensionError("adam_step: optimizer state for '" + p->name + "' has wrong shape");
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= o.learning_rate * mhat / (std::sqrt(vhat) + o.epsilon);
    }
    p->zero_grad();
  }
}

}  // namespace cstte::num
