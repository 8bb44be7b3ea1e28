#include "pcar/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace pcar {

AdamState make_adam_state(std::span<const Tensor> params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Tensor& p : params) {
    s.m.emplace_back(p.data.size(), 0.0);
    s.v.emplace_back(p.data.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<Tensor> params,
               std::span<const std::vector<double>> grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].data;
    const auto& g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (p.size() != g.size() || p.size() != m.size()) {
      throw std::invalid_argument("adam_step: tensor shape mismatch");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace pcar
