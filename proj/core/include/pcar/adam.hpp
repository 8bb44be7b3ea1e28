#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcar/tensor.hpp"

namespace pcar {

// Standard Adam with bias correction. Moments are laid out parallel to the
// parameter list handed to make_adam_state.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState make_adam_state(std::span<const Tensor> params);

// In-place update. grads[i] must match params[i].count(). Throws on shape
// mismatch; deterministic given identical state and inputs.
void adam_step(std::span<Tensor> params,
               std::span<const std::vector<double>> grads, AdamState& state,
               double lr);

}  // namespace pcar
