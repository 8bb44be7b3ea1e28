#pragma once

#include <span>

#include "pcar/autograd.hpp"
#include "pcar/geometry.hpp"

namespace pcar {

// Sum-form Chamfer distance:
//   sum_{x in a} min_{y in b} |x-y|^2 + sum_{y in b} min_{x in a} |x-y|^2
// Nearest-neighbor ties resolve to the lowest index. Throws on empty sets.
double chamfer_loss(std::span<const Vec3> a, std::span<const Vec3> b);

// Tape node over predicted positions (rows x 3). The target set is constant.
// Gradient flows through the nearest-neighbor selections frozen at forward
// time: d/dx |x - y*|^2 = 2(x - y*) for both directions of the sum.
ag::ValueId chamfer_loss(ag::Tape& tape, ag::ValueId pred,
                         std::span<const Vec3> target);

}  // namespace pcar
