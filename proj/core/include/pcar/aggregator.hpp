#pragma once

#include <span>
#include <vector>

#include "pcar/point_cloud.hpp"
#include "pcar/sampler.hpp"

namespace pcar {

struct Contribution {
  std::size_t source_index;
  Vec3 position;  // cloud frame
};

// Moves patch-frame positions back to the cloud frame (adds the cube
// origin). Exact inverse of extraction for untouched points.
std::vector<Contribution> denormalize_patch(const Patch& patch);

// Mean-aggregates contributions per source index via (sum, count); points
// with no contribution pass through from the original. Output has the
// original's size, order, and payload. Throws on an out-of-range index.
PointCloud aggregate(std::span<const Contribution> contributions,
                     const PointCloud& original);

}  // namespace pcar
