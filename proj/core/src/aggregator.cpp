#include "pcar/aggregator.hpp"

#include <stdexcept>

namespace pcar {

std::vector<Contribution> denormalize_patch(const Patch& patch) {
  std::vector<Contribution> out;
  out.reserve(patch.size());
  for (std::size_t i = 0; i < patch.size(); ++i) {
    out.push_back({patch.source_indices[i], patch.positions[i] + patch.origin});
  }
  return out;
}

PointCloud aggregate(std::span<const Contribution> contributions,
                     const PointCloud& original) {
  std::vector<Vec3> sums(original.size(), Vec3{0, 0, 0});
  std::vector<std::uint32_t> counts(original.size(), 0);
  for (const Contribution& c : contributions) {
    if (c.source_index >= original.size()) {
      throw std::invalid_argument("aggregate: source index " +
                                  std::to_string(c.source_index) +
                                  " out of range");
    }
    sums[c.source_index] += c.position;
    counts[c.source_index] += 1;
  }

  PointCloud out = original;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (counts[i] == 0) continue;
    // true division: k identical contributions average back bit-exactly
    const double k = counts[i];
    out.positions[i] = {sums[i].x / k, sums[i].y / k, sums[i].z / k};
  }
  return out;
}

}  // namespace pcar
