#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pcar/point_cloud.hpp"
#include "pcar/sampler.hpp"

namespace pcar::testing {

// Integer-voxel cloud built from axis-aligned square plates in all three
// orientations, the shape class the axis-noise simulator and the one-hot
// head are designed for. Deterministic in the seed.
PointCloud make_multiplane_cloud(std::size_t target_points, std::uint64_t seed,
                                 double extent = 128.0);

// Uniform random points in [lo, hi]^3; integer grid when snap is set.
PointCloud make_random_cloud(std::size_t n, std::uint64_t seed, double lo,
                             double hi, bool snap_to_grid);

// Patch wrapper for hand-built fixtures; bounding cube derived when side <= 0.
Patch make_patch(std::vector<Vec3> positions, Vec3 origin = {0, 0, 0},
                 double side = 0.0);

// Fresh per-test scratch directory under the build tree, cleaned on entry.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace pcar::testing
