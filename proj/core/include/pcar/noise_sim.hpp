#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pcar/grid_index.hpp"
#include "pcar/point_cloud.hpp"
#include "pcar/random.hpp"

namespace pcar {

enum class AxisMode { NormalBased, Random };

AxisMode parse_axis_mode(std::string_view name);
std::string_view axis_mode_name(AxisMode mode);

struct NoiseConfig {
  double qstep = 4.0;  // quantization step, voxel units, >= 1
  AxisMode axis_mode = AxisMode::NormalBased;
  bool drop_duplicates = true;
  std::uint64_t seed = 1;
  int neighbors = 12;  // PCA neighborhood size
};

// Audit record written next to the degraded cloud.
struct NoiseStats {
  NoiseConfig config;
  std::size_t points_in = 0;
  std::size_t points_out = 0;
  std::array<std::size_t, 3> axis_counts{};  // chosen axis per point
  double max_displacement = 0.0;
  // Per axis, counts of points by floor(displacement); buckets 0..qstep-1.
  std::array<std::vector<std::size_t>, 3> disp_hist;
};

// Surface-normal axis for one point: PCA over the `neighbors` nearest
// points; the smallest-variance direction is the normal; the axis is its
// largest absolute component (ties -> lowest axis). A degenerate
// neighborhood (all points coincident) falls back to a random axis from
// `rng`. Requires neighbors >= 3.
int estimate_point_axis(const PointCloud& cloud, const GridIndex& index,
                        std::size_t point, int neighbors, Rng& rng);
// Convenience form that builds its own index.
int estimate_point_axis(const PointCloud& cloud, std::size_t point,
                        int neighbors, std::uint64_t seed = 1);

// Floors each point's chosen-axis coordinate to a multiple of qstep, leaving
// the other coordinates untouched, then optionally collapses coincident
// points (first occurrence wins). Deterministic under a fixed seed.
PointCloud inject_noise(const PointCloud& cloud, const NoiseConfig& cfg,
                        NoiseStats* stats = nullptr);

void write_noise_manifest(const std::filesystem::path& path,
                          const NoiseStats& stats);

}  // namespace pcar
