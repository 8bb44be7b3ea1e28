#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "pcar/geometry.hpp"
#include "pcar/point_cloud.hpp"

namespace pcar {

// Cube patch in its normalized frame. Positions live in [0, side)^3; the cube
// low corner (origin) anchors the normalization, so denormalizing is a single
// exact add. The origin is snapped to the half-voxel grid, which keeps
// normalize/denormalize bit-exact on voxel clouds.
struct Patch {
  std::vector<Vec3> positions;
  std::vector<std::size_t> source_indices;
  Vec3 origin;
  double side = 0.0;

  Vec3 center() const { return {origin.x + side / 2, origin.y + side / 2, origin.z + side / 2}; }
  std::size_t size() const { return positions.size(); }
};

// Noisy/ground-truth patches cut from one cube region. Point counts may
// differ; that is the point of fixed-volume extraction.
struct PatchPair {
  Patch noisy;
  Patch clean;
};

struct SamplerConfig {
  std::size_t k = 10000;        // target mean points per patch
  std::size_t overlap_c = 20;   // C, mean overlapping patches per point
  std::optional<double> cube_side;  // L; derived from density when absent
  std::size_t seed_index = 0;   // first FPS pick
  std::size_t min_points = 8;   // pairs thinner than this are skipped
};

// N = ceil(n * C / k). Throws on zero inputs.
std::size_t patch_count(std::size_t n, std::size_t overlap_c, std::size_t k);

// Greedy max-min-distance sampling. First pick is seed_index; every later
// pick maximizes the minimum distance to the selected set, ties broken by
// lowest index. Deterministic.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud,
                                               std::size_t count,
                                               std::size_t seed_index);

// Cube side from mean density: L = cbrt(k / rho), rho = n / bbox volume,
// rounded to whole voxels and clamped to [1, max extent]. Degenerate
// (zero-volume) boxes fall back to max extent / 8.
double derive_cube_side(const PointCloud& cloud, std::size_t k);

// All points p with origin <= p < origin + side componentwise, where origin
// is center - side/2 snapped to the half-voxel grid. Positions are stored as
// p - origin. Empty patches are legal.
Patch extract_cube_patch(const PointCloud& cloud, const Vec3& center, double side);

// Both patches cut from the identical cube.
PatchPair extract_patch_pair(const PointCloud& noisy, const PointCloud& clean,
                             const Vec3& center, double side);

// Bins a cloud once so repeated cube queries skip the full scan. Output is
// identical to extract_cube_patch.
class PatchExtractor {
 public:
  PatchExtractor(const PointCloud& cloud, double side_hint);
  Patch extract(const Vec3& center, double side) const;

 private:
  const PointCloud& cloud_;
  double cell_;
  std::unordered_map<Coord3, std::vector<std::uint32_t>, Coord3Hash> cells_;
};

struct SampleResult {
  std::vector<PatchPair> pairs;
  double side = 0.0;
  std::size_t requested = 0;  // N from patch_count before clamping/filtering
  std::size_t skipped_thin = 0;
};

// FPS on the noisy cloud, pairs cut from both clouds at the sampled centers.
// Pairs with fewer than cfg.min_points on either side are dropped.
SampleResult sample_patch_pairs(const PointCloud& noisy, const PointCloud& clean,
                                const SamplerConfig& cfg);

// Inference-side sampling: no ground truth, same center selection.
struct SinglesResult {
  std::vector<Patch> patches;
  double side = 0.0;
  std::size_t requested = 0;
  std::size_t skipped_thin = 0;
};
SinglesResult sample_patches(const PointCloud& noisy, const SamplerConfig& cfg);

// Training-set cache: per-patch PLY pairs plus a line-oriented manifest
// (origin, side, source indices) under dir.
void write_patch_set(const std::filesystem::path& dir,
                     std::span<const PatchPair> pairs, double side);
std::vector<PatchPair> read_patch_set(const std::filesystem::path& manifest_path);

}  // namespace pcar
