#pragma once

#include <cstddef>

#include "pcar/point_cloud.hpp"
#include "pcar/sampler.hpp"
#include "pcar/unet.hpp"

namespace pcar {

struct PipelineConfig {
  SamplerConfig sampler;
  int workers = 0;  // 0 = hardware concurrency
};

struct DenoiseStats {
  std::size_t requested_patches = 0;  // N from patch_count
  std::size_t used_patches = 0;       // after clamping and thin-patch filtering
  std::size_t covered_points = 0;
  double seconds = 0.0;
};

// sample -> infer per patch -> denormalize -> aggregate. Patch inference is
// parallel over `workers` threads; contributions are concatenated in patch
// order, so the output is independent of the worker count.
PointCloud denoise_cloud(const Network& net, const PointCloud& noisy,
                         const PipelineConfig& cfg, DenoiseStats* stats = nullptr);

}  // namespace pcar
