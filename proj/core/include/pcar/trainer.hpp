#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "pcar/sampler.hpp"
#include "pcar/unet.hpp"

namespace pcar {

struct TrainResult {
  std::vector<double> losses;  // batch-mean Chamfer loss, one entry per step
};

// Runs cfg.train.steps optimizer steps over the pairs in round-robin order:
// step s consumes pairs (s*batch + i) mod n for i in [0, batch). Per-patch
// gradients are reduced in patch order and averaged, so the trajectory is
// deterministic. Throws on empty pairs; a non-finite loss aborts with a
// diagnostic naming the step.
TrainResult train(Network& net, std::span<const PatchPair> pairs);

// "step,loss" rows, atomic write.
void write_loss_csv(const std::filesystem::path& path,
                    std::span<const double> losses);

}  // namespace pcar
