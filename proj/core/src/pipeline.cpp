#include "pcar/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "pcar/aggregator.hpp"

namespace pcar {

PointCloud denoise_cloud(const Network& net, const PointCloud& noisy,
                         const PipelineConfig& cfg, DenoiseStats* stats) {
  const auto t0 = std::chrono::steady_clock::now();
  const SinglesResult sampled = sample_patches(noisy, cfg.sampler);

  std::vector<std::vector<Contribution>> per_patch(sampled.patches.size());
  int workers = cfg.workers > 0
                    ? cfg.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min<int>(workers, std::max<int>(1, static_cast<int>(sampled.patches.size())));

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= sampled.patches.size()) break;
      per_patch[i] = denormalize_patch(infer(net, sampled.patches[i]));
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::vector<Contribution> contributions;
  std::size_t total = 0;
  for (const auto& c : per_patch) total += c.size();
  contributions.reserve(total);
  for (const auto& c : per_patch) {
    contributions.insert(contributions.end(), c.begin(), c.end());
  }

  PointCloud cleaned = aggregate(contributions, noisy);

  if (stats) {
    std::vector<bool> covered(noisy.size(), false);
    for (const Contribution& c : contributions) covered[c.source_index] = true;
    stats->requested_patches = sampled.requested;
    stats->used_patches = sampled.patches.size();
    stats->covered_points = static_cast<std::size_t>(
        std::count(covered.begin(), covered.end(), true));
    stats->seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return cleaned;
}

}  // namespace pcar
