// Microbenchmarks for the hot paths: nearest-neighbor queries, FPS, patch
// extraction, chamfer, and the sparse conv forward/backward.

#include <benchmark/benchmark.h>

#include <memory>
#include <unordered_map>
#include <vector>

#include "pcar/autograd.hpp"
#include "pcar/chamfer.hpp"
#include "pcar/grid_index.hpp"
#include "pcar/random.hpp"
#include "pcar/sampler.hpp"
#include "pcar/sparse_tensor.hpp"

namespace {

using namespace pcar;

PointCloud random_cloud(std::size_t n, std::uint64_t seed, double extent) {
  Rng rng(seed);
  std::vector<Vec3> pts(n);
  for (Vec3& p : pts) {
    p = {rng.uniform() * extent, rng.uniform() * extent, rng.uniform() * extent};
  }
  return make_cloud(std::move(pts));
}

std::vector<Coord3> random_voxels(std::size_t n, std::uint64_t seed, int extent) {
  Rng rng(seed);
  std::vector<Coord3> out;
  std::unordered_map<Coord3, bool, Coord3Hash> seen;
  while (out.size() < n) {
    Coord3 c{int(rng.uniform_int(0, extent - 1)), int(rng.uniform_int(0, extent - 1)),
             int(rng.uniform_int(0, extent - 1))};
    if (seen.emplace(c, true).second) out.push_back(c);
  }
  return out;
}

void BM_GridNearest(benchmark::State& state) {
  const PointCloud cloud = random_cloud(std::size_t(state.range(0)), 1, 512.0);
  const GridIndex index(cloud);
  Rng rng(2);
  for (auto _ : state) {
    const Vec3 q{rng.uniform() * 512, rng.uniform() * 512, rng.uniform() * 512};
    benchmark::DoNotOptimize(index.nearest_sq_dist(q));
  }
}
BENCHMARK(BM_GridNearest)->Arg(10000)->Arg(100000);

void BM_LinearNearest(benchmark::State& state) {
  const PointCloud cloud = random_cloud(std::size_t(state.range(0)), 1, 512.0);
  Rng rng(2);
  for (auto _ : state) {
    const Vec3 q{rng.uniform() * 512, rng.uniform() * 512, rng.uniform() * 512};
    benchmark::DoNotOptimize(nearest_sq_dist(q, cloud));
  }
}
BENCHMARK(BM_LinearNearest)->Arg(10000)->Arg(100000);

void BM_FarthestPointSample(benchmark::State& state) {
  const PointCloud cloud = random_cloud(20000, 3, 512.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        farthest_point_sample(cloud, std::size_t(state.range(0)), 0));
  }
}
BENCHMARK(BM_FarthestPointSample)->Arg(16)->Arg(128);

void BM_PatchExtract(benchmark::State& state) {
  const PointCloud cloud = random_cloud(100000, 4, 512.0);
  const PatchExtractor ex(cloud, 32.0);
  Rng rng(5);
  for (auto _ : state) {
    const Vec3 c{rng.uniform() * 512, rng.uniform() * 512, rng.uniform() * 512};
    benchmark::DoNotOptimize(ex.extract(c, 32.0));
  }
}
BENCHMARK(BM_PatchExtract);

void BM_ChamferLoss(benchmark::State& state) {
  const std::size_t n = std::size_t(state.range(0));
  const PointCloud a = random_cloud(n, 6, 256.0);
  const PointCloud b = random_cloud(n, 7, 256.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(chamfer_loss(a.positions, b.positions));
  }
}
BENCHMARK(BM_ChamferLoss)->Arg(1024)->Arg(8192);

void BM_SubmanifoldConv(benchmark::State& state) {
  const bool backward = state.range(1) != 0;
  const auto coords = random_voxels(std::size_t(state.range(0)), 8, 64);
  const auto cmap = std::make_shared<CoordMap>(coords);
  const int ch = 16;
  Rng rng(9);
  std::vector<double> feats(coords.size() * ch), w(ag::kSubmanifoldTaps * ch * ch),
      b(ch), loss_w(coords.size() * ch);
  for (double& v : feats) v = rng.uniform() - 0.5;
  for (double& v : w) v = rng.uniform() - 0.5;
  for (double& v : b) v = rng.uniform() - 0.5;
  for (double& v : loss_w) v = rng.uniform() - 0.5;

  for (auto _ : state) {
    ag::Tape tape;
    ag::SparseTensor x;
    x.coords = cmap;
    x.stride = 1;
    x.features = tape.leaf(feats, std::int64_t(coords.size()), ch);
    const auto y = ag::submanifold_conv(tape, x, ch, ch,
                                        tape.leaf(w, ag::kSubmanifoldTaps * ch, ch),
                                        tape.leaf(b, 1, ch));
    if (backward) {
      const auto loss = ag::weighted_sum(tape, y.features, loss_w);
      tape.backward(loss);
      benchmark::DoNotOptimize(tape.grad(x.features).data());
    } else {
      benchmark::DoNotOptimize(tape.value(y.features).data.data());
    }
  }
}
BENCHMARK(BM_SubmanifoldConv)
    ->Args({2000, 0})
    ->Args({2000, 1})
    ->ArgNames({"voxels", "backward"});

}  // namespace

BENCHMARK_MAIN();
