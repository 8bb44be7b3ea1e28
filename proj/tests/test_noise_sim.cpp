#include <doctest.h>

#include <cmath>
#include <set>

#include "pcar/noise_sim.hpp"
#include "pcar/random.hpp"
#include "pcar/text_io.hpp"
#include "support/synthetic.hpp"

using namespace pcar;
namespace pt = pcar::testing;

namespace {

PointCloud plane_cloud(int axis, double level, int extent = 20, double jitter = 0.0,
                       std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<Vec3> pts;
  for (int a = 0; a < extent; ++a) {
    for (int b = 0; b < extent; ++b) {
      Vec3 p;
      p[axis] = level + (jitter > 0 ? (rng.uniform() * 2 - 1) * jitter : 0.0);
      p[(axis + 1) % 3] = a;
      p[(axis + 2) % 3] = b;
      pts.push_back(p);
    }
  }
  return make_cloud(std::move(pts));
}

}  // namespace

TEST_CASE("axis estimation finds the plane normal") {
  for (int axis = 0; axis < 3; ++axis) {
    const PointCloud plane = plane_cloud(axis, 5.0);
    const GridIndex index(plane);
    Rng rng(2);
    for (std::size_t i = 0; i < plane.size(); i += 17) {
      CHECK(estimate_point_axis(plane, index, i, 12, rng) == axis);
    }
  }
}

TEST_CASE("axis estimation survives surface jitter") {
  const PointCloud plane = plane_cloud(2, 0.0, 24, 0.3, 7);
  const GridIndex index(plane);
  Rng rng(3);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    hits += estimate_point_axis(plane, index, i, 12, rng) == 2 ? 1 : 0;
  }
  CHECK(hits >= plane.size() * 95 / 100);
}

TEST_CASE("axis estimation breaks normal-component ties toward the lower axis") {
  // plane x + y = const: normal (1,1,0)/sqrt(2), |nx| == |ny|
  std::vector<Vec3> pts;
  for (int t = -8; t <= 8; ++t) {
    for (int s = 0; s <= 16; ++s) pts.push_back({double(t), double(-t), double(s)});
  }
  const PointCloud diag = make_cloud(std::move(pts));
  CHECK(estimate_point_axis(diag, diag.size() / 2, 12) == 0);
}

TEST_CASE("degenerate neighborhoods fall back to the rng") {
  // every point identical: covariance is zero
  const PointCloud blob = make_cloud(std::vector<Vec3>(60, Vec3{4, 4, 4}));
  const GridIndex index(blob);
  Rng rng(11);
  std::set<int> seen;
  for (std::size_t i = 0; i < blob.size(); ++i) {
    const int a = estimate_point_axis(blob, index, i, 12, rng);
    REQUIRE(a >= 0);
    REQUIRE(a <= 2);
    seen.insert(a);
  }
  CHECK(seen.size() == 3);  // all axes appear over 60 draws
}

TEST_CASE("estimate_point_axis validates neighbors") {
  const PointCloud plane = plane_cloud(0, 1.0, 6);
  CHECK_THROWS_AS(estimate_point_axis(plane, 0, 2), std::invalid_argument);
}

TEST_CASE("noise floors the chosen axis to a qstep multiple") {
  // plane x = 5 holding the worked example point (5, 7, 9)
  const PointCloud plane = plane_cloud(0, 5.0);
  NoiseConfig cfg;
  cfg.qstep = 4.0;
  cfg.drop_duplicates = false;
  NoiseStats stats;
  const PointCloud noisy = inject_noise(plane, cfg, &stats);

  REQUIRE(noisy.size() == plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) {
    CHECK(noisy.positions[i].x == 4.0);  // floor(5/4)*4
    CHECK(noisy.positions[i].y == plane.positions[i].y);
    CHECK(noisy.positions[i].z == plane.positions[i].z);
  }
  // the worked example: (5,7,9) -> (4,7,9)
  std::size_t at = plane.size();
  for (std::size_t i = 0; i < plane.size(); ++i) {
    if (plane.positions[i] == Vec3{5, 7, 9}) at = i;
  }
  REQUIRE(at < plane.size());
  CHECK(noisy.positions[at] == Vec3{4, 7, 9});

  CHECK(stats.axis_counts[0] == plane.size());
  CHECK(stats.axis_counts[1] == 0);
  CHECK(stats.max_displacement == 1.0);
}

TEST_CASE("qstep 1 is the identity on integer clouds") {
  const PointCloud cloud = pt::make_multiplane_cloud(2000, 31);
  NoiseConfig cfg;
  cfg.qstep = 1.0;
  NoiseStats stats;
  const PointCloud noisy = inject_noise(cloud, cfg, &stats);
  REQUIRE(noisy.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(noisy.positions[i] == cloud.positions[i]);
  }
  CHECK(stats.max_displacement == 0.0);
  CHECK(stats.points_out == stats.points_in);
}

TEST_CASE("each point moves along one axis by less than qstep") {
  const PointCloud cloud = pt::make_multiplane_cloud(3000, 37);
  NoiseConfig cfg;
  cfg.qstep = 4.0;
  cfg.drop_duplicates = false;  // keep 1:1 correspondence
  NoiseStats stats;
  const PointCloud noisy = inject_noise(cloud, cfg, &stats);
  REQUIRE(noisy.size() == cloud.size());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    int moved = 0;
    for (int a = 0; a < 3; ++a) {
      const double d = cloud.positions[i][a] - noisy.positions[i][a];
      if (d != 0.0) {
        ++moved;
        CHECK(d > 0.0);  // flooring never raises a coordinate
        CHECK(d < cfg.qstep);
        // landed on the qstep lattice
        CHECK(noisy.positions[i][a] ==
              cfg.qstep * std::floor(cloud.positions[i][a] / cfg.qstep));
      }
    }
    CHECK(moved <= 1);
  }
  CHECK(stats.max_displacement < cfg.qstep);

  // histogram buckets cover each axis's choices
  for (int a = 0; a < 3; ++a) {
    REQUIRE(stats.disp_hist[a].size() == 4);
    std::size_t total = 0;
    for (const std::size_t c : stats.disp_hist[a]) total += c;
    CHECK(total == stats.axis_counts[a]);
  }
  CHECK(stats.axis_counts[0] + stats.axis_counts[1] + stats.axis_counts[2] ==
        cloud.size());
}

TEST_CASE("duplicate collapse keeps first occurrences") {
  // two parallel plates one voxel apart collapse onto the same plane
  std::vector<Vec3> pts;
  for (int x = 0; x < 12; ++x) {
    for (int y = 0; y < 12; ++y) {
      pts.push_back({double(x), double(y), 5.0});
      pts.push_back({double(x), double(y), 6.0});
    }
  }
  const PointCloud stack = make_cloud(std::move(pts));

  NoiseConfig cfg;
  cfg.qstep = 4.0;
  NoiseStats stats;
  const PointCloud collapsed = inject_noise(stack, cfg, &stats);
  CHECK(stats.points_in == stack.size());
  CHECK(collapsed.size() < stack.size());
  CHECK(collapsed.size() == stats.points_out);
  // every survivor is unique
  std::set<std::array<double, 3>> uniq;
  for (const Vec3& p : collapsed.positions) {
    CHECK(uniq.insert({p.x, p.y, p.z}).second);
  }

  NoiseConfig keep = cfg;
  keep.drop_duplicates = false;
  const PointCloud kept = inject_noise(stack, keep);
  CHECK(kept.size() == stack.size());
}

TEST_CASE("noise injection is deterministic") {
  const PointCloud cloud = pt::make_multiplane_cloud(1200, 41);
  NoiseConfig cfg;
  cfg.qstep = 4.0;
  cfg.axis_mode = AxisMode::Random;
  cfg.seed = 5;
  const PointCloud a = inject_noise(cloud, cfg);
  const PointCloud b = inject_noise(cloud, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.positions[i] == b.positions[i]);

  cfg.seed = 6;
  const PointCloud c = inject_noise(cloud, cfg);
  bool differs = c.size() != a.size();
  for (std::size_t i = 0; !differs && i < std::min(a.size(), c.size()); ++i) {
    differs = !(a.positions[i] == c.positions[i]);
  }
  CHECK(differs);
}

TEST_CASE("random axis mode spreads over all axes") {
  const PointCloud cloud = pt::make_random_cloud(600, 43, 0, 40, true);
  NoiseConfig cfg;
  cfg.qstep = 4.0;
  cfg.axis_mode = AxisMode::Random;
  cfg.drop_duplicates = false;
  NoiseStats stats;
  inject_noise(cloud, cfg, &stats);
  for (int a = 0; a < 3; ++a) CHECK(stats.axis_counts[a] > cloud.size() / 6);
}

TEST_CASE("noise is invertible from the per-point displacement") {
  // reconstruct the original by adding the displacement back: confirms the
  // degradation only ever removes information along one known axis
  const PointCloud cloud = pt::make_multiplane_cloud(800, 47);
  NoiseConfig cfg;
  cfg.qstep = 4.0;
  cfg.drop_duplicates = false;
  const PointCloud noisy = inject_noise(cloud, cfg);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 disp = cloud.positions[i] - noisy.positions[i];
    CHECK(noisy.positions[i] + disp == cloud.positions[i]);
  }
}

TEST_CASE("inject_noise validates its inputs") {
  const PointCloud cloud = pt::make_random_cloud(20, 49, 0, 10, true);
  NoiseConfig bad;
  bad.qstep = 0.5;
  CHECK_THROWS_AS(inject_noise(cloud, bad), std::invalid_argument);
  NoiseConfig cfg;
  CHECK_THROWS_AS(inject_noise(PointCloud{}, cfg), std::invalid_argument);
  NoiseConfig few;
  few.neighbors = 2;
  CHECK_THROWS_AS(inject_noise(cloud, few), std::invalid_argument);
}

TEST_CASE("noise manifest records the run") {
  const auto dir = pt::scratch_dir("noise_manifest");
  const PointCloud cloud = pt::make_multiplane_cloud(500, 53);
  NoiseConfig cfg;
  cfg.qstep = 4.0;
  cfg.seed = 9;
  NoiseStats stats;
  inject_noise(cloud, cfg, &stats);
  write_noise_manifest(dir / "noise.manifest.txt", stats);

  const std::string text = read_text_file(dir / "noise.manifest.txt");
  CHECK(text.rfind("pcar-noise-manifest v1", 0) == 0);
  CHECK(text.find("qstep 4") != std::string::npos);
  CHECK(text.find("seed 9") != std::string::npos);
  CHECK(text.find("axis_mode normal") != std::string::npos);
  CHECK(text.find("points_in 500") != std::string::npos);
  CHECK(text.find("max_displacement") != std::string::npos);
  CHECK(text.find("axis x") != std::string::npos);
  CHECK(text.find("hist z") != std::string::npos);
}

TEST_CASE("axis mode names round trip") {
  for (const AxisMode m : {AxisMode::NormalBased, AxisMode::Random}) {
    CHECK(parse_axis_mode(axis_mode_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_axis_mode("spiral"), std::invalid_argument);
}
