#include <doctest.h>

#include <algorithm>

#include "pcar/aggregator.hpp"
#include "pcar/random.hpp"
#include "pcar/sampler.hpp"
#include "support/synthetic.hpp"

using namespace pcar;
namespace pt = pcar::testing;

TEST_CASE("denormalize adds the origin back, bit-exactly") {
  Patch p = pt::make_patch({{2, 2, 2}, {0.5, 1.25, 3.0}}, {8, 8, 8}, 4.0);
  p.source_indices = {3, 1};
  const auto contrib = denormalize_patch(p);
  REQUIRE(contrib.size() == 2);
  CHECK(contrib[0].source_index == 3);
  CHECK(contrib[0].position == Vec3{10, 10, 10});
  CHECK(contrib[1].source_index == 1);
  CHECK(contrib[1].position == Vec3{8.5, 9.25, 11.0});
}

TEST_CASE("extraction then denormalization is the identity") {
  const PointCloud cloud = pt::make_multiplane_cloud(2000, 51);
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t ci = rng.uniform_int(0, cloud.size() - 1);
    const Patch patch = extract_cube_patch(cloud, cloud.positions[ci], 15);
    for (const Contribution& c : denormalize_patch(patch)) {
      CHECK(c.position == cloud.positions[c.source_index]);
    }
  }
}

TEST_CASE("aggregate means per point and passes uncovered points through") {
  const PointCloud original = make_cloud({{1, 1, 1}, {5, 5, 5}, {9, 9, 9}});
  const std::vector<Contribution> contribs{
      {0, {0, 0, 0}},
      {0, {0, 0, 3}},
      {0, {0, 0, 0}},
      {2, {9, 9, 10}},
  };
  const PointCloud out = aggregate(contribs, original);
  REQUIRE(out.size() == original.size());
  CHECK(out.positions[0] == Vec3{0, 0, 1});  // mean of three contributions
  CHECK(out.positions[1] == Vec3{5, 5, 5});  // untouched -> original position
  CHECK(out.positions[2] == Vec3{9, 9, 10});
}

TEST_CASE("aggregate preserves size, order and payload") {
  PointCloud original = make_cloud({{0, 0, 0}, {1, 1, 1}, {2, 2, 2}});
  PlyColumn col;
  col.name = "intensity";
  col.type = PlyType::UChar;
  col.values = {7, 8, 9};
  original.payload.push_back(col);
  original.layout.props.resize(4);
  for (int a = 0; a < 3; ++a) {
    original.layout.props[a].name = a == 0 ? "x" : a == 1 ? "y" : "z";
    original.layout.props[a].type = PlyType::Double;
    original.layout.props[a].geom_axis = a;
  }
  original.layout.props[3].name = "intensity";
  original.layout.props[3].type = PlyType::UChar;
  original.layout.props[3].payload_column = 0;

  const std::vector<Contribution> contribs{{1, {1.5, 1.5, 1.5}}};
  const PointCloud out = aggregate(contribs, original);
  REQUIRE(out.size() == 3);
  CHECK(out.positions[1] == Vec3{1.5, 1.5, 1.5});
  REQUIRE(out.payload.size() == 1);
  CHECK(out.payload[0].values == col.values);
  CHECK(out.layout.props.size() == 4);
}

TEST_CASE("aggregate result does not depend on contribution order") {
  const PointCloud original = pt::make_random_cloud(50, 61, 0, 20, true);
  Rng rng(62);
  std::vector<Contribution> contribs;
  for (int i = 0; i < 300; ++i) {
    contribs.push_back({rng.uniform_int(0, 49),
                        {rng.uniform() * 20, rng.uniform() * 20, rng.uniform() * 20}});
  }
  std::vector<Contribution> reversed(contribs.rbegin(), contribs.rend());

  const PointCloud a = aggregate(contribs, original);
  const PointCloud b = aggregate(reversed, original);
  for (std::size_t i = 0; i < a.size(); ++i) {
    // same multiset of addends per index; sums may associate differently
    CHECK(a.positions[i].x == doctest::Approx(b.positions[i].x).epsilon(1e-12));
    CHECK(a.positions[i].y == doctest::Approx(b.positions[i].y).epsilon(1e-12));
    CHECK(a.positions[i].z == doctest::Approx(b.positions[i].z).epsilon(1e-12));
  }
}

TEST_CASE("aggregate rejects out-of-range indices") {
  const PointCloud original = make_cloud({{0, 0, 0}});
  const std::vector<Contribution> bad{{1, {0, 0, 0}}};
  CHECK_THROWS_AS(aggregate(bad, original), std::invalid_argument);
}

TEST_CASE("overlapping patches reassemble a cloud exactly when predictions are exact") {
  // Cut overlapping patches, denormalize them unchanged, aggregate: every
  // covered point is the mean of copies of itself, so the cloud returns
  // bit-exactly.
  const PointCloud cloud = pt::make_multiplane_cloud(1500, 63);
  SamplerConfig cfg;
  cfg.k = 200;
  cfg.overlap_c = 4;
  const SinglesResult r = sample_patches(cloud, cfg);
  REQUIRE(!r.patches.empty());

  std::vector<Contribution> contribs;
  for (const Patch& p : r.patches) {
    const auto c = denormalize_patch(p);
    contribs.insert(contribs.end(), c.begin(), c.end());
  }
  const PointCloud out = aggregate(contribs, cloud);
  REQUIRE(out.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(out.positions[i] == cloud.positions[i]);
  }
}
