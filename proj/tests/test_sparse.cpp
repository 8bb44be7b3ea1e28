#include <doctest.h>

#include <algorithm>
#include <map>

#include "pcar/random.hpp"
#include "pcar/sparse_tensor.hpp"
#include "support/synthetic.hpp"

using namespace pcar;
namespace pt = pcar::testing;

TEST_CASE("voxelize_positions floors each axis") {
  const std::vector<Vec3> pts{{0.0, 0.9, 1.0}, {-0.1, -1.0, 2.5}, {3.999, 4.0, -2.7}};
  const auto v = voxelize_positions(pts);
  CHECK(v[0] == Coord3{0, 0, 1});
  CHECK(v[1] == Coord3{-1, -1, 2});
  CHECK(v[2] == Coord3{3, 4, -3});
}

TEST_CASE("merge_coordinates keeps first-appearance order and exact counts") {
  const std::vector<Coord3> pts{{1, 1, 1}, {0, 0, 0}, {1, 1, 1}, {2, 0, 0}, {0, 0, 0}, {1, 1, 1}};
  const auto [coords, merge] = merge_coordinates(pts);
  REQUIRE(coords->size() == 3);
  CHECK(coords->coords()[0] == Coord3{1, 1, 1});
  CHECK(coords->coords()[1] == Coord3{0, 0, 0});
  CHECK(coords->coords()[2] == Coord3{2, 0, 0});
  CHECK(merge.point_to_voxel == std::vector<std::uint32_t>{0, 1, 0, 2, 1, 0});
  CHECK(merge.voxel_counts == std::vector<std::uint32_t>{3, 2, 1});
  CHECK(merge.point_count() == 6);
  CHECK(merge.voxel_count() == 3);
}

TEST_CASE("merge_coordinates agrees with a map-based census") {
  Rng rng(19);
  std::vector<Coord3> pts;
  for (int i = 0; i < 500; ++i) {
    pts.push_back(Coord3{int(rng.uniform_int(0, 7)), int(rng.uniform_int(0, 7)),
                         int(rng.uniform_int(0, 7))});
  }
  const auto [coords, merge] = merge_coordinates(pts);

  std::map<std::array<int, 3>, std::size_t> census;
  for (const Coord3& c : pts) ++census[{c.x, c.y, c.z}];
  CHECK(coords->size() == census.size());
  REQUIRE(merge.voxel_counts.size() == census.size());
  for (std::size_t v = 0; v < coords->size(); ++v) {
    const Coord3 c = coords->coords()[v];
    CHECK(merge.voxel_counts[v] == census.at({c.x, c.y, c.z}));
  }
  // every point maps to the voxel that holds its coordinate
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(coords->coords()[merge.point_to_voxel[i]] == pts[i]);
  }
  CHECK_THROWS_AS(merge_coordinates(std::span<const Coord3>{}), std::invalid_argument);
}

TEST_CASE("CoordMap::row_of inverts the coordinate list") {
  const std::vector<Coord3> pts{{0, 0, 0}, {5, -3, 2}, {-7, 7, 0}};
  const CoordMap map(pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(map.row_of(pts[i]) == static_cast<std::int64_t>(i));
  }
  CHECK(map.row_of(Coord3{9, 9, 9}) == -1);
  CHECK_THROWS_AS(CoordMap(std::vector<Coord3>{{1, 1, 1}, {1, 1, 1}}),
                  std::invalid_argument);
}

TEST_CASE("floor_div rounds toward negative infinity") {
  CHECK(floor_div(5, 2) == 2);
  CHECK(floor_div(4, 2) == 2);
  CHECK(floor_div(-1, 2) == -1);
  CHECK(floor_div(-4, 2) == -2);
  CHECK(floor_div(-5, 2) == -3);
  CHECK(floor_div(0, 2) == 0);
}
