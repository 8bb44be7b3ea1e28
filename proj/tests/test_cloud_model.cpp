#include <doctest.h>

#include <fstream>

#include "pcar/ply_io.hpp"
#include "pcar/random.hpp"
#include "pcar/text_io.hpp"
#include "support/synthetic.hpp"

using namespace pcar;
namespace pt = pcar::testing;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

bool same_positions(const PointCloud& a, const PointCloud& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a.positions[i] == b.positions[i])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("ascii ply reads vertices in file order") {
  const auto dir = pt::scratch_dir("cloud_ascii");
  const auto path = dir / "three.ply";
  write_file(path,
             "ply\n"
             "format ascii 1.0\n"
             "element vertex 3\n"
             "property float x\n"
             "property float y\n"
             "property float z\n"
             "end_header\n"
             "0 0 0\n"
             "1 2 3\n"
             "4 5 6\n");
  const PointCloud c = read_ply(path);
  REQUIRE(c.size() == 3);
  CHECK(c.positions[0] == Vec3{0, 0, 0});
  CHECK(c.positions[1] == Vec3{1, 2, 3});
  CHECK(c.positions[2] == Vec3{4, 5, 6});
  CHECK(c.geometry_type == PlyType::Float);
}

TEST_CASE("write/read round trip is exact for both formats") {
  const auto dir = pt::scratch_dir("cloud_roundtrip");
  const PointCloud cloud = pt::make_random_cloud(1000, 7, 0, 1023, true);

  for (const PlyFormat fmt : {PlyFormat::Ascii, PlyFormat::BinaryLittleEndian}) {
    const auto path = dir / (fmt == PlyFormat::Ascii ? "a.ply" : "b.ply");
    write_ply(cloud, path, fmt);
    const PointCloud back = read_ply(path);
    CHECK(same_positions(cloud, back));
    // and the reread of a rewrite is identical too
    const auto path2 = dir / "again.ply";
    write_ply(back, path2, fmt);
    CHECK(same_positions(read_ply(path2), cloud));
  }
}

TEST_CASE("ascii and binary encodings of one cloud read back equal") {
  const auto dir = pt::scratch_dir("cloud_encodings");
  const PointCloud cloud = pt::make_random_cloud(1000, 11, -200, 900, true);
  write_ply(cloud, dir / "a.ply", PlyFormat::Ascii);
  write_ply(cloud, dir / "b.ply", PlyFormat::BinaryLittleEndian);
  CHECK(same_positions(read_ply(dir / "a.ply"), read_ply(dir / "b.ply")));
}

TEST_CASE("fractional doubles survive the round trip bit-exactly") {
  const auto dir = pt::scratch_dir("cloud_fractional");
  Rng rng(3);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i) {
    pts.push_back({rng.uniform() * 1023, rng.uniform() * 1023, rng.uniform() * 1023});
  }
  const PointCloud cloud = make_cloud(std::move(pts));
  for (const PlyFormat fmt : {PlyFormat::Ascii, PlyFormat::BinaryLittleEndian}) {
    const auto path = dir / "f.ply";
    write_ply(cloud, path, fmt);
    CHECK(same_positions(read_ply(path), cloud));
  }
}

TEST_CASE("payload columns and comments round trip unchanged") {
  const auto dir = pt::scratch_dir("cloud_payload");
  const auto path = dir / "in.ply";
  write_file(path,
             "ply\n"
             "format ascii 1.0\n"
             "comment made by hand\n"
             "element vertex 2\n"
             "property int x\n"
             "property int y\n"
             "property int z\n"
             "property uchar red\n"
             "property uchar green\n"
             "property uchar blue\n"
             "end_header\n"
             "1 2 3 255 0 10\n"
             "4 5 6 1 2 3\n");
  const PointCloud c = read_ply(path);
  REQUIRE(c.size() == 2);
  REQUIRE(c.payload.size() == 3);
  CHECK(c.payload[0].name == "red");
  CHECK(c.payload[0].values == std::vector<double>{255, 1});
  CHECK(c.comments == std::vector<std::string>{"made by hand"});
  CHECK(c.geometry_type == PlyType::Int);

  for (const PlyFormat fmt : {PlyFormat::Ascii, PlyFormat::BinaryLittleEndian}) {
    const auto out = dir / "out.ply";
    write_ply(c, out, fmt);
    const PointCloud back = read_ply(out);
    CHECK(same_positions(back, c));
    REQUIRE(back.payload.size() == 3);
    CHECK(back.payload[0].values == c.payload[0].values);
    CHECK(back.payload[2].values == c.payload[2].values);
    CHECK(back.comments == c.comments);
  }
}

TEST_CASE("writer promotes integer geometry when positions went fractional") {
  const auto dir = pt::scratch_dir("cloud_promote");
  PointCloud c = make_cloud({{1, 2, 3}, {4, 5, 6}});
  c.geometry_type = PlyType::Int;
  c.positions[0].x = 1.5;  // no longer an int
  const auto path = dir / "p.ply";
  write_ply(c, path, PlyFormat::Ascii);
  const PointCloud back = read_ply(path);
  CHECK(back.geometry_type == PlyType::Double);
  CHECK(back.positions[0].x == 1.5);
}

TEST_CASE("single point cloud writes a valid vertex-count-1 file") {
  const auto dir = pt::scratch_dir("cloud_single");
  const auto path = dir / "one.ply";
  write_ply(make_cloud({{9, 8, 7}}), path, PlyFormat::Ascii);
  const std::string text = read_text_file(path);
  CHECK(text.find("element vertex 1") != std::string::npos);
  CHECK(read_ply(path).size() == 1);
}

TEST_CASE("malformed inputs are rejected with located errors") {
  const auto dir = pt::scratch_dir("cloud_errors");

  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_ply(dir / "nope.ply"), PlyError);
  }
  SUBCASE("bad magic") {
    write_file(dir / "bad.ply", "pny\nformat ascii 1.0\nend_header\n");
    CHECK_THROWS_AS(read_ply(dir / "bad.ply"), PlyError);
  }
  SUBCASE("big endian rejected") {
    write_file(dir / "be.ply",
               "ply\nformat binary_big_endian 1.0\nelement vertex 1\n"
               "property float x\nproperty float y\nproperty float z\nend_header\n");
    CHECK_THROWS_WITH_AS(read_ply(dir / "be.ply"),
                         doctest::Contains("big_endian"), PlyError);
  }
  SUBCASE("list property rejected") {
    write_file(dir / "list.ply",
               "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property list uchar int vertex_indices\nend_header\n0\n");
    CHECK_THROWS_AS(read_ply(dir / "list.ply"), PlyError);
  }
  SUBCASE("vertex count / body mismatch carries line number") {
    write_file(dir / "short.ply",
               "ply\nformat ascii 1.0\nelement vertex 2\n"
               "property float x\nproperty float y\nproperty float z\n"
               "end_header\n1 2 3\n");
    CHECK_THROWS_WITH_AS(read_ply(dir / "short.ply"), doctest::Contains("line"),
                         PlyError);
  }
  SUBCASE("unparseable coordinate carries line number") {
    write_file(dir / "garbage.ply",
               "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property float x\nproperty float y\nproperty float z\n"
               "end_header\n1 oops 3\n");
    CHECK_THROWS_WITH_AS(read_ply(dir / "garbage.ply"), doctest::Contains("line 8"),
                         PlyError);
  }
  SUBCASE("non-finite coordinate rejected") {
    write_file(dir / "nan.ply",
               "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property float x\nproperty float y\nproperty float z\n"
               "end_header\nnan 0 0\n");
    CHECK_THROWS_AS(read_ply(dir / "nan.ply"), PlyError);
  }
  SUBCASE("empty cloud write rejected") {
    CHECK_THROWS_AS(write_ply(PointCloud{}, dir / "empty.ply", PlyFormat::Ascii),
                    PlyError);
  }
  SUBCASE("failed writes leave no partial file") {
    const PointCloud c = make_cloud({{1, 2, 3}});
    CHECK_THROWS(write_ply(c, dir / "no-such-dir" / "out.ply", PlyFormat::Ascii));
    CHECK(!std::filesystem::exists(dir / "no-such-dir" / "out.ply"));
  }
}

TEST_CASE("bounding box equals an exhaustive scan") {
  SUBCASE("hand pair") {
    const auto bb = bounding_box(make_cloud({{0, 0, 0}, {1, 2, 3}}));
    CHECK(bb.min == Vec3{0, 0, 0});
    CHECK(bb.max == Vec3{1, 2, 3});
  }
  SUBCASE("single point") {
    const auto bb = bounding_box(make_cloud({{4, -5, 6}}));
    CHECK(bb.min == bb.max);
    CHECK(bb.min == Vec3{4, -5, 6});
  }
  SUBCASE("random points vs brute force") {
    const PointCloud c = pt::make_random_cloud(100, 21, -50, 50, false);
    Vec3 lo = c.positions[0];
    Vec3 hi = c.positions[0];
    for (const Vec3& p : c.positions) {
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    }
    const auto bb = bounding_box(c);
    CHECK(bb.min == lo);
    CHECK(bb.max == hi);
  }
  SUBCASE("empty cloud throws") {
    CHECK_THROWS_AS(bounding_box(PointCloud{}), std::invalid_argument);
  }
}

TEST_CASE("large cloud round trip") {
  const auto dir = pt::scratch_dir("cloud_large");
  const PointCloud cloud = pt::make_random_cloud(200000, 5, 0, 1023, true);
  const auto path = dir / "big.ply";
  write_ply(cloud, path, PlyFormat::BinaryLittleEndian);
  CHECK(same_positions(read_ply(path), cloud));
}
