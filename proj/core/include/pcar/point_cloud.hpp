#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcar/geometry.hpp"

namespace pcar {

// Scalar types a PLY property can declare.
enum class PlyType : std::uint8_t {
  Char,
  UChar,
  Short,
  UShort,
  Int,
  UInt,
  Float,
  Double,
};

std::size_t ply_type_size(PlyType t);
const char* ply_type_name(PlyType t);

// One non-geometry vertex property, carried opaquely for round-trip.
// Every PLY scalar fits a double exactly, so values are stored as doubles
// and re-encoded with the declared type on write.
struct PlyColumn {
  std::string name;
  PlyType type = PlyType::UChar;
  std::vector<double> values;  // one per point
};

// Ordered property layout of the vertex element. geom_axis marks which
// properties are x/y/z (0/1/2); payload properties point into
// PointCloud::payload by column index.
struct PlyVertexLayout {
  struct Prop {
    std::string name;
    PlyType type = PlyType::Double;
    int geom_axis = -1;     // 0/1/2 for x/y/z, -1 for payload
    int payload_column = -1;
  };
  std::vector<Prop> props;
};

// Ordered set of 3D points with stable indices. Point i of a processed cloud
// is point i of the source cloud; duplicates are legal. Treated as immutable
// once built, so it is safe to share across concurrent readers.
struct PointCloud {
  std::vector<Vec3> positions;
  PlyVertexLayout layout;          // empty props => plain x,y,z on write
  std::vector<PlyColumn> payload;  // opaque columns, parallel to positions
  PlyType geometry_type = PlyType::Double;
  std::vector<std::string> comments;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
};

PointCloud make_cloud(std::vector<Vec3> positions);

// Exact componentwise extremes. Throws std::invalid_argument on empty input.
BoundingBox bounding_box(const PointCloud& cloud);

}  // namespace pcar
