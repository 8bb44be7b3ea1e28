#include "pcar/point_cloud.hpp"

#include <stdexcept>

namespace pcar {

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::Char:
    case PlyType::UChar: return 1;
    case PlyType::Short:
    case PlyType::UShort: return 2;
    case PlyType::Int:
    case PlyType::UInt:
    case PlyType::Float: return 4;
    case PlyType::Double: return 8;
  }
  return 0;
}

const char* ply_type_name(PlyType t) {
  switch (t) {
    case PlyType::Char: return "char";
    case PlyType::UChar: return "uchar";
    case PlyType::Short: return "short";
    case PlyType::UShort: return "ushort";
    case PlyType::Int: return "int";
    case PlyType::UInt: return "uint";
    case PlyType::Float: return "float";
    case PlyType::Double: return "double";
  }
  return "?";
}

PointCloud make_cloud(std::vector<Vec3> positions) {
  PointCloud cloud;
  cloud.positions = std::move(positions);
  return cloud;
}

BoundingBox bounding_box(const PointCloud& cloud) {
  if (cloud.empty()) {
    throw std::invalid_argument("bounding_box: empty point cloud");
  }
  BoundingBox box{cloud.positions[0], cloud.positions[0]};
  for (const Vec3& p : cloud.positions) {
    for (int a = 0; a < 3; ++a) {
      box.min[a] = std::min(box.min[a], p[a]);
      box.max[a] = std::max(box.max[a], p[a]);
    }
  }
  return box;
}

}  // namespace pcar
