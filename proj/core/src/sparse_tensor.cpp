#include "pcar/sparse_tensor.hpp"

#include <stdexcept>

namespace pcar {

CoordMap::CoordMap(std::vector<Coord3> coords) : coords_(std::move(coords)) {
  index_.reserve(coords_.size());
  for (std::uint32_t i = 0; i < coords_.size(); ++i) {
    if (!index_.emplace(coords_[i], i).second) {
      throw std::invalid_argument("CoordMap: duplicate coordinate");
    }
  }
}

std::pair<CoordMapPtr, MergeMap> merge_coordinates(std::span<const Coord3> points) {
  if (points.empty()) {
    throw std::invalid_argument("merge_coordinates: empty input");
  }
  MergeMap merge;
  merge.point_to_voxel.resize(points.size());
  std::vector<Coord3> unique_coords;
  std::unordered_map<Coord3, std::uint32_t, Coord3Hash> seen;
  seen.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto [it, inserted] = seen.emplace(points[i], static_cast<std::uint32_t>(unique_coords.size()));
    if (inserted) {
      unique_coords.push_back(points[i]);
      merge.voxel_counts.push_back(0);
    }
    merge.point_to_voxel[i] = it->second;
    ++merge.voxel_counts[it->second];
  }
  return {std::make_shared<CoordMap>(std::move(unique_coords)), std::move(merge)};
}

std::vector<Coord3> voxelize_positions(std::span<const Vec3> positions) {
  std::vector<Coord3> out;
  out.reserve(positions.size());
  for (const Vec3& p : positions) {
    out.push_back(Coord3{floor_to_int(p.x), floor_to_int(p.y), floor_to_int(p.z)});
  }
  return out;
}

}  // namespace pcar
