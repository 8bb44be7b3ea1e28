#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "pcar/geometry.hpp"

namespace pcar {

// Immutable coordinate set with a hash lookup, shared between every tensor
// that lives at the same pyramid level.
class CoordMap {
 public:
  explicit CoordMap(std::vector<Coord3> coords);

  std::size_t size() const { return coords_.size(); }
  const std::vector<Coord3>& coords() const { return coords_; }
  // Row of a coordinate, or -1 when unoccupied.
  std::int64_t row_of(const Coord3& c) const {
    auto it = index_.find(c);
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
  }

 private:
  std::vector<Coord3> coords_;
  std::unordered_map<Coord3, std::uint32_t, Coord3Hash> index_;
};

using CoordMapPtr = std::shared_ptr<const CoordMap>;

// Point index -> voxel row, produced when duplicate coordinates merge.
struct MergeMap {
  std::vector<std::uint32_t> point_to_voxel;
  std::vector<std::uint32_t> voxel_counts;

  std::size_t point_count() const { return point_to_voxel.size(); }
  std::size_t voxel_count() const { return voxel_counts.size(); }
};

// Deduplicates integer coordinates in first-appearance order and records
// which voxel each point landed in. Throws on empty input.
std::pair<CoordMapPtr, MergeMap> merge_coordinates(std::span<const Coord3> points);

// Voxelizes patch-frame positions (floor to the unit grid).
std::vector<Coord3> voxelize_positions(std::span<const Vec3> positions);

}  // namespace pcar
