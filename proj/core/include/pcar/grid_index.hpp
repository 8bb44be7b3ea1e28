#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "pcar/geometry.hpp"
#include "pcar/point_cloud.hpp"

namespace pcar {

// Exact minimum squared Euclidean distance by linear scan. Reference kernel;
// the grid index below must always agree with it.
double nearest_sq_dist(const Vec3& query, const PointCloud& target);

// Uniform-grid nearest-neighbor index. Cells hold point indices; queries walk
// Chebyshev shells outward until no closer cell can exist, so results are
// exact. Non-owning: the point span must outlive the index.
class GridIndex {
 public:
  // cell_size <= 0 picks a cell near the mean point spacing.
  explicit GridIndex(std::span<const Vec3> points, double cell_size = 0.0);
  explicit GridIndex(const PointCloud& cloud, double cell_size = 0.0);

  std::size_t size() const { return points_.size(); }
  double cell_size() const { return cell_; }

  // Index of the nearest point (ties -> lowest index).
  std::size_t nearest(const Vec3& query, double* sq_dist = nullptr) const;
  double nearest_sq_dist(const Vec3& query) const;

  // k nearest point indices ordered by ascending distance (ties -> lowest
  // index). Returns fewer than k when the cloud is smaller.
  std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const;

 private:
  Coord3 cell_of(const Vec3& p) const;

  std::span<const Vec3> points_;
  double cell_ = 1.0;
  Vec3 origin_;
  Coord3 cell_min_{0, 0, 0};
  Coord3 cell_max_{0, 0, 0};
  std::unordered_map<Coord3, std::vector<std::uint32_t>, Coord3Hash> cells_;
};

}  // namespace pcar
