#include "pcar/grid_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pcar {

double nearest_sq_dist(const Vec3& query, const PointCloud& target) {
  if (target.empty()) {
    throw std::invalid_argument("nearest_sq_dist: empty target cloud");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : target.positions) {
    best = std::min(best, squared_dist(query, p));
  }
  return best;
}

GridIndex::GridIndex(const PointCloud& cloud, double cell_size)
    : GridIndex(std::span<const Vec3>(cloud.positions), cell_size) {}

GridIndex::GridIndex(std::span<const Vec3> points, double cell_size)
    : points_(points) {
  if (points_.empty()) {
    throw std::invalid_argument("GridIndex: empty point set");
  }
  Vec3 lo = points_[0];
  Vec3 hi = points_[0];
  for (const Vec3& p : points_) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  origin_ = lo;

  if (cell_size > 0.0) {
    cell_ = cell_size;
  } else {
    // Mean spacing for uniform density; degenerate extents count as one unit.
    const Vec3 e = hi - lo;
    const double vol =
        std::max(e.x, 1.0) * std::max(e.y, 1.0) * std::max(e.z, 1.0);
    cell_ = std::cbrt(vol / static_cast<double>(points_.size()));
    const double max_extent = std::max({e.x, e.y, e.z, 1.0});
    cell_ = std::max(cell_, max_extent / 512.0);  // bound shell walks
    if (!(cell_ > 0.0)) cell_ = 1.0;
  }

  cells_.reserve(points_.size());
  for (std::uint32_t i = 0; i < points_.size(); ++i) {
    const Coord3 c = cell_of(points_[i]);
    cells_[c].push_back(i);
    cell_min_.x = std::min(cell_min_.x, c.x);
    cell_min_.y = std::min(cell_min_.y, c.y);
    cell_min_.z = std::min(cell_min_.z, c.z);
    cell_max_.x = std::max(cell_max_.x, c.x);
    cell_max_.y = std::max(cell_max_.y, c.y);
    cell_max_.z = std::max(cell_max_.z, c.z);
  }
}

Coord3 GridIndex::cell_of(const Vec3& p) const {
  return Coord3{floor_to_int((p.x - origin_.x) / cell_),
                floor_to_int((p.y - origin_.y) / cell_),
                floor_to_int((p.z - origin_.z) / cell_)};
}

namespace {

// Query cell in 64-bit so far-away queries never wrap; clamped well inside
// the int64 range so +-r arithmetic stays safe.
struct Cell64 {
  std::int64_t x, y, z;
};

std::int64_t floor_cell64(double offset, double cell) {
  const double f = std::floor(offset / cell);
  const double lim = double(std::int64_t{1} << 60);
  if (f >= lim) return std::int64_t{1} << 60;
  if (f <= -lim) return -(std::int64_t{1} << 60);
  return static_cast<std::int64_t>(f);
}

// Visits the cells on the Chebyshev shell of radius r around c0, restricted
// to the inclusive cell box [bmin, bmax]. Faces are enumerated exclusively,
// so no cell is visited twice; clipping keeps the cost proportional to the
// ring/box intersection instead of the full 24r^2 ring.
template <typename Fn>
void for_each_shell_cell_clipped(const Cell64& c0, std::int64_t r,
                                 const Coord3& bmin, const Coord3& bmax,
                                 Fn&& fn) {
  if (r == 0) {
    if (c0.x >= bmin.x && c0.x <= bmax.x && c0.y >= bmin.y && c0.y <= bmax.y &&
        c0.z >= bmin.z && c0.z <= bmax.z) {
      fn(Coord3{int(c0.x), int(c0.y), int(c0.z)});
    }
    return;
  }
  const std::int64_t ylo = std::max<std::int64_t>(c0.y - r, bmin.y);
  const std::int64_t yhi = std::min<std::int64_t>(c0.y + r, bmax.y);
  const std::int64_t zlo = std::max<std::int64_t>(c0.z - r, bmin.z);
  const std::int64_t zhi = std::min<std::int64_t>(c0.z + r, bmax.z);
  const std::int64_t xin_lo = std::max<std::int64_t>(c0.x - r + 1, bmin.x);
  const std::int64_t xin_hi = std::min<std::int64_t>(c0.x + r - 1, bmax.x);
  const std::int64_t yin_lo = std::max<std::int64_t>(c0.y - r + 1, bmin.y);
  const std::int64_t yin_hi = std::min<std::int64_t>(c0.y + r - 1, bmax.y);

  for (const std::int64_t x : {c0.x - r, c0.x + r}) {
    if (x < bmin.x || x > bmax.x) continue;
    for (std::int64_t y = ylo; y <= yhi; ++y) {
      for (std::int64_t z = zlo; z <= zhi; ++z) fn(Coord3{int(x), int(y), int(z)});
    }
  }
  for (const std::int64_t y : {c0.y - r, c0.y + r}) {
    if (y < bmin.y || y > bmax.y) continue;
    for (std::int64_t x = xin_lo; x <= xin_hi; ++x) {
      for (std::int64_t z = zlo; z <= zhi; ++z) fn(Coord3{int(x), int(y), int(z)});
    }
  }
  for (const std::int64_t z : {c0.z - r, c0.z + r}) {
    if (z < bmin.z || z > bmax.z) continue;
    for (std::int64_t x = xin_lo; x <= xin_hi; ++x) {
      for (std::int64_t y = yin_lo; y <= yin_hi; ++y) fn(Coord3{int(x), int(y), int(z)});
    }
  }
}

// Chebyshev cell distance from c0 to the box (0 inside) and to its farthest
// corner. Rings outside [lo, hi] cannot intersect an occupied cell.
std::pair<std::int64_t, std::int64_t> ring_range(const Cell64& c0,
                                                 const Coord3& bmin,
                                                 const Coord3& bmax) {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  const std::int64_t c[3] = {c0.x, c0.y, c0.z};
  const std::int64_t mn[3] = {bmin.x, bmin.y, bmin.z};
  const std::int64_t mx[3] = {bmax.x, bmax.y, bmax.z};
  for (int a = 0; a < 3; ++a) {
    lo = std::max({lo, mn[a] - c[a], c[a] - mx[a]});
    hi = std::max({hi, c[a] - mn[a], mx[a] - c[a]});
  }
  return {lo, hi};
}

}  // namespace

std::size_t GridIndex::nearest(const Vec3& query, double* sq_dist) const {
  const Cell64 c0{floor_cell64(query.x - origin_.x, cell_),
                  floor_cell64(query.y - origin_.y, cell_),
                  floor_cell64(query.z - origin_.z, cell_)};
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = points_.size();

  // Any point in a cell at Chebyshev ring r sits at distance >= (r-1)*cell,
  // so once best <= ((r-1)*cell)^2 no farther ring can win. Very uneven
  // densities can still force long walks; past the visit budget an exact
  // linear scan is cheaper.
  const auto [r0, max_r] = ring_range(c0, cell_min_, cell_max_);
  std::int64_t visited = 0;
  const std::int64_t budget = 64 + 4 * std::int64_t(points_.size());
  for (std::int64_t r = r0; r <= max_r; ++r) {
    if (r >= 2) {
      const double lb = double(r - 1) * cell_;
      if (best <= lb * lb) break;
    }
    if (visited > budget) {
      best_idx = points_.size();
      best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < points_.size(); ++i) {
        const double d = squared_dist(query, points_[i]);
        if (d < best) {
          best = d;
          best_idx = i;
        }
      }
      break;
    }
    for_each_shell_cell_clipped(c0, r, cell_min_, cell_max_, [&](const Coord3& c) {
      ++visited;
      auto it = cells_.find(c);
      if (it == cells_.end()) return;
      for (std::uint32_t idx : it->second) {
        const double d = squared_dist(query, points_[idx]);
        if (d < best || (d == best && idx < best_idx)) {
          best = d;
          best_idx = idx;
        }
      }
    });
  }
  if (sq_dist) *sq_dist = best;
  return best_idx;
}

double GridIndex::nearest_sq_dist(const Vec3& query) const {
  double d = 0.0;
  nearest(query, &d);
  return d;
}

std::vector<std::size_t> GridIndex::knn(const Vec3& query, std::size_t k) const {
  k = std::min(k, points_.size());
  std::vector<std::pair<double, std::uint32_t>> heap;  // max-heap on distance
  heap.reserve(k + 1);
  auto cmp = [](const auto& a, const auto& b) { return a < b; };

  const Cell64 c0{floor_cell64(query.x - origin_.x, cell_),
                  floor_cell64(query.y - origin_.y, cell_),
                  floor_cell64(query.z - origin_.z, cell_)};
  const auto [r0, max_r] = ring_range(c0, cell_min_, cell_max_);
  std::int64_t visited = 0;
  const std::int64_t budget = 64 + 4 * std::int64_t(points_.size());
  for (std::int64_t r = r0; r <= max_r; ++r) {
    if (r >= 2 && heap.size() == k) {
      const double lb = double(r - 1) * cell_;
      if (heap.front().first <= lb * lb) break;
    }
    if (visited > budget) {
      heap.clear();
      for (std::uint32_t i = 0; i < points_.size(); ++i) {
        heap.emplace_back(squared_dist(query, points_[i]), i);
      }
      std::partial_sort(heap.begin(), heap.begin() + long(k), heap.end(), cmp);
      heap.resize(k);
      std::vector<std::size_t> out;
      out.reserve(k);
      for (const auto& [d, idx] : heap) out.push_back(idx);
      return out;
    }
    for_each_shell_cell_clipped(c0, r, cell_min_, cell_max_, [&](const Coord3& c) {
      ++visited;
      auto it = cells_.find(c);
      if (it == cells_.end()) return;
      for (std::uint32_t idx : it->second) {
        const double d = squared_dist(query, points_[idx]);
        if (heap.size() < k) {
          heap.emplace_back(d, idx);
          std::push_heap(heap.begin(), heap.end(), cmp);
        } else if (std::make_pair(d, idx) < heap.front()) {
          std::pop_heap(heap.begin(), heap.end(), cmp);
          heap.back() = {d, idx};
          std::push_heap(heap.begin(), heap.end(), cmp);
        }
      }
    });
  }
  std::sort_heap(heap.begin(), heap.end(), cmp);
  std::vector<std::size_t> out;
  out.reserve(heap.size());
  for (const auto& [d, idx] : heap) out.push_back(idx);
  return out;
}

}  // namespace pcar
