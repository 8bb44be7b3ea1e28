#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

namespace pcar {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  double& operator[](int i) {
    switch (i) {
      case 0: return x;
      case 1: return y;
      default: return z;
    }
  }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  bool operator==(const Vec3& o) const = default;

  double squared_norm() const { return x * x + y * y + z * z; }
};

inline double squared_dist(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// Integer voxel coordinate at some stride level.
struct Coord3 {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  std::int32_t operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  bool operator==(const Coord3& o) const = default;
};

struct Coord3Hash {
  std::size_t operator()(const Coord3& c) const {
    // 3D variant of the fx-hash mix; good enough for voxel keys.
    std::uint64_t h = static_cast<std::uint32_t>(c.x);
    h = h * 0x9e3779b97f4a7c15ull ^ static_cast<std::uint32_t>(c.y);
    h = h * 0x9e3779b97f4a7c15ull ^ static_cast<std::uint32_t>(c.z);
    return static_cast<std::size_t>(h * 0x9e3779b97f4a7c15ull);
  }
};

struct BoundingBox {
  Vec3 min;
  Vec3 max;

  Vec3 extent() const { return max - min; }
  double max_extent() const {
    const Vec3 e = extent();
    return std::max(e.x, std::max(e.y, e.z));
  }
};

// Floor division that stays correct for negative numerators.
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Saturates out-of-range and NaN inputs instead of hitting the undefined
// float->int cast; divergent values map to the int range ends.
inline std::int32_t floor_to_int(double v) {
  const double f = std::floor(v);
  if (!(f >= -2147483648.0)) return std::numeric_limits<std::int32_t>::min();
  if (f >= 2147483647.0) return std::numeric_limits<std::int32_t>::max();
  return static_cast<std::int32_t>(f);
}

}  // namespace pcar
