#include "pcar/noise_sim.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "pcar/text_io.hpp"

namespace pcar {

AxisMode parse_axis_mode(std::string_view name) {
  if (name == "normal_based") return AxisMode::NormalBased;
  if (name == "random") return AxisMode::Random;
  throw std::invalid_argument("unknown axis_mode '" + std::string(name) +
                              "' (expected normal_based or random)");
}

std::string_view axis_mode_name(AxisMode mode) {
  return mode == AxisMode::NormalBased ? "normal_based" : "random";
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Cyclic Jacobi sweeps; plenty for symmetric 3x3. Returns eigenvalues and
// the matching eigenvector columns.
void jacobi_eigen(Mat3 a, std::array<double, 3>& eigvals, Mat3& eigvecs) {
  eigvecs = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off < 1e-15) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = eigvecs[k][p];
          const double vkq = eigvecs[k][q];
          eigvecs[k][p] = c * vkp - s * vkq;
          eigvecs[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  eigvals = {a[0][0], a[1][1], a[2][2]};
}

}  // namespace

int estimate_point_axis(const PointCloud& cloud, const GridIndex& index,
                        std::size_t point, int neighbors, Rng& rng) {
  if (neighbors < 3) {
    throw std::invalid_argument("estimate_point_axis: neighbor count must be >= 3");
  }
  if (point >= cloud.size()) {
    throw std::invalid_argument("estimate_point_axis: point index out of range");
  }
  const auto nn = index.knn(cloud.positions[point],
                            static_cast<std::size_t>(neighbors));

  Vec3 mean{0, 0, 0};
  for (std::size_t i : nn) mean += cloud.positions[i];
  mean = mean * (1.0 / static_cast<double>(nn.size()));

  Mat3 cov{};
  for (std::size_t i : nn) {
    const Vec3 d = cloud.positions[i] - mean;
    const double v[3] = {d.x, d.y, d.z};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cov[r][c] += v[r] * v[c];
    }
  }
  const double trace = cov[0][0] + cov[1][1] + cov[2][2];
  if (trace < 1e-18) {  // all neighbors coincident
    return static_cast<int>(rng.uniform_int(0, 2));
  }

  std::array<double, 3> eigvals;
  Mat3 eigvecs;
  jacobi_eigen(cov, eigvals, eigvecs);
  int smallest = 0;
  if (eigvals[1] < eigvals[smallest]) smallest = 1;
  if (eigvals[2] < eigvals[smallest]) smallest = 2;

  const double nx = std::abs(eigvecs[0][smallest]);
  const double ny = std::abs(eigvecs[1][smallest]);
  const double nz = std::abs(eigvecs[2][smallest]);
  int axis = 0;
  double best = nx;
  if (ny > best) { axis = 1; best = ny; }
  if (nz > best) { axis = 2; }
  return axis;
}

int estimate_point_axis(const PointCloud& cloud, std::size_t point,
                        int neighbors, std::uint64_t seed) {
  GridIndex index(cloud);
  Rng rng(seed);
  return estimate_point_axis(cloud, index, point, neighbors, rng);
}

PointCloud inject_noise(const PointCloud& cloud, const NoiseConfig& cfg,
                        NoiseStats* stats) {
  if (!(cfg.qstep >= 1.0)) {
    throw std::invalid_argument("inject_noise: qstep must be >= 1");
  }
  if (cloud.empty()) throw std::invalid_argument("inject_noise: empty cloud");

  NoiseStats local;
  local.config = cfg;
  local.points_in = cloud.size();
  const std::size_t buckets = static_cast<std::size_t>(std::ceil(cfg.qstep));
  for (auto& h : local.disp_hist) h.assign(buckets, 0);

  GridIndex index(cloud);
  Rng rng(cfg.seed);

  PointCloud quantized = cloud;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    int axis;
    if (cfg.axis_mode == AxisMode::Random) {
      axis = static_cast<int>(rng.uniform_int(0, 2));
    } else {
      axis = estimate_point_axis(cloud, index, i, cfg.neighbors, rng);
    }
    Vec3& p = quantized.positions[i];
    const double before = p[axis];
    p[axis] = cfg.qstep * std::floor(before / cfg.qstep);
    const double disp = before - p[axis];

    local.axis_counts[static_cast<std::size_t>(axis)] += 1;
    local.max_displacement = std::max(local.max_displacement, disp);
    const std::size_t bucket =
        std::min(buckets - 1, static_cast<std::size_t>(std::floor(disp)));
    local.disp_hist[static_cast<std::size_t>(axis)][bucket] += 1;
  }

  PointCloud out;
  if (cfg.drop_duplicates) {
    // Exact-position collapse, first occurrence wins; later payload dropped
    // with its point.
    struct VecKey {
      double x, y, z;
      bool operator==(const VecKey&) const = default;
    };
    struct VecKeyHash {
      std::size_t operator()(const VecKey& k) const {
        auto mix = [](std::uint64_t h, double d) {
          std::uint64_t bits;
          std::memcpy(&bits, &d, sizeof(bits));
          h ^= bits + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
          return h;
        };
        return static_cast<std::size_t>(mix(mix(mix(0x243f6a8885a308d3ull, k.x), k.y), k.z));
      }
    };
    std::unordered_map<VecKey, std::uint32_t, VecKeyHash> seen;
    seen.reserve(quantized.size());
    std::vector<std::size_t> kept;
    kept.reserve(quantized.size());
    for (std::size_t i = 0; i < quantized.size(); ++i) {
      const Vec3& p = quantized.positions[i];
      auto [it, inserted] = seen.emplace(VecKey{p.x, p.y, p.z},
                                         static_cast<std::uint32_t>(i));
      if (inserted) kept.push_back(i);
    }
    out.layout = quantized.layout;
    out.geometry_type = quantized.geometry_type;
    out.comments = quantized.comments;
    out.positions.reserve(kept.size());
    out.payload.resize(quantized.payload.size());
    for (std::size_t c = 0; c < out.payload.size(); ++c) {
      out.payload[c].name = quantized.payload[c].name;
      out.payload[c].type = quantized.payload[c].type;
      out.payload[c].values.reserve(kept.size());
    }
    for (std::size_t i : kept) {
      out.positions.push_back(quantized.positions[i]);
      for (std::size_t c = 0; c < out.payload.size(); ++c) {
        out.payload[c].values.push_back(quantized.payload[c].values[i]);
      }
    }
  } else {
    out = std::move(quantized);
  }

  local.points_out = out.size();
  if (stats) *stats = std::move(local);
  return out;
}

void write_noise_manifest(const std::filesystem::path& path,
                          const NoiseStats& stats) {
  std::string s = "pcar-noise-manifest v1\n";
  s += "qstep " + format_double(stats.config.qstep) + '\n';
  s += "seed " + std::to_string(stats.config.seed) + '\n';
  s += "axis_mode " + std::string(axis_mode_name(stats.config.axis_mode)) + '\n';
  s += "drop_duplicates " + std::string(stats.config.drop_duplicates ? "1" : "0") + '\n';
  s += "neighbors " + std::to_string(stats.config.neighbors) + '\n';
  s += "points_in " + std::to_string(stats.points_in) + '\n';
  s += "points_out " + std::to_string(stats.points_out) + '\n';
  s += "max_displacement " + format_double(stats.max_displacement) + '\n';
  const char* axes = "xyz";
  for (int a = 0; a < 3; ++a) {
    s += "axis ";
    s += axes[a];
    s += " count " + std::to_string(stats.axis_counts[static_cast<std::size_t>(a)]) + '\n';
    const auto& hist = stats.disp_hist[static_cast<std::size_t>(a)];
    for (std::size_t b = 0; b < hist.size(); ++b) {
      s += "hist ";
      s += axes[a];
      s += ' ' + std::to_string(b) + ' ' + std::to_string(hist[b]) + '\n';
    }
  }
  write_text_atomic(path, s);
}

}  // namespace pcar
