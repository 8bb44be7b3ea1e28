#include "pcar/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pcar/ply_io.hpp"

namespace pcar {

namespace {

// Cube low corner on the half-voxel grid. Keeps p - origin exact for
// voxel-grid coordinates, so normalization inverts bit-exactly.
Vec3 snap_origin(const Vec3& center, double side) {
  auto snap = [](double v) { return std::round(v * 2.0) / 2.0; };
  return {snap(center.x - side / 2.0), snap(center.y - side / 2.0),
          snap(center.z - side / 2.0)};
}

bool in_cube(const Vec3& p, const Vec3& origin, double side) {
  return p.x >= origin.x && p.x < origin.x + side && p.y >= origin.y &&
         p.y < origin.y + side && p.z >= origin.z && p.z < origin.z + side;
}

}  // namespace

std::size_t patch_count(std::size_t n, std::size_t overlap_c, std::size_t k) {
  if (n == 0 || overlap_c == 0 || k == 0) {
    throw std::invalid_argument("patch_count: n, C and k must be positive");
  }
  const auto num = static_cast<std::uint64_t>(n) * overlap_c;
  return static_cast<std::size_t>((num + k - 1) / k);
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud,
                                               std::size_t count,
                                               std::size_t seed_index) {
  const std::size_t n = cloud.size();
  if (count < 1 || count > n) {
    throw std::invalid_argument("farthest_point_sample: count out of range");
  }
  if (seed_index >= n) {
    throw std::invalid_argument("farthest_point_sample: seed index out of range");
  }

  std::vector<std::size_t> picked;
  picked.reserve(count);
  picked.push_back(seed_index);

  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  min_dist[seed_index] = -1.0;  // never re-picked
  std::size_t last = seed_index;
  for (std::size_t s = 1; s < count; ++s) {
    const Vec3 lp = cloud.positions[last];
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = squared_dist(cloud.positions[i], lp);
      if (d < min_dist[i]) min_dist[i] = d;
      if (min_dist[i] > best) {  // strict: ties keep the lowest index
        best = min_dist[i];
        best_idx = i;
      }
    }
    picked.push_back(best_idx);
    min_dist[best_idx] = -1.0;  // never re-picked
    last = best_idx;
  }
  return picked;
}

double derive_cube_side(const PointCloud& cloud, std::size_t k) {
  if (cloud.empty() || k == 0) {
    throw std::invalid_argument("derive_cube_side: empty cloud or k == 0");
  }
  const BoundingBox box = bounding_box(cloud);
  const Vec3 e = box.extent();
  const double volume = e.x * e.y * e.z;
  const double max_extent = box.max_extent();

  double side;
  if (volume <= 0.0) {
    side = max_extent / 8.0;
  } else {
    const double density = static_cast<double>(cloud.size()) / volume;
    side = std::cbrt(static_cast<double>(k) / density);
  }
  side = std::round(side);
  return std::clamp(side, 1.0, std::max(max_extent, 1.0));
}

Patch extract_cube_patch(const PointCloud& cloud, const Vec3& center, double side) {
  if (!(side > 0.0)) {
    throw std::invalid_argument("extract_cube_patch: side must be positive");
  }
  Patch patch;
  patch.origin = snap_origin(center, side);
  patch.side = side;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    if (in_cube(p, patch.origin, side)) {
      patch.positions.push_back(p - patch.origin);
      patch.source_indices.push_back(i);
    }
  }
  return patch;
}

PatchPair extract_patch_pair(const PointCloud& noisy, const PointCloud& clean,
                             const Vec3& center, double side) {
  PatchPair pair;
  pair.noisy = extract_cube_patch(noisy, center, side);
  pair.clean = extract_cube_patch(clean, center, side);
  return pair;
}

PatchExtractor::PatchExtractor(const PointCloud& cloud, double side_hint)
    : cloud_(cloud), cell_(side_hint > 0.0 ? side_hint : 1.0) {
  cells_.reserve(cloud.size() / 4 + 1);
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    const Coord3 c{floor_to_int(p.x / cell_), floor_to_int(p.y / cell_),
                   floor_to_int(p.z / cell_)};
    cells_[c].push_back(i);
  }
}

Patch PatchExtractor::extract(const Vec3& center, double side) const {
  if (!(side > 0.0)) {
    throw std::invalid_argument("PatchExtractor: side must be positive");
  }
  Patch patch;
  patch.origin = snap_origin(center, side);
  patch.side = side;

  const Coord3 lo{floor_to_int(patch.origin.x / cell_),
                  floor_to_int(patch.origin.y / cell_),
                  floor_to_int(patch.origin.z / cell_)};
  // One cell of slack at the top; the containment test filters exactly.
  const Coord3 hi{floor_to_int((patch.origin.x + side) / cell_),
                  floor_to_int((patch.origin.y + side) / cell_),
                  floor_to_int((patch.origin.z + side) / cell_)};

  std::vector<std::uint32_t> hits;
  for (std::int32_t cx = lo.x; cx <= hi.x; ++cx) {
    for (std::int32_t cy = lo.y; cy <= hi.y; ++cy) {
      for (std::int32_t cz = lo.z; cz <= hi.z; ++cz) {
        auto it = cells_.find(Coord3{cx, cy, cz});
        if (it == cells_.end()) continue;
        for (std::uint32_t i : it->second) {
          if (in_cube(cloud_.positions[i], patch.origin, side)) hits.push_back(i);
        }
      }
    }
  }
  std::sort(hits.begin(), hits.end());
  patch.positions.reserve(hits.size());
  patch.source_indices.reserve(hits.size());
  for (std::uint32_t i : hits) {
    patch.positions.push_back(cloud_.positions[i] - patch.origin);
    patch.source_indices.push_back(i);
  }
  return patch;
}

SampleResult sample_patch_pairs(const PointCloud& noisy, const PointCloud& clean,
                                const SamplerConfig& cfg) {
  SampleResult result;
  result.requested = patch_count(noisy.size(), cfg.overlap_c, cfg.k);
  result.side = cfg.cube_side.value_or(derive_cube_side(noisy, cfg.k));

  const std::size_t n = std::min(result.requested, noisy.size());
  const auto centers = farthest_point_sample(noisy, n, cfg.seed_index);

  const PatchExtractor noisy_ex(noisy, result.side);
  const PatchExtractor clean_ex(clean, result.side);
  for (std::size_t ci : centers) {
    PatchPair pair;
    pair.noisy = noisy_ex.extract(noisy.positions[ci], result.side);
    pair.clean = clean_ex.extract(noisy.positions[ci], result.side);
    if (pair.noisy.size() < cfg.min_points || pair.clean.size() < cfg.min_points) {
      ++result.skipped_thin;
      continue;
    }
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

SinglesResult sample_patches(const PointCloud& noisy, const SamplerConfig& cfg) {
  SinglesResult result;
  result.requested = patch_count(noisy.size(), cfg.overlap_c, cfg.k);
  result.side = cfg.cube_side.value_or(derive_cube_side(noisy, cfg.k));

  const std::size_t n = std::min(result.requested, noisy.size());
  const auto centers = farthest_point_sample(noisy, n, cfg.seed_index);

  const PatchExtractor ex(noisy, result.side);
  for (std::size_t ci : centers) {
    Patch patch = ex.extract(noisy.positions[ci], result.side);
    if (patch.size() < cfg.min_points) {
      ++result.skipped_thin;
      continue;
    }
    result.patches.push_back(std::move(patch));
  }
  return result;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

PointCloud patch_as_cloud(const Patch& patch) {
  PointCloud c;
  c.positions = patch.positions;
  return c;
}

void append_indices(std::string& line, std::span<const std::size_t> idx) {
  for (std::size_t i : idx) {
    line += ' ';
    line += std::to_string(i);
  }
}

}  // namespace

void write_patch_set(const std::filesystem::path& dir,
                     std::span<const PatchPair> pairs, double side) {
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  manifest << "pcar-patch-set v1\n";
  manifest << "side " << format_double(side) << "\n";
  manifest << "count " << pairs.size() << "\n";

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PatchPair& pair = pairs[i];
    char name[64];
    std::snprintf(name, sizeof(name), "patch_%06zu", i);
    const std::string noisy_file = std::string(name) + "_noisy.ply";
    const std::string clean_file = std::string(name) + "_clean.ply";
    write_ply(patch_as_cloud(pair.noisy), dir / noisy_file);
    write_ply(patch_as_cloud(pair.clean), dir / clean_file);

    std::string line = "pair " + std::to_string(i);
    line += " origin " + format_double(pair.noisy.origin.x) + " " +
            format_double(pair.noisy.origin.y) + " " +
            format_double(pair.noisy.origin.z);
    line += " noisy " + noisy_file;
    line += " clean " + clean_file;
    manifest << line << "\n";
    std::string ni = "noisy_indices " + std::to_string(i);
    append_indices(ni, pair.noisy.source_indices);
    manifest << ni << "\n";
    std::string cli = "clean_indices " + std::to_string(i);
    append_indices(cli, pair.clean.source_indices);
    manifest << cli << "\n";
  }

  const auto tmp = dir / "manifest.txt.tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw std::runtime_error("write_patch_set: cannot write manifest");
    f << manifest.str();
  }
  std::filesystem::rename(tmp, dir / "manifest.txt");
}

std::vector<PatchPair> read_patch_set(const std::filesystem::path& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) {
    throw std::runtime_error("read_patch_set: cannot open '" +
                             manifest_path.string() + "'");
  }
  const auto dir = manifest_path.parent_path();

  std::string line;
  if (!std::getline(f, line) || line.rfind("pcar-patch-set", 0) != 0) {
    throw std::runtime_error("read_patch_set: not a patch-set manifest");
  }
  double side = 0.0;
  std::size_t count = 0;
  std::string key;
  f >> key >> side;
  if (key != "side") throw std::runtime_error("read_patch_set: missing side");
  f >> key >> count;
  if (key != "count") throw std::runtime_error("read_patch_set: missing count");

  std::vector<PatchPair> pairs(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t id = 0;
    std::string noisy_file, clean_file;
    Vec3 origin;
    f >> key >> id;
    if (key != "pair" || id != i) throw std::runtime_error("read_patch_set: bad pair line");
    f >> key >> origin.x >> origin.y >> origin.z;
    if (key != "origin") throw std::runtime_error("read_patch_set: bad origin");
    f >> key >> noisy_file;
    if (key != "noisy") throw std::runtime_error("read_patch_set: bad noisy file");
    f >> key >> clean_file;
    if (key != "clean") throw std::runtime_error("read_patch_set: bad clean file");

    PatchPair& pair = pairs[i];
    for (int which = 0; which < 2; ++which) {
      Patch& patch = which == 0 ? pair.noisy : pair.clean;
      patch.origin = origin;
      patch.side = side;
      const PointCloud c = read_ply(dir / (which == 0 ? noisy_file : clean_file));
      patch.positions = c.positions;
      f >> key >> id;
      const char* want = which == 0 ? "noisy_indices" : "clean_indices";
      if (key != want || id != i) {
        throw std::runtime_error("read_patch_set: bad index line");
      }
      patch.source_indices.resize(patch.positions.size());
      for (std::size_t& v : patch.source_indices) f >> v;
      if (!f) throw std::runtime_error("read_patch_set: truncated index line");
    }
  }
  return pairs;
}

}  // namespace pcar
