#include "pcar/unet.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "pcar/random.hpp"

namespace pcar {

HeadMode parse_head_mode(std::string_view name) {
  if (name == "one_hot") return HeadMode::OneHot;
  if (name == "soft") return HeadMode::Soft;
  if (name == "direct") return HeadMode::Direct;
  throw std::invalid_argument("unknown head_mode '" + std::string(name) +
                              "' (expected one_hot, soft, or direct)");
}

std::string_view head_mode_name(HeadMode mode) {
  switch (mode) {
    case HeadMode::OneHot: return "one_hot";
    case HeadMode::Soft: return "soft";
    case HeadMode::Direct: return "direct";
  }
  throw std::invalid_argument("invalid head mode");
}

int argmax_axis(const Vec3& v) {
  if (std::isnan(v.x) || std::isnan(v.y) || std::isnan(v.z)) {
    throw std::invalid_argument("argmax_axis: NaN projection vector");
  }
  int best = 0;
  double bv = v.x;
  if (v.y > bv) { best = 1; bv = v.y; }
  if (v.z > bv) { best = 2; }
  return best;
}

std::array<double, 3> one_hot(const Vec3& v) {
  std::array<double, 3> z{0.0, 0.0, 0.0};
  z[static_cast<std::size_t>(argmax_axis(v))] = 1.0;
  return z;
}

QuantNoise quantization_noise(const NetworkOutput& out, HeadMode mode) {
  if (out.V.size() != out.w.size()) {
    throw std::invalid_argument("quantization_noise: V/w length mismatch");
  }
  QuantNoise noise(out.V.size());
  for (std::size_t i = 0; i < out.V.size(); ++i) {
    const Vec3& v = out.V[i];
    const double w = out.w[i];
    switch (mode) {
      case HeadMode::OneHot: {
        const auto z = one_hot(v);
        noise[i] = {z[0] * w, z[1] * w, z[2] * w};
        break;
      }
      case HeadMode::Soft:
        noise[i] = {v.x * w, v.y * w, v.z * w};
        break;
      case HeadMode::Direct:
        noise[i] = v;
        break;
    }
  }
  return noise;
}

Patch clean_patch(const Patch& noisy, const QuantNoise& noise) {
  if (noise.size() != noisy.size()) {
    throw std::invalid_argument("clean_patch: noise length != patch size");
  }
  Patch out = noisy;
  for (std::size_t i = 0; i < out.positions.size(); ++i) {
    out.positions[i] = out.positions[i] - noise[i];
  }
  return out;
}

VoxelizedPatch voxelize_patch(const Patch& patch) {
  if (patch.positions.empty()) {
    throw std::invalid_argument("voxelize_patch: empty patch");
  }
  auto coords = voxelize_positions(patch.positions);
  auto [map, merge] = merge_coordinates(coords);
  return {std::move(map), std::move(merge)};
}

// ---------------------------------------------------------------------------
// Network

Network::Network(const NetConfig& cfg) : cfg_(cfg) {
  if (cfg.depth < 1) throw std::invalid_argument("NetConfig: depth must be >= 1");
  if (cfg.base_channels < 1) {
    throw std::invalid_argument("NetConfig: base_channels must be >= 1");
  }

  const int d = cfg.depth;
  const int b = cfg.base_channels;
  layers_.push_back({Layer::Kind::Sub, "stem", 1, b, true, 0, 0});
  for (int i = 0; i < d; ++i) {
    const int c = b << i;
    layers_.push_back({Layer::Kind::Sub, "enc" + std::to_string(i), c, c, true, 0, 0});
    layers_.push_back({Layer::Kind::Down, "down" + std::to_string(i), c, 2 * c, true, 0, 0});
  }
  const int cb = b << d;
  layers_.push_back({Layer::Kind::Sub, "bottleneck", cb, cb, true, 0, 0});
  for (int i = d - 1; i >= 0; --i) {
    const int c = b << i;
    layers_.push_back({Layer::Kind::Up, "up" + std::to_string(i), 2 * c, c, true, 0, 0});
    layers_.push_back({Layer::Kind::Sub, "dec" + std::to_string(i), 2 * c, c, true, 0, 0});
  }
  layers_.push_back({Layer::Kind::Sub, "head", b, 4, false, 0, 0});

  Rng rng(cfg.train.seed);
  for (Layer& l : layers_) {
    const int taps = l.kind == Layer::Kind::Sub ? ag::kSubmanifoldTaps : ag::kBlockTaps;
    Tensor w;
    w.name = l.name + ".w";
    w.shape = {taps, l.in_ch, l.out_ch};
    w.data.resize(static_cast<std::size_t>(w.count()));
    const double std = std::sqrt(2.0 / (static_cast<double>(taps) * l.in_ch));
    for (double& x : w.data) x = rng.normal() * std;
    Tensor bias;
    bias.name = l.name + ".b";
    bias.shape = {l.out_ch};
    bias.data.assign(static_cast<std::size_t>(l.out_ch), 0.0);

    l.w = params_.size();
    params_.push_back(std::move(w));
    l.b = params_.size();
    params_.push_back(std::move(bias));
  }
}

std::int64_t Network::parameter_count() const {
  std::int64_t n = 0;
  for (const Tensor& t : params_) n += t.count();
  return n;
}

BoundParams Network::bind(ag::Tape& tape) const {
  BoundParams bound;
  bound.ids.reserve(params_.size());
  for (const Layer& l : layers_) {
    const Tensor& w = params_[l.w];
    const Tensor& b = params_[l.b];
    bound.ids.push_back(tape.leaf(w.data, w.shape[0] * w.shape[1], w.shape[2]));
    bound.ids.push_back(tape.leaf(b.data, 1, b.shape[0]));
  }
  return bound;
}

ag::SparseTensor Network::forward(ag::Tape& tape, const BoundParams& bound,
                                  const ag::SparseTensor& input) const {
  if (bound.ids.size() != params_.size()) {
    throw std::invalid_argument("Network::forward: bound parameter count mismatch");
  }
  ag::SparseTensor x = input;
  std::vector<ag::SparseTensor> skips;
  std::unordered_map<const CoordMap*, ag::KernelMapPtr> sub_maps;

  for (const Layer& l : layers_) {
    const ag::ValueId w = bound.ids[l.w];
    const ag::ValueId b = bound.ids[l.b];
    switch (l.kind) {
      case Layer::Kind::Sub: {
        auto& map = sub_maps[x.coords.get()];
        if (!map) map = ag::build_submanifold_map(*x.coords, x.stride);
        x = ag::submanifold_conv(tape, x, l.in_ch, l.out_ch, w, b, map);
        if (l.activated) x = ag::relu(tape, x);
        break;
      }
      case Layer::Kind::Down: {
        skips.push_back(x);
        x = ag::strided_conv(tape, x, l.in_ch, l.out_ch, w, b);
        if (l.activated) x = ag::relu(tape, x);
        break;
      }
      case Layer::Kind::Up: {
        const ag::SparseTensor skip = skips.back();
        skips.pop_back();
        x = ag::transposed_conv(tape, x, l.in_ch, l.out_ch, w, b, skip.coords,
                                skip.stride);
        if (l.activated) x = ag::relu(tape, x);
        x = ag::concat_features(tape, x, skip);
        break;
      }
    }
  }
  return x;
}

namespace {

// Eq. 2 head as a tape node over the broadcast [n x 4] output. one_hot uses
// a straight-through estimator: forward applies the hard selector, backward
// passes the noise gradient to V unchanged (scaled by w) and routes the
// exact gradient to w through the selected axis.
ag::ValueId head_noise(ag::Tape& tape, ag::ValueId pp, HeadMode mode) {
  const ag::Value& vin = tape.value(pp);
  if (vin.cols != 4) throw std::invalid_argument("head_noise: expected n x 4 input");
  const std::int64_t n = vin.rows;
  const ag::ValueId out = tape.leaf(n, 3);
  ag::Value& vo = tape.value(out);

  std::vector<std::uint8_t> amax;
  switch (mode) {
    case HeadMode::OneHot: {
      amax.resize(static_cast<std::size_t>(n));
      for (std::int64_t r = 0; r < n; ++r) {
        const Vec3 v{vin.data[r * 4], vin.data[r * 4 + 1], vin.data[r * 4 + 2]};
        const int j = argmax_axis(v);
        amax[static_cast<std::size_t>(r)] = static_cast<std::uint8_t>(j);
        vo.data[r * 3 + j] = vin.data[r * 4 + 3];
      }
      break;
    }
    case HeadMode::Soft:
      for (std::int64_t r = 0; r < n; ++r) {
        const double w = vin.data[r * 4 + 3];
        for (int j = 0; j < 3; ++j) vo.data[r * 3 + j] = vin.data[r * 4 + j] * w;
      }
      break;
    case HeadMode::Direct:
      for (std::int64_t r = 0; r < n; ++r) {
        for (int j = 0; j < 3; ++j) vo.data[r * 3 + j] = vin.data[r * 4 + j];
      }
      break;
  }

  tape.record([pp, out, n, mode, amax = std::move(amax)](ag::Tape& t) {
    const auto& go = t.grad(out);
    const ag::Value& vin = t.value(pp);
    auto& gi = t.grad(pp);
    switch (mode) {
      case HeadMode::OneHot:
        for (std::int64_t r = 0; r < n; ++r) {
          const double w = vin.data[r * 4 + 3];
          for (int j = 0; j < 3; ++j) gi[r * 4 + j] += go[r * 3 + j] * w;
          gi[r * 4 + 3] += go[r * 3 + amax[static_cast<std::size_t>(r)]];
        }
        break;
      case HeadMode::Soft:
        for (std::int64_t r = 0; r < n; ++r) {
          const double w = vin.data[r * 4 + 3];
          double gw = 0.0;
          for (int j = 0; j < 3; ++j) {
            gi[r * 4 + j] += go[r * 3 + j] * w;
            gw += go[r * 3 + j] * vin.data[r * 4 + j];
          }
          gi[r * 4 + 3] += gw;
        }
        break;
      case HeadMode::Direct:
        for (std::int64_t r = 0; r < n; ++r) {
          for (int j = 0; j < 3; ++j) gi[r * 4 + j] += go[r * 3 + j];
        }
        break;
    }
  });
  return out;
}

// pred = base - noise, base constant.
ag::ValueId subtract_noise(ag::Tape& tape, std::span<const Vec3> base,
                           ag::ValueId noise) {
  const ag::Value& vn = tape.value(noise);
  if (vn.cols != 3 || vn.rows != static_cast<std::int64_t>(base.size())) {
    throw std::invalid_argument("subtract_noise: shape mismatch");
  }
  const std::int64_t n = vn.rows;
  const ag::ValueId out = tape.leaf(n, 3);
  ag::Value& vo = tape.value(out);
  for (std::int64_t r = 0; r < n; ++r) {
    const Vec3& p = base[static_cast<std::size_t>(r)];
    vo.data[r * 3] = p.x - vn.data[r * 3];
    vo.data[r * 3 + 1] = p.y - vn.data[r * 3 + 1];
    vo.data[r * 3 + 2] = p.z - vn.data[r * 3 + 2];
  }
  tape.record([noise, out](ag::Tape& t) {
    const auto& go = t.grad(out);
    auto& gn = t.grad(noise);
    for (std::size_t i = 0; i < gn.size(); ++i) gn[i] -= go[i];
  });
  return out;
}

}  // namespace

PatchGraph Network::patch_graph(ag::Tape& tape, const BoundParams& bound,
                                const Patch& patch) const {
  const VoxelizedPatch vox = voxelize_patch(patch);
  const std::int64_t nvox = static_cast<std::int64_t>(vox.coords->size());
  const ag::ValueId ones = tape.leaf(nvox, 1);
  std::fill(tape.value(ones).data.begin(), tape.value(ones).data.end(), 1.0);

  const ag::SparseTensor head =
      forward(tape, bound, ag::SparseTensor{vox.coords, 1, ones});
  const ag::ValueId per_point = ag::broadcast_to_points(tape, head.features, vox.merge);
  const ag::ValueId noise = head_noise(tape, per_point, cfg_.head_mode);
  const ag::ValueId pred = subtract_noise(tape, patch.positions, noise);
  return {noise, pred};
}

Network build_unet(const NetConfig& cfg) { return Network(cfg); }

NetworkOutput forward_output(const Network& net, const Patch& patch) {
  const VoxelizedPatch vox = voxelize_patch(patch);
  ag::Tape tape;
  const BoundParams bound = net.bind(tape);
  const std::int64_t nvox = static_cast<std::int64_t>(vox.coords->size());
  const ag::ValueId ones = tape.leaf(nvox, 1);
  std::fill(tape.value(ones).data.begin(), tape.value(ones).data.end(), 1.0);
  const ag::SparseTensor head =
      net.forward(tape, bound, ag::SparseTensor{vox.coords, 1, ones});

  const ag::Value& hv = tape.value(head.features);
  NetworkOutput out;
  out.V.resize(patch.size());
  out.w.resize(patch.size());
  for (std::size_t p = 0; p < patch.size(); ++p) {
    const std::uint32_t v = vox.merge.point_to_voxel[p];
    out.V[p] = {hv.data[v * 4], hv.data[v * 4 + 1], hv.data[v * 4 + 2]};
    out.w[p] = hv.data[v * 4 + 3];
  }
  return out;
}

Patch infer(const Network& net, const Patch& patch) {
  const NetworkOutput out = forward_output(net, patch);
  return clean_patch(patch, quantization_noise(out, net.config().head_mode));
}

}  // namespace pcar
