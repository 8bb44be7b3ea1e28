#include "pcar/autograd.hpp"

#include <algorithm>
#include <stdexcept>

namespace pcar::ag {

ValueId Tape::leaf(std::int64_t rows, std::int64_t cols) {
  Value v;
  v.rows = rows;
  v.cols = cols;
  v.data.assign(static_cast<std::size_t>(rows * cols), 0.0);
  values_.push_back(std::move(v));
  grads_.emplace_back(static_cast<std::size_t>(rows * cols), 0.0);
  return static_cast<ValueId>(values_.size() - 1);
}

ValueId Tape::leaf(std::span<const double> data, std::int64_t rows, std::int64_t cols) {
  if (static_cast<std::int64_t>(data.size()) != rows * cols) {
    throw std::invalid_argument("Tape::leaf: data size does not match shape");
  }
  const ValueId id = leaf(rows, cols);
  std::copy(data.begin(), data.end(), value(id).data.begin());
  return id;
}

void Tape::record(std::function<void(Tape&)> backward_fn) {
  nodes_.push_back(std::move(backward_fn));
}

void Tape::backward(ValueId loss) {
  if (backward_done_) {
    throw std::logic_error("Tape::backward: tape already replayed");
  }
  const Value& l = value(loss);
  if (l.count() != 1) {
    throw std::invalid_argument("Tape::backward: loss must be scalar");
  }
  grad(loss)[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)(*this);
  backward_done_ = true;
}

int feature_width(const Tape& tape, const SparseTensor& x) {
  return static_cast<int>(tape.value(x.features).cols);
}

// ---------------------------------------------------------------------------
// Kernel maps

KernelMapPtr build_submanifold_map(const CoordMap& coords, int stride) {
  auto map = std::make_shared<KernelMap>();
  map->pairs.resize(kSubmanifoldTaps);
  const auto& cs = coords.coords();
  for (std::uint32_t out_row = 0; out_row < cs.size(); ++out_row) {
    const Coord3 c = cs[out_row];
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const Coord3 n{c.x + dx * stride, c.y + dy * stride, c.z + dz * stride};
          const std::int64_t in_row = coords.row_of(n);
          if (in_row < 0) continue;
          const int t = (dx + 1) * 9 + (dy + 1) * 3 + (dz + 1);
          map->pairs[t].emplace_back(static_cast<std::uint32_t>(in_row), out_row);
        }
      }
    }
  }
  return map;
}

std::pair<KernelMapPtr, CoordMapPtr> build_strided_map(const CoordMap& in, int in_stride) {
  auto map = std::make_shared<KernelMap>();
  map->pairs.resize(kBlockTaps);
  const int out_stride = in_stride * 2;

  std::vector<Coord3> out_coords;
  std::unordered_map<Coord3, std::uint32_t, Coord3Hash> out_rows;
  const auto& cs = in.coords();
  out_rows.reserve(cs.size());

  for (std::uint32_t in_row = 0; in_row < cs.size(); ++in_row) {
    const Coord3 c = cs[in_row];
    const Coord3 base{
        static_cast<std::int32_t>(floor_div(c.x, out_stride) * out_stride),
        static_cast<std::int32_t>(floor_div(c.y, out_stride) * out_stride),
        static_cast<std::int32_t>(floor_div(c.z, out_stride) * out_stride)};
    auto [it, inserted] = out_rows.emplace(base, static_cast<std::uint32_t>(out_coords.size()));
    if (inserted) out_coords.push_back(base);
    const int tx = (c.x - base.x) / in_stride;
    const int ty = (c.y - base.y) / in_stride;
    const int tz = (c.z - base.z) / in_stride;
    const int t = tx * 4 + ty * 2 + tz;
    map->pairs[t].emplace_back(in_row, it->second);
  }
  return {std::move(map), std::make_shared<CoordMap>(std::move(out_coords))};
}

KernelMapPtr build_transposed_map(const CoordMap& parents, int parent_stride,
                                  const CoordMap& target, int target_stride) {
  if (parent_stride != 2 * target_stride) {
    throw std::invalid_argument("transposed_conv: stride must halve");
  }
  auto map = std::make_shared<KernelMap>();
  map->pairs.resize(kBlockTaps);
  const auto& cs = target.coords();
  for (std::uint32_t out_row = 0; out_row < cs.size(); ++out_row) {
    const Coord3 c = cs[out_row];
    const Coord3 base{
        static_cast<std::int32_t>(floor_div(c.x, parent_stride) * parent_stride),
        static_cast<std::int32_t>(floor_div(c.y, parent_stride) * parent_stride),
        static_cast<std::int32_t>(floor_div(c.z, parent_stride) * parent_stride)};
    const std::int64_t in_row = parents.row_of(base);
    if (in_row < 0) {
      throw std::invalid_argument(
          "transposed_conv: target coordinate has no parent in the input; "
          "the cached encoder coordinate set does not match");
    }
    const int tx = (c.x - base.x) / target_stride;
    const int ty = (c.y - base.y) / target_stride;
    const int tz = (c.z - base.z) / target_stride;
    const int t = tx * 4 + ty * 2 + tz;
    map->pairs[t].emplace_back(static_cast<std::uint32_t>(in_row), out_row);
  }
  return map;
}

// ---------------------------------------------------------------------------
// Shared gather-scatter kernel

namespace {

void check_conv_shapes(const Tape& tape, const SparseTensor& x, int in_ch,
                       int out_ch, ValueId weights, ValueId bias, int taps) {
  if (feature_width(tape, x) != in_ch) {
    throw std::invalid_argument("conv: input width does not match kernel in_channels");
  }
  const Value& w = tape.value(weights);
  if (w.rows != static_cast<std::int64_t>(taps) * in_ch || w.cols != out_ch) {
    throw std::invalid_argument("conv: weight shape mismatch");
  }
  const Value& b = tape.value(bias);
  if (b.count() != out_ch) {
    throw std::invalid_argument("conv: bias shape mismatch");
  }
}

// out[o] += W[t]^T in[i] over every pair of every tap; rows pre-filled with
// bias. Per output row the accumulation order is the tap order, which makes
// results independent of input row permutations.
void conv_forward(const KernelMap& map, int in_ch, int out_ch,
                  const double* in, const double* w, const double* bias,
                  double* out, std::int64_t out_rows) {
  for (std::int64_t r = 0; r < out_rows; ++r) {
    double* fo = out + r * out_ch;
    for (int b = 0; b < out_ch; ++b) fo[b] = bias[b];
  }
  for (std::size_t t = 0; t < map.pairs.size(); ++t) {
    const double* wt = w + t * static_cast<std::size_t>(in_ch) * out_ch;
    for (const auto& [si, so] : map.pairs[t]) {
      const double* fi = in + static_cast<std::size_t>(si) * in_ch;
      double* fo = out + static_cast<std::size_t>(so) * out_ch;
      for (int a = 0; a < in_ch; ++a) {
        const double v = fi[a];
        if (v == 0.0) continue;
        const double* wr = wt + static_cast<std::size_t>(a) * out_ch;
        for (int b = 0; b < out_ch; ++b) fo[b] += v * wr[b];
      }
    }
  }
}

void conv_backward(const KernelMap& map, int in_ch, int out_ch,
                   const double* in, const double* w, const double* gout,
                   std::int64_t out_rows, double* gin, double* gw, double* gb) {
  for (std::int64_t r = 0; r < out_rows; ++r) {
    const double* go = gout + r * out_ch;
    for (int b = 0; b < out_ch; ++b) gb[b] += go[b];
  }
  for (std::size_t t = 0; t < map.pairs.size(); ++t) {
    const double* wt = w + t * static_cast<std::size_t>(in_ch) * out_ch;
    double* gwt = gw + t * static_cast<std::size_t>(in_ch) * out_ch;
    for (const auto& [si, so] : map.pairs[t]) {
      const double* fi = in + static_cast<std::size_t>(si) * in_ch;
      double* gi = gin + static_cast<std::size_t>(si) * in_ch;
      const double* go = gout + static_cast<std::size_t>(so) * out_ch;
      for (int a = 0; a < in_ch; ++a) {
        const double* wr = wt + static_cast<std::size_t>(a) * out_ch;
        double* gwr = gwt + static_cast<std::size_t>(a) * out_ch;
        const double v = fi[a];
        double acc = 0.0;
        for (int b = 0; b < out_ch; ++b) {
          acc += wr[b] * go[b];
          gwr[b] += v * go[b];
        }
        gi[a] += acc;
      }
    }
  }
}

SparseTensor conv_common(Tape& tape, const SparseTensor& x, int in_ch, int out_ch,
                         ValueId weights, ValueId bias, KernelMapPtr map,
                         CoordMapPtr out_coords, int out_stride, int taps) {
  check_conv_shapes(tape, x, in_ch, out_ch, weights, bias, taps);
  const std::int64_t out_rows = static_cast<std::int64_t>(out_coords->size());
  const ValueId out = tape.leaf(out_rows, out_ch);

  conv_forward(*map, in_ch, out_ch, tape.value(x.features).data.data(),
               tape.value(weights).data.data(), tape.value(bias).data.data(),
               tape.value(out).data.data(), out_rows);

  const ValueId xin = x.features;
  tape.record([map, xin, weights, bias, out, in_ch, out_ch, out_rows](Tape& t) {
    conv_backward(*map, in_ch, out_ch, t.value(xin).data.data(),
                  t.value(weights).data.data(), t.grad(out).data(), out_rows,
                  t.grad(xin).data(), t.grad(weights).data(), t.grad(bias).data());
  });
  return SparseTensor{std::move(out_coords), out_stride, out};
}

}  // namespace

SparseTensor submanifold_conv(Tape& tape, const SparseTensor& x, int in_ch,
                              int out_ch, ValueId weights, ValueId bias,
                              KernelMapPtr map) {
  if (!map) map = build_submanifold_map(*x.coords, x.stride);
  return conv_common(tape, x, in_ch, out_ch, weights, bias, std::move(map),
                     x.coords, x.stride, kSubmanifoldTaps);
}

SparseTensor strided_conv(Tape& tape, const SparseTensor& x, int in_ch,
                          int out_ch, ValueId weights, ValueId bias) {
  auto [map, out_coords] = build_strided_map(*x.coords, x.stride);
  return conv_common(tape, x, in_ch, out_ch, weights, bias, std::move(map),
                     std::move(out_coords), x.stride * 2, kBlockTaps);
}

SparseTensor transposed_conv(Tape& tape, const SparseTensor& x, int in_ch,
                             int out_ch, ValueId weights, ValueId bias,
                             const CoordMapPtr& target, int target_stride) {
  if (!target) {
    throw std::invalid_argument("transposed_conv: missing target coordinate set");
  }
  auto map = build_transposed_map(*x.coords, x.stride, *target, target_stride);
  return conv_common(tape, x, in_ch, out_ch, weights, bias, std::move(map),
                     target, target_stride, kBlockTaps);
}

SparseTensor concat_features(Tape& tape, const SparseTensor& a, const SparseTensor& b) {
  if (a.coords != b.coords &&
      !(a.coords && b.coords && a.coords->coords() == b.coords->coords())) {
    throw std::invalid_argument("concat_features: coordinate sets differ");
  }
  if (a.stride != b.stride) {
    throw std::invalid_argument("concat_features: strides differ");
  }
  const Value& va = tape.value(a.features);
  const Value& vb = tape.value(b.features);
  const std::int64_t rows = va.rows;
  const std::int64_t wa = va.cols;
  const std::int64_t wb = vb.cols;
  const ValueId out = tape.leaf(rows, wa + wb);
  {
    Value& vo = tape.value(out);
    for (std::int64_t r = 0; r < rows; ++r) {
      std::copy_n(va.data.begin() + r * wa, wa, vo.data.begin() + r * (wa + wb));
      std::copy_n(vb.data.begin() + r * wb, wb, vo.data.begin() + r * (wa + wb) + wa);
    }
  }
  const ValueId ia = a.features;
  const ValueId ib = b.features;
  tape.record([ia, ib, out, rows, wa, wb](Tape& t) {
    const auto& go = t.grad(out);
    auto& ga = t.grad(ia);
    auto& gb = t.grad(ib);
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t c = 0; c < wa; ++c) ga[r * wa + c] += go[r * (wa + wb) + c];
      for (std::int64_t c = 0; c < wb; ++c) gb[r * wb + c] += go[r * (wa + wb) + wa + c];
    }
  });
  return SparseTensor{a.coords, a.stride, out};
}

SparseTensor relu(Tape& tape, const SparseTensor& x) {
  const Value& vin = tape.value(x.features);
  const ValueId out = tape.leaf(vin.rows, vin.cols);
  {
    Value& vo = tape.value(out);
    for (std::size_t i = 0; i < vin.data.size(); ++i) {
      vo.data[i] = std::max(vin.data[i], 0.0);  // NaN stays NaN
    }
  }
  const ValueId xin = x.features;
  tape.record([xin, out](Tape& t) {
    const Value& vin = t.value(xin);
    const auto& go = t.grad(out);
    auto& gi = t.grad(xin);
    for (std::size_t i = 0; i < gi.size(); ++i) {
      if (vin.data[i] > 0.0) gi[i] += go[i];
    }
  });
  return SparseTensor{x.coords, x.stride, out};
}

ValueId merge_mean(Tape& tape, ValueId per_point, const MergeMap& merge) {
  const Value& vin = tape.value(per_point);
  if (vin.rows != static_cast<std::int64_t>(merge.point_count())) {
    throw std::invalid_argument("merge_mean: row count does not match merge map");
  }
  const std::int64_t w = vin.cols;
  const ValueId out = tape.leaf(static_cast<std::int64_t>(merge.voxel_count()), w);
  {
    Value& vo = tape.value(out);
    for (std::size_t p = 0; p < merge.point_count(); ++p) {
      const std::uint32_t v = merge.point_to_voxel[p];
      for (std::int64_t c = 0; c < w; ++c) vo.data[v * w + c] += vin.data[p * w + c];
    }
    for (std::size_t v = 0; v < merge.voxel_count(); ++v) {
      const double inv = 1.0 / merge.voxel_counts[v];
      for (std::int64_t c = 0; c < w; ++c) vo.data[v * w + c] *= inv;
    }
  }
  const MergeMap m = merge;  // copy kept alive by the closure
  tape.record([m, per_point, out, w](Tape& t) {
    const auto& go = t.grad(out);
    auto& gi = t.grad(per_point);
    for (std::size_t p = 0; p < m.point_count(); ++p) {
      const std::uint32_t v = m.point_to_voxel[p];
      const double inv = 1.0 / m.voxel_counts[v];
      for (std::int64_t c = 0; c < w; ++c) gi[p * w + c] += go[v * w + c] * inv;
    }
  });
  return out;
}

ValueId broadcast_to_points(Tape& tape, ValueId per_voxel, const MergeMap& merge) {
  const Value& vin = tape.value(per_voxel);
  if (vin.rows != static_cast<std::int64_t>(merge.voxel_count())) {
    throw std::invalid_argument("broadcast_to_points: row count does not match merge map");
  }
  const std::int64_t w = vin.cols;
  const ValueId out = tape.leaf(static_cast<std::int64_t>(merge.point_count()), w);
  {
    Value& vo = tape.value(out);
    for (std::size_t p = 0; p < merge.point_count(); ++p) {
      const std::uint32_t v = merge.point_to_voxel[p];
      std::copy_n(vin.data.begin() + v * w, w, vo.data.begin() + p * w);
    }
  }
  const MergeMap m = merge;
  tape.record([m, per_voxel, out, w](Tape& t) {
    const auto& go = t.grad(out);
    auto& gi = t.grad(per_voxel);
    for (std::size_t p = 0; p < m.point_count(); ++p) {
      const std::uint32_t v = m.point_to_voxel[p];
      for (std::int64_t c = 0; c < w; ++c) gi[v * w + c] += go[p * w + c];
    }
  });
  return out;
}

ValueId sum_all(Tape& tape, ValueId x) {
  const Value& vin = tape.value(x);
  const ValueId out = tape.leaf(1, 1);
  double acc = 0.0;
  for (double v : vin.data) acc += v;
  tape.value(out).data[0] = acc;
  tape.record([x, out](Tape& t) {
    const double g = t.grad(out)[0];
    for (double& gi : t.grad(x)) gi += g;
  });
  return out;
}

ValueId weighted_sum(Tape& tape, ValueId x, std::span<const double> weights) {
  const Value& vin = tape.value(x);
  if (static_cast<std::int64_t>(weights.size()) != vin.count()) {
    throw std::invalid_argument("weighted_sum: weight count mismatch");
  }
  const ValueId out = tape.leaf(1, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * vin.data[i];
  tape.value(out).data[0] = acc;
  const std::vector<double> w(weights.begin(), weights.end());
  tape.record([x, out, w](Tape& t) {
    const double g = t.grad(out)[0];
    auto& gi = t.grad(x);
    for (std::size_t i = 0; i < w.size(); ++i) gi[i] += g * w[i];
  });
  return out;
}

}  // namespace pcar::ag
