#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pcar/sparse_tensor.hpp"

namespace pcar::ag {

using ValueId = std::int32_t;

// Dense row-major buffer; the unit every tape operation consumes/produces.
// Feature matrices are [n_rows x width], positions are [n x 3], scalars 1x1.
struct Value {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> data;

  std::int64_t count() const { return rows * cols; }
};

// Reverse-mode tape. Operations append a backward closure as they execute;
// backward() replays them once in reverse, accumulating gradients additively.
// Gradients start at zero, so parameters off the loss path report zero.
class Tape {
 public:
  ValueId leaf(std::int64_t rows, std::int64_t cols);
  ValueId leaf(std::span<const double> data, std::int64_t rows, std::int64_t cols);

  Value& value(ValueId id) { return values_[static_cast<std::size_t>(id)]; }
  const Value& value(ValueId id) const { return values_[static_cast<std::size_t>(id)]; }
  std::vector<double>& grad(ValueId id) { return grads_[static_cast<std::size_t>(id)]; }
  const std::vector<double>& grad(ValueId id) const {
    return grads_[static_cast<std::size_t>(id)];
  }

  void record(std::function<void(Tape&)> backward_fn);

  // Seeds d(loss)/d(loss) = 1 and replays the tape. loss must be scalar.
  // Throws std::logic_error on a second call.
  void backward(ValueId loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  // Deques keep value/grad references stable while ops append new leaves.
  std::deque<Value> values_;
  std::deque<std::vector<double>> grads_;
  std::vector<std::function<void(Tape&)>> nodes_;
  bool backward_done_ = false;
};

// Sparse tensor: unique integer coordinates at a stride, features on the tape.
struct SparseTensor {
  CoordMapPtr coords;
  int stride = 1;
  ValueId features = -1;
};

int feature_width(const Tape& tape, const SparseTensor& x);

// Gather/scatter pairs per kernel tap; built once per layer per patch and
// captured by the backward closure.
struct KernelMap {
  // pairs[t] lists (input_row, output_row) contributions of tap t.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> pairs;
};
using KernelMapPtr = std::shared_ptr<const KernelMap>;

// Tap enumeration: 3^3 offsets (dx,dy,dz) in {-1,0,1} with
// t = (dx+1)*9 + (dy+1)*3 + (dz+1)  (center tap = 13);
// 2^3 offsets in {0,1} with t = dx*4 + dy*2 + dz.
inline constexpr int kSubmanifoldTaps = 27;
inline constexpr int kBlockTaps = 8;
inline constexpr int kSubmanifoldCenterTap = 13;

KernelMapPtr build_submanifold_map(const CoordMap& coords, int stride);
std::pair<KernelMapPtr, CoordMapPtr> build_strided_map(const CoordMap& in, int in_stride);
KernelMapPtr build_transposed_map(const CoordMap& parents, int parent_stride,
                                  const CoordMap& target, int target_stride);

// 3^3 convolution over occupied voxels only; output coordinates equal input
// coordinates (no dilation). weights is [27*in_ch x out_ch], bias [1 x out_ch].
// A prebuilt map for x.coords may be supplied to share work between layers.
SparseTensor submanifold_conv(Tape& tape, const SparseTensor& x, int in_ch,
                              int out_ch, ValueId weights, ValueId bias,
                              KernelMapPtr map = nullptr);

// 2^3 stride-2 convolution. Output coords are the occupied 2x2x2 block bases
// (floor to the doubled stride); output stride doubles.
SparseTensor strided_conv(Tape& tape, const SparseTensor& x, int in_ch,
                          int out_ch, ValueId weights, ValueId bias);

// 2^3 transposed convolution onto the coordinate set recorded from the
// matching encoder level. x.stride must be 2 * target stride; every target
// coordinate must have its parent block occupied in x.
SparseTensor transposed_conv(Tape& tape, const SparseTensor& x, int in_ch,
                             int out_ch, ValueId weights, ValueId bias,
                             const CoordMapPtr& target, int target_stride);

// Same coordinate set and stride required; widths add.
SparseTensor concat_features(Tape& tape, const SparseTensor& a, const SparseTensor& b);

SparseTensor relu(Tape& tape, const SparseTensor& x);

// Duplicate-coordinate merge: voxel feature = mean of its points' features.
ValueId merge_mean(Tape& tape, ValueId per_point, const MergeMap& merge);

// Per-voxel rows copied back out to per-point rows.
ValueId broadcast_to_points(Tape& tape, ValueId per_voxel, const MergeMap& merge);

// Scalar reductions (1x1 outputs).
ValueId sum_all(Tape& tape, ValueId x);
ValueId weighted_sum(Tape& tape, ValueId x, std::span<const double> weights);

}  // namespace pcar::ag
