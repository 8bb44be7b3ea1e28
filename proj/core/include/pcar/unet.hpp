#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcar/autograd.hpp"
#include "pcar/sampler.hpp"
#include "pcar/sparse_tensor.hpp"
#include "pcar/tensor.hpp"

namespace pcar {

// Head variants from the ablation: one_hot is the axis-constrained noise
// head; soft multiplies the raw projection vector by the weight; direct
// emits the projection vector as the noise.
enum class HeadMode { OneHot, Soft, Direct };

HeadMode parse_head_mode(std::string_view name);
std::string_view head_mode_name(HeadMode mode);

struct TrainParams {
  double lr = 1e-3;
  int steps = 100;
  int batch = 1;
  std::uint64_t seed = 1;
};

struct NetConfig {
  int depth = 3;
  int base_channels = 16;
  HeadMode head_mode = HeadMode::OneHot;
  TrainParams train;
};

// Argmax with ties to the lowest axis. Throws on NaN.
int argmax_axis(const Vec3& v);
// Hard axis selector: exactly one component is 1, at the argmax.
std::array<double, 3> one_hot(const Vec3& v);

// Raw head output per patch point.
struct NetworkOutput {
  std::vector<Vec3> V;
  std::vector<double> w;
};

// Per-point noise vector delta.
using QuantNoise = std::vector<Vec3>;

// one_hot: delta = one_hot(V) * w; soft: delta = V * w; direct: delta = V.
QuantNoise quantization_noise(const NetworkOutput& out, HeadMode mode);

// position_i - delta_i; indices/origin/side preserved. Throws on length
// mismatch.
Patch clean_patch(const Patch& noisy, const QuantNoise& noise);

// Patch positions floored to the unit grid, duplicates merged.
struct VoxelizedPatch {
  CoordMapPtr coords;
  MergeMap merge;
};
VoxelizedPatch voxelize_patch(const Patch& patch);

// Parameter ValueIds for one tape, ordered like Network::parameters().
struct BoundParams {
  std::vector<ag::ValueId> ids;
};

// Differentiable per-patch pipeline: forward -> head noise -> subtraction.
struct PatchGraph {
  ag::ValueId noise;  // [n x 3]
  ag::ValueId pred;   // [n x 3] cleaned positions, patch frame
};

// U-Net over sparse voxels: per level one 3^3 submanifold conv plus a 2^3
// stride-2 downsampling conv, channels doubling; decoder mirrors with 2^3
// transposed convs onto the cached encoder coordinates and skip
// concatenations; 4-channel head (V, w) with no activation.
class Network {
 public:
  explicit Network(const NetConfig& cfg);

  const NetConfig& config() const { return cfg_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::int64_t parameter_count() const;

  BoundParams bind(ag::Tape& tape) const;

  // Per-voxel 4-channel head output for a unit-stride input tensor.
  ag::SparseTensor forward(ag::Tape& tape, const BoundParams& bound,
                           const ag::SparseTensor& input) const;

  PatchGraph patch_graph(ag::Tape& tape, const BoundParams& bound,
                         const Patch& patch) const;

 private:
  struct Layer {
    enum class Kind { Sub, Down, Up } kind;
    std::string name;
    int in_ch = 0;
    int out_ch = 0;
    bool activated = true;
    std::size_t w = 0;  // indices into params_
    std::size_t b = 0;
  };

  NetConfig cfg_;
  std::vector<Layer> layers_;
  std::vector<Tensor> params_;
};

Network build_unet(const NetConfig& cfg);

// Per-point (V, w) for a patch (broadcast from the merged voxels).
NetworkOutput forward_output(const Network& net, const Patch& patch);

// clean_patch(patch, quantization_noise(forward_output(patch), head_mode)).
Patch infer(const Network& net, const Patch& patch);

}  // namespace pcar
