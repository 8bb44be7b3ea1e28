#include "pcar/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pcar/adam.hpp"
#include "pcar/chamfer.hpp"
#include "pcar/text_io.hpp"

namespace pcar {

TrainResult train(Network& net, std::span<const PatchPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("train: no patch pairs");
  const TrainParams& tp = net.config().train;
  if (tp.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  if (tp.steps < 0) throw std::invalid_argument("train: steps must be >= 0");
  if (!(tp.lr > 0.0)) throw std::invalid_argument("train: lr must be positive");

  auto& params = net.parameters();
  AdamState adam = make_adam_state(params);
  std::vector<std::vector<double>> grad_acc(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    grad_acc[i].resize(params[i].data.size());
  }

  TrainResult result;
  result.losses.reserve(static_cast<std::size_t>(tp.steps));
  const std::size_t n = pairs.size();

  for (int step = 0; step < tp.steps; ++step) {
    for (auto& g : grad_acc) std::fill(g.begin(), g.end(), 0.0);
    double loss_sum = 0.0;

    for (int i = 0; i < tp.batch; ++i) {
      const PatchPair& pair =
          pairs[(static_cast<std::size_t>(step) * tp.batch + i) % n];
      ag::Tape tape;
      const BoundParams bound = net.bind(tape);
      const PatchGraph graph = net.patch_graph(tape, bound, pair.noisy);
      const ag::ValueId loss = chamfer_loss(tape, graph.pred, pair.clean.positions);
      loss_sum += tape.value(loss).data[0];
      tape.backward(loss);
      for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& g = tape.grad(bound.ids[k]);
        auto& acc = grad_acc[k];
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
      }
    }

    const double mean_loss = loss_sum / tp.batch;
    if (!std::isfinite(mean_loss)) {
      throw std::runtime_error("train: diverged at step " + std::to_string(step) +
                               " (loss " + format_double(mean_loss) + ")");
    }
    if (tp.batch > 1) {
      const double inv = 1.0 / tp.batch;
      for (auto& g : grad_acc) {
        for (double& x : g) x *= inv;
      }
    }
    adam_step(params, grad_acc, adam, tp.lr);
    result.losses.push_back(mean_loss);
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path,
                    std::span<const double> losses) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(losses[i]);
    out += '\n';
  }
  write_text_atomic(path, out);
}

}  // namespace pcar
