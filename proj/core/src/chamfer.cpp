#include "pcar/chamfer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pcar/grid_index.hpp"

namespace pcar {

double chamfer_loss(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("chamfer_loss: empty point set");
  }
  GridIndex ia(a);
  GridIndex ib(b);
  double loss = 0.0;
  for (const Vec3& x : a) loss += ib.nearest_sq_dist(x);
  for (const Vec3& y : b) loss += ia.nearest_sq_dist(y);
  return loss;
}

ag::ValueId chamfer_loss(ag::Tape& tape, ag::ValueId pred,
                         std::span<const Vec3> target) {
  const ag::Value& vp = tape.value(pred);
  if (vp.cols != 3) throw std::invalid_argument("chamfer_loss: pred must be rows x 3");
  const std::size_t n = static_cast<std::size_t>(vp.rows);
  if (n == 0 || target.empty()) {
    throw std::invalid_argument("chamfer_loss: empty point set");
  }

  std::vector<Vec3> pp(n);
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    pp[i] = {vp.data[i * 3], vp.data[i * 3 + 1], vp.data[i * 3 + 2]};
    finite = finite && std::isfinite(pp[i].x) && std::isfinite(pp[i].y) &&
             std::isfinite(pp[i].z);
  }

  // Divergent predictions: surface a non-finite loss without feeding the
  // spatial index garbage. The training loop treats it as an abort signal.
  if (!finite) {
    const ag::ValueId out = tape.leaf(1, 1);
    tape.value(out).data[0] = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  GridIndex it(target);
  GridIndex ip(pp);

  // Correspondences cached for the backward pass.
  std::vector<Vec3> match_of_pred(n);       // nearest target per pred point
  std::vector<std::uint32_t> pred_of_target(target.size());
  std::vector<Vec3> target_copy(target.begin(), target.end());

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    const std::size_t j = it.nearest(pp[i], &d);
    match_of_pred[i] = target[j];
    loss += d;
  }
  for (std::size_t k = 0; k < target.size(); ++k) {
    double d = 0.0;
    const std::size_t i = ip.nearest(target[k], &d);
    pred_of_target[k] = static_cast<std::uint32_t>(i);
    loss += d;
  }

  const ag::ValueId out = tape.leaf(1, 1);
  tape.value(out).data[0] = loss;

  tape.record([pred, out, n, match_of_pred = std::move(match_of_pred),
               pred_of_target = std::move(pred_of_target),
               target_copy = std::move(target_copy)](ag::Tape& t) {
    const double g = t.grad(out)[0];
    const auto& vp = t.value(pred);
    auto& gp = t.grad(pred);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 x{vp.data[i * 3], vp.data[i * 3 + 1], vp.data[i * 3 + 2]};
      const Vec3 y = match_of_pred[i];
      gp[i * 3] += g * 2.0 * (x.x - y.x);
      gp[i * 3 + 1] += g * 2.0 * (x.y - y.y);
      gp[i * 3 + 2] += g * 2.0 * (x.z - y.z);
    }
    for (std::size_t k = 0; k < target_copy.size(); ++k) {
      const std::size_t i = pred_of_target[k];
      const Vec3 x{vp.data[i * 3], vp.data[i * 3 + 1], vp.data[i * 3 + 2]};
      const Vec3 y = target_copy[k];
      gp[i * 3] += g * 2.0 * (x.x - y.x);
      gp[i * 3 + 1] += g * 2.0 * (x.y - y.y);
      gp[i * 3 + 2] += g * 2.0 * (x.z - y.z);
    }
  });
  return out;
}

}  // namespace pcar
