#pragma once

#include <functional>
#include <span>
#include <vector>

namespace pcar::testing {

struct FdReport {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central finite differences against the analytic gradient at theta.
// eval(theta) recomputes the scalar loss; grad(theta) recomputes the full
// analytic gradient. Relative error uses max(|fd|, |an|, floor) as the
// denominator so zero-gradient entries do not blow up.
FdReport fd_check(const std::function<double(std::span<const double>)>& eval,
                  const std::function<std::vector<double>(std::span<const double>)>& grad,
                  std::span<const double> theta, double step = 1e-5,
                  double denom_floor = 1e-6);

}  // namespace pcar::testing
