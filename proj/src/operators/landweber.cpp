#include "nsn/operators/landweber.hpp"

#include <iostream>
#include <sstream>

#include "nsn/util/errors.hpp"

namespace nsn::ops {

double landweber_stability_bound(const LinearMap& op) {
  const double norm = op.opnorm();
  return norm > 0.0 ? 2.0 / (norm * norm) : std::numeric_limits<double>::infinity();
}

Vector landweber_project(const LinearMap& op, const Vector& x0, const Vector& y, const LandweberConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("landweber_project: steps must be positive");
  if (!(cfg.stepsize > 0.0)) throw std::invalid_argument("landweber_project: stepsize must be positive");

  const double bound = landweber_stability_bound(op);
  if (cfg.stepsize > bound) {
    std::ostringstream msg;
    msg << "landweber_project: stepsize " << cfg.stepsize << " exceeds the stability bound 2/|A|^2 = " << bound;
    if (!cfg.allow_unstable) throw StabilityError(msg.str());
    std::cerr << "warning: " << msg.str() << '\n';
  }

  Vector x = x0;
  Vector residual = op.apply(x) - y;
  const double initial = residual.norm();
  for (int j = 0; j < cfg.steps; ++j) {
    x -= cfg.stepsize * op.adjoint(residual);
    residual = op.apply(x) - y;
    const double current = residual.norm();
    if (!std::isfinite(current) || current > 10.0 * initial) {
      std::ostringstream msg;
      msg << "landweber_project: diverged at step " << j + 1 << " with stepsize lambda = " << cfg.stepsize
          << " (residual " << current << ", initial " << initial << ")";
      throw DivergenceError(msg.str());
    }
  }
  return x;
}

}  // namespace nsn::ops
