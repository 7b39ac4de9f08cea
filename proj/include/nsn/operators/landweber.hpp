#pragma once

#include "nsn/operators/linear_map.hpp"

namespace nsn::ops {

struct LandweberConfig {
  int steps = 15;
  double stepsize = 0.003;
  // Run even when stepsize > 2 / |A|^2 (a warning is logged instead).
  bool allow_unstable = false;
};

// x_{j+1} = x_j - stepsize * A^*(A x_j - y), starting from x0.
//
// Throws std::invalid_argument for steps < 1 or stepsize <= 0,
// StabilityError when stepsize exceeds the bound without allow_unstable,
// and DivergenceError once the residual norm grows beyond 10x its initial
// value.
Vector landweber_project(const LinearMap& op, const Vector& x0, const Vector& y, const LandweberConfig& cfg);

// Largest stable stepsize 2 / |A|^2.
double landweber_stability_bound(const LinearMap& op);

}  // namespace nsn::ops
