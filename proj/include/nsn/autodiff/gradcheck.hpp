#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "nsn/autodiff/tape.hpp"

namespace nsn::ad {

struct GradCheckOptions {
  int samples = 50;
  double step = 1e-5;
  std::uint64_t seed = 0;
  // A coordinate whose one-sided differences disagree by more than this
  // (relative) sits on a kink of a piecewise-linear loss and is not sampled.
  double kink_tolerance = 1e-4;
  // Gradients below relative_floor * (largest |gradient|) are compared
  // against that floor instead of their own magnitude.
  double relative_floor = 1e-8;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  int sampled = 0;
  int skipped_kinks = 0;
};

// Builds the loss on a fresh tape for every evaluation.
using LossBuilder = std::function<Var(Tape<double>&)>;

// Compares reverse-mode gradients with central differences on randomly drawn
// coordinates of `params`:
//   |analytic - fd| / max(|analytic|, |fd|, floor).
GradCheckReport gradient_check(std::span<Parameter<double>* const> params, const LossBuilder& loss,
                               const GradCheckOptions& options = {});

}  // namespace nsn::ad
