#pragma once

#include "nsn/autodiff/tape.hpp"

namespace nsn::obj {

// Scalar loss plus the per-pixel residual x_rec - x_true.
struct LossValue {
  double value = 0.0;
  ad::Tensor<double> residual;
};

// (1/N) sum_i ||x_rec,i - x_true,i||_1 over a batch of N samples.
template <typename T>
LossValue mae_risk(const ad::Tensor<T>& rec, const ad::Tensor<T>& truth);

// Laplace negative log-likelihood with log-scale map rho = log(sigma):
// (1/N) sum_{i,p} |r_{i,p}| exp(-rho_{i,p}) + log 2 + rho_{i,p}.
template <typename T>
LossValue uncertainty_loss(const ad::Tensor<T>& rec, const ad::Tensor<T>& rho, const ad::Tensor<T>& truth);

// Lower bound of uncertainty_loss for fixed residuals, attained at
// sigma_p = |r_p|. Pixels with r_p = 0 are skipped.
double uncertainty_loss_lower_bound(const ad::Tensor<double>& residual);

// Differentiable versions recorded on a tape. The MAE gradient w.r.t. rec is
// sign(r) / N with sign(0) = 0.
template <typename T>
ad::Var mae_risk(ad::Tape<T>& tape, ad::Var rec, ad::Var truth);

template <typename T>
ad::Var uncertainty_loss(ad::Tape<T>& tape, ad::Var rec, ad::Var rho, ad::Var truth);

}  // namespace nsn::obj
