#include "nsn/objectives/losses.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nsn/util/errors.hpp"

namespace nsn::obj {

using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

template <typename T>
void check_pair(const Tensor<T>& rec, const Tensor<T>& truth, const char* who) {
  if (rec.shape() != truth.shape()) {
    throw DimensionError(std::string(who) + ": " + rec.shape().str() + " vs " + truth.shape().str());
  }
  if (rec.shape().n == 0 || rec.empty()) throw std::invalid_argument(std::string(who) + ": empty batch");
}

template <typename T>
void check_rho(const Tensor<T>& rho, const Tensor<T>& rec) {
  if (rho.shape() != rec.shape()) throw DimensionError("uncertainty_loss: rho shape " + rho.shape().str());
  if (!rho.all_finite()) throw FaultError("uncertainty_loss: non-finite log-scale map");
}

template <typename T>
T sign(T v) {
  return static_cast<T>((v > T(0)) - (v < T(0)));
}

}  // namespace

template <typename T>
LossValue mae_risk(const Tensor<T>& rec, const Tensor<T>& truth) {
  check_pair(rec, truth, "mae_risk");
  LossValue out{0.0, Tensor<double>(rec.shape())};
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double r = static_cast<double>(rec[i]) - static_cast<double>(truth[i]);
    out.residual[i] = r;
    out.value += std::abs(r);
  }
  out.value /= rec.shape().n;
  return out;
}

template <typename T>
LossValue uncertainty_loss(const Tensor<T>& rec, const Tensor<T>& rho, const Tensor<T>& truth) {
  check_pair(rec, truth, "uncertainty_loss");
  check_rho(rho, rec);
  LossValue out{0.0, Tensor<double>(rec.shape())};
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double r = static_cast<double>(rec[i]) - static_cast<double>(truth[i]);
    const double p = rho[i];
    out.residual[i] = r;
    out.value += std::abs(r) * std::exp(-p) + std::numbers::ln2 + p;
  }
  out.value /= rec.shape().n;
  return out;
}

double uncertainty_loss_lower_bound(const Tensor<double>& residual) {
  if (residual.shape().n == 0) throw std::invalid_argument("uncertainty_loss_lower_bound: empty batch");
  double total = 0.0;
  for (double r : residual.values()) {
    if (r != 0.0) total += 1.0 + std::log(2.0 * std::abs(r));
  }
  return total / residual.shape().n;
}

template <typename T>
Var mae_risk(Tape<T>& tape, Var rec, Var truth) {
  const Tensor<T>& rv = tape.value(rec);
  const Tensor<T>& tv = tape.value(truth);
  check_pair(rv, tv, "mae_risk");
  const T scale = T(1) / static_cast<T>(rv.shape().n);
  T total = T(0);
  for (std::size_t i = 0; i < rv.size(); ++i) total += std::abs(rv[i] - tv[i]);
  const Var result{tape.size()};
  const bool needs = tape.requires_grad(rec) || tape.requires_grad(truth);
  return tape.push("mae_risk", Tensor<T>(Shape{1, 1, 1, 1}, total * scale), needs,
                   [rec, truth, result, scale](Tape<T>& t) {
                     const T go = t.grad(result)[0] * scale;
                     const Tensor<T>& rv = t.value(rec);
                     const Tensor<T>& tv = t.value(truth);
                     const bool want_rec = t.requires_grad(rec);
                     const bool want_truth = t.requires_grad(truth);
                     for (std::size_t i = 0; i < rv.size(); ++i) {
                       const T g = go * sign(rv[i] - tv[i]);
                       if (want_rec) t.grad_buffer(rec)[i] += g;
                       if (want_truth) t.grad_buffer(truth)[i] -= g;
                     }
                   });
}

template <typename T>
Var uncertainty_loss(Tape<T>& tape, Var rec, Var rho, Var truth) {
  const Tensor<T>& rv = tape.value(rec);
  const Tensor<T>& pv = tape.value(rho);
  const Tensor<T>& tv = tape.value(truth);
  check_pair(rv, tv, "uncertainty_loss");
  check_rho(pv, rv);
  const T scale = T(1) / static_cast<T>(rv.shape().n);
  T total = T(0);
  for (std::size_t i = 0; i < rv.size(); ++i) {
    total += std::abs(rv[i] - tv[i]) * std::exp(-pv[i]) + std::numbers::ln2_v<T> + pv[i];
  }
  const Var result{tape.size()};
  const bool needs = tape.requires_grad(rec) || tape.requires_grad(rho) || tape.requires_grad(truth);
  return tape.push("uncertainty_loss", Tensor<T>(Shape{1, 1, 1, 1}, total * scale), needs,
                   [rec, rho, truth, result, scale](Tape<T>& t) {
                     const T go = t.grad(result)[0] * scale;
                     const Tensor<T>& rv = t.value(rec);
                     const Tensor<T>& pv = t.value(rho);
                     const Tensor<T>& tv = t.value(truth);
                     const bool want_rec = t.requires_grad(rec);
                     const bool want_rho = t.requires_grad(rho);
                     const bool want_truth = t.requires_grad(truth);
                     for (std::size_t i = 0; i < rv.size(); ++i) {
                       const T r = rv[i] - tv[i];
                       const T inv_sigma = std::exp(-pv[i]);
                       const T g = go * sign(r) * inv_sigma;
                       if (want_rec) t.grad_buffer(rec)[i] += g;
                       if (want_truth) t.grad_buffer(truth)[i] -= g;
                       if (want_rho) t.grad_buffer(rho)[i] += go * (T(1) - std::abs(r) * inv_sigma);
                     }
                   });
}

#define NSN_INSTANTIATE_LOSSES(T)                                                          \
  template LossValue mae_risk<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template LossValue uncertainty_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Var mae_risk<T>(Tape<T>&, Var, Var);                                            \
  template Var uncertainty_loss<T>(Tape<T>&, Var, Var, Var);

NSN_INSTANTIATE_LOSSES(float)
NSN_INSTANTIATE_LOSSES(double)

}  // namespace nsn::obj
