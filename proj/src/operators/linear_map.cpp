#include "nsn/operators/linear_map.hpp"

#include <random>

#include "nsn/util/errors.hpp"
#include "nsn/util/hash.hpp"

namespace nsn::ops {

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::DenseMatrix: return "DenseMatrix";
    case OperatorKind::MaskedFourier: return "MaskedFourier";
    case OperatorKind::LimitedAngleRadon: return "LimitedAngleRadon";
  }
  return "unknown";
}

namespace {

void check_size(const char* what, std::size_t got, std::size_t want) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                         std::to_string(got));
  }
}

}  // namespace

Vector LinearMap::apply(const Vector& x) const {
  check_size("apply", static_cast<std::size_t>(x.size()), domain_size());
  Vector y(static_cast<Eigen::Index>(range_));
  apply_impl(x, y);
  return y;
}

Vector LinearMap::adjoint(const Vector& y) const {
  check_size("adjoint", static_cast<std::size_t>(y.size()), range_);
  Vector x(static_cast<Eigen::Index>(domain_size()));
  adjoint_impl(y, x);
  return x;
}

Vector LinearMap::pseudoinverse(const Vector& y) const {
  check_size("pseudoinverse", static_cast<std::size_t>(y.size()), range_);
  if (!has_pseudoinverse()) {
    throw StateError("pseudoinverse: " + to_string(kind()) + " operator has no factorization; call factorize() first");
  }
  Vector x(static_cast<Eigen::Index>(domain_size()));
  pseudoinverse_impl(y, x);
  return x;
}

Vector LinearMap::null_space_project(const Vector& x) const {
  check_size("null_space_project", static_cast<std::size_t>(x.size()), domain_size());
  if (!has_pseudoinverse()) {
    throw StateError("null_space_project: " + to_string(kind()) + " operator has no factorization");
  }
  Vector out(x.size());
  null_space_impl(x, out);
  return out;
}

Eigen::MatrixXd LinearMap::null_space_project_columns(const Eigen::MatrixXd& x) const {
  check_size("null_space_project_columns", static_cast<std::size_t>(x.rows()), domain_size());
  if (!has_pseudoinverse()) {
    throw StateError("null_space_project_columns: " + to_string(kind()) + " operator has no factorization");
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  null_space_columns_impl(x, out);
  return out;
}

Vector LinearMap::project_retained_range(const Vector& y) const {
  check_size("project_retained_range", static_cast<std::size_t>(y.size()), range_);
  Vector out(y.size());
  retained_range_impl(y, out);
  return out;
}

void LinearMap::null_space_impl(const Vector& x, Vector& out) const {
  Vector ax(static_cast<Eigen::Index>(range_));
  apply_impl(x, ax);
  Vector back(x.size());
  pseudoinverse_impl(ax, back);
  out = x - back;
}

void LinearMap::null_space_columns_impl(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const {
  Vector column(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    null_space_impl(x.col(j), column);
    out.col(j) = column;
  }
}

double LinearMap::opnorm() const {
  std::call_once(norm_once_, [this] { norm_ = estimate_opnorm(*this, 100, 0); });
  return norm_;
}

std::string LinearMap::content_hash() const { return util::sha256_hex(descriptor().dump()); }

double estimate_opnorm(const LinearMap& op, int iters, std::uint64_t seed) {
  if (iters < 10) throw std::invalid_argument("estimate_opnorm: iters must be at least 10");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(op.domain_size()));
  for (auto& value : v) value = normal(rng);
  v.normalize();
  double estimate = 0.0;
  for (int i = 0; i < iters; ++i) {
    Vector w = op.adjoint(op.apply(v));
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    // Rayleigh quotient <v, A*A v> with |v| = 1.
    estimate = v.dot(w);
    v = w / norm;
  }
  return std::sqrt(std::max(estimate, 0.0));
}

}  // namespace nsn::ops
