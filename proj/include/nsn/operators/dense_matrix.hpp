#pragma once

#include <Eigen/Core>

#include "nsn/operators/linear_map.hpp"
#include "nsn/operators/truncated_svd.hpp"

namespace nsn::ops {

// Explicit dense matrix; domain is a column (cols x 1 x 1).
class DenseMatrixOp final : public LinearMap {
 public:
  explicit DenseMatrixOp(Eigen::MatrixXd matrix, double tau = 0.0);

  OperatorKind kind() const noexcept override { return OperatorKind::DenseMatrix; }
  bool has_pseudoinverse() const noexcept override { return true; }
  nlohmann::json descriptor() const override;

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  const TruncatedSVDInverse& svd() const noexcept { return svd_; }

 protected:
  void apply_impl(const Vector& x, Vector& y) const override;
  void adjoint_impl(const Vector& y, Vector& x) const override;
  void pseudoinverse_impl(const Vector& y, Vector& x) const override;
  void null_space_impl(const Vector& x, Vector& out) const override;
  void retained_range_impl(const Vector& y, Vector& out) const override;

 private:
  Eigen::MatrixXd matrix_;
  TruncatedSVDInverse svd_;
};

}  // namespace nsn::ops
