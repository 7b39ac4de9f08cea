#include "nsn/operators/dense_matrix.hpp"

namespace nsn::ops {

DenseMatrixOp::DenseMatrixOp(Eigen::MatrixXd matrix, double tau)
    : LinearMap(ImageShape{static_cast<int>(matrix.cols()), 1, 1}, static_cast<std::size_t>(matrix.rows())),
      matrix_(std::move(matrix)),
      svd_(TruncatedSVDInverse::compute(matrix_, tau)) {}

nlohmann::json DenseMatrixOp::descriptor() const {
  nlohmann::json j;
  j["kind"] = to_string(kind());
  j["rows"] = matrix_.rows();
  j["cols"] = matrix_.cols();
  j["tau"] = svd_.tau();
  j["values"] = std::vector<double>(matrix_.data(), matrix_.data() + matrix_.size());
  return j;
}

void DenseMatrixOp::apply_impl(const Vector& x, Vector& y) const { y.noalias() = matrix_ * x; }

void DenseMatrixOp::adjoint_impl(const Vector& y, Vector& x) const { x.noalias() = matrix_.transpose() * y; }

void DenseMatrixOp::pseudoinverse_impl(const Vector& y, Vector& x) const { x = svd_.pseudoinverse(y); }

void DenseMatrixOp::null_space_impl(const Vector& x, Vector& out) const { out = x - svd_.project_row_space(x); }

void DenseMatrixOp::retained_range_impl(const Vector& y, Vector& out) const {
  out = svd_.project_column_space(y);
}

}  // namespace nsn::ops
