#pragma once

#include <Eigen/Core>
#include <filesystem>

namespace nsn::ops {

// Truncated SVD of a dense matrix: keeps singular triplets with
// s_k >= tau * s_1 (and s_k > 0).
class TruncatedSVDInverse {
 public:
  TruncatedSVDInverse(Eigen::MatrixXd left, Eigen::VectorXd singular_values, Eigen::MatrixXd right,
                      double tau, double largest);

  // Thin SVD through LAPACK (dgesdd).
  static TruncatedSVDInverse compute(const Eigen::MatrixXd& matrix, double tau);

  Eigen::VectorXd pseudoinverse(const Eigen::VectorXd& y) const;
  // V_r V_r^T x
  Eigen::VectorXd project_row_space(const Eigen::VectorXd& x) const;
  // U_r U_r^T y
  Eigen::VectorXd project_column_space(const Eigen::VectorXd& y) const;

  int rank() const noexcept { return static_cast<int>(singular_values_.size()); }
  double tau() const noexcept { return tau_; }
  double largest() const noexcept { return largest_; }
  const Eigen::VectorXd& singular_values() const noexcept { return singular_values_; }
  const Eigen::MatrixXd& left() const noexcept { return left_; }
  const Eigen::MatrixXd& right() const noexcept { return right_; }

  void save(const std::filesystem::path& path) const;
  static TruncatedSVDInverse load(const std::filesystem::path& path);

 private:
  Eigen::MatrixXd left_;
  Eigen::VectorXd singular_values_;
  Eigen::MatrixXd right_;
  double tau_;
  double largest_;
};

}  // namespace nsn::ops
