#pragma once

#include <Eigen/SparseCore>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "nsn/operators/linear_map.hpp"
#include "nsn/operators/truncated_svd.hpp"

namespace nsn::ops {

// Parallel-beam geometry on the square [-1, 1]^2 split into grid x grid
// pixels (row 0 at the top). Ray (angle phi, bin b) is the line
// {p : <p, (cos phi, sin phi)> = s_b}, with detector centres s_b spaced
// evenly over the image diagonal [-sqrt 2, sqrt 2].
struct RadonGeometry {
  int grid = 64;
  std::vector<double> angles_deg;
  int detector_bins = 0;

  // `count` angles k * range / count, k = 0 .. count-1, and
  // ceil(sqrt(2) * grid) detector bins.
  static RadonGeometry limited_angle(int grid, int count, double range_deg);

  static int default_bins(int grid);
  double bin_center(int bin) const;
  std::size_t rays() const { return angles_deg.size() * static_cast<std::size_t>(detector_bins); }

  nlohmann::json to_json() const;
  static RadonGeometry from_json(const nlohmann::json& j);
};

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Exact line/pixel intersection lengths for every ray (Siddon traversal).
SparseRowMatrix build_radon_matrix(const RadonGeometry& geometry);

class LimitedAngleRadonOp final : public LinearMap {
 public:
  explicit LimitedAngleRadonOp(RadonGeometry geometry, std::optional<std::filesystem::path> cache_dir = {});
  LimitedAngleRadonOp(RadonGeometry geometry, SparseRowMatrix matrix);

  // One-time construction step: dense truncated SVD of the system matrix.
  // Reuses a cached factorization from the cache directory when present.
  void factorize(double tau = 1e-3);

  OperatorKind kind() const noexcept override { return OperatorKind::LimitedAngleRadon; }
  bool has_pseudoinverse() const noexcept override { return svd_ != nullptr; }
  nlohmann::json descriptor() const override;

  const RadonGeometry& geometry() const noexcept { return geometry_; }
  const SparseRowMatrix& matrix() const noexcept { return matrix_; }
  // Throws StateError before factorize().
  const TruncatedSVDInverse& svd() const;

 protected:
  void apply_impl(const Vector& x, Vector& y) const override;
  void adjoint_impl(const Vector& y, Vector& x) const override;
  void pseudoinverse_impl(const Vector& y, Vector& x) const override;
  void null_space_impl(const Vector& x, Vector& out) const override;
  void null_space_columns_impl(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const override;
  void retained_range_impl(const Vector& y, Vector& out) const override;

 private:
  RadonGeometry geometry_;
  SparseRowMatrix matrix_;
  std::optional<std::filesystem::path> cache_dir_;
  std::shared_ptr<const TruncatedSVDInverse> svd_;
};

// Directory from the NSN_CACHE_DIR environment variable, if set.
std::optional<std::filesystem::path> cache_dir_from_env();

}  // namespace nsn::ops
