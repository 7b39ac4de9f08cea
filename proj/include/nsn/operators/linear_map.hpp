#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>

namespace nsn::ops {

using Vector = Eigen::VectorXd;

enum class OperatorKind { DenseMatrix, MaskedFourier, LimitedAngleRadon };

std::string to_string(OperatorKind kind);

// Image grid of the operator domain. Vectors are laid out channel-major,
// then row-major inside each channel.
struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 1;

  std::size_t size() const { return static_cast<std::size_t>(height) * width * channels; }
  bool operator==(const ImageShape&) const = default;
};

// Matrix-free linear forward model A : R^n -> R^m.
//
// Instances are immutable once constructed (apart from the one-time
// factorization of operators that need an SVD) and can be shared between
// threads.
class LinearMap {
 public:
  virtual ~LinearMap() = default;

  virtual OperatorKind kind() const noexcept = 0;
  const ImageShape& domain_shape() const noexcept { return domain_; }
  std::size_t domain_size() const noexcept { return domain_.size(); }
  std::size_t range_size() const noexcept { return range_; }

  Vector apply(const Vector& x) const;
  Vector adjoint(const Vector& y) const;

  virtual bool has_pseudoinverse() const noexcept = 0;
  // A‡ y. Throws StateError if the operator has no (truncated) inverse yet.
  Vector pseudoinverse(const Vector& y) const;
  // P0 x = x - A‡ A x, the orthogonal projection onto ker A.
  Vector null_space_project(const Vector& x) const;
  // P0 applied to every column of X.
  Eigen::MatrixXd null_space_project_columns(const Eigen::MatrixXd& x) const;
  // Orthogonal projection of a measurement onto the retained part of ran A.
  // Identity unless the inverse is truncated.
  Vector project_retained_range(const Vector& y) const;

  // Spectral norm, estimated once by power iteration and cached.
  double opnorm() const;

  virtual nlohmann::json descriptor() const = 0;
  // SHA-256 of the serialized descriptor.
  std::string content_hash() const;

 protected:
  LinearMap(ImageShape domain, std::size_t range) : domain_(domain), range_(range) {}

  virtual void apply_impl(const Vector& x, Vector& y) const = 0;
  virtual void adjoint_impl(const Vector& y, Vector& x) const = 0;
  virtual void pseudoinverse_impl(const Vector& y, Vector& x) const = 0;
  virtual void null_space_impl(const Vector& x, Vector& out) const;
  virtual void null_space_columns_impl(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const;
  virtual void retained_range_impl(const Vector& y, Vector& out) const { out = y; }

 private:
  ImageShape domain_;
  std::size_t range_;
  mutable std::once_flag norm_once_;
  mutable double norm_ = 0.0;
};

// Power iteration on A*A from a seeded random start.
double estimate_opnorm(const LinearMap& op, int iters = 50, std::uint64_t seed = 0);

}  // namespace nsn::ops
