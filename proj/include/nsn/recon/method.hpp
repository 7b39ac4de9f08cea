#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nsn/autodiff/unet.hpp"
#include "nsn/operators/landweber.hpp"
#include "nsn/operators/linear_map.hpp"

namespace nsn::recon {

enum class MethodTag {
  Pseudoinverse,
  Residual1,
  Residual2,
  ProjResidual1,
  ProjResidual2,
  NullSpace1,
  NullSpace2,
  NullSpace1Unc,
  NullSpace2Unc,
};

struct MethodTraits {
  int cascade = 0;  // number of learned blocks, 0 for the pseudoinverse
  bool null_space = false;
  bool projected = false;
  bool uncertainty = false;
};

// All tags in presentation order.
const std::array<MethodTag, 9>& all_methods();
MethodTraits traits(MethodTag tag);
std::string to_string(MethodTag tag);
// Throws std::invalid_argument for unknown names.
MethodTag parse_method(std::string_view name);
// Tag whose trained weights a method runs with: projected residual methods
// reuse the residual networks and only add the projection at inference.
MethodTag weights_source(MethodTag tag);

struct NetworkConfig {
  int depth = 2;
  int base_channels = 16;
  double slope = 0.1;
  // Maximum number of learned blocks accepted.
  static constexpr int kMaxCascade = 2;
};

// Bound applied to the predicted log-scale map rho = log sigma.
inline constexpr double kLogScaleBound = 10.0;

// Landweber defaults per operator: stepsize 0.003 for tomography and 1 for
// the masked Fourier operator (where A A* = Id), 15 steps each.
ops::LandweberConfig default_landweber(ops::OperatorKind kind);

template <typename T>
struct ForwardResult {
  ad::Var recon;
  std::optional<ad::Var> log_scale;
};

template <typename T>
struct UncertaintyOutput {
  ad::Tensor<T> recon;
  // rho = log sigma, present for uncertainty variants.
  std::optional<ad::Tensor<T>> log_scale;
  ad::Tensor<T> pseudoinverse;
};

// P0 applied to every sample of a batch, recorded on the tape. P0 is
// self-adjoint, so the backward pass applies it again.
template <typename T>
ad::Var null_space_project(ad::Tape<T>& tape, ad::Var x, const ops::LinearMap& op);

// One reconstruction pipeline: x‡ = A‡ y followed by up to two learned
// residual or null-space blocks and, for projected variants, a Landweber
// projection toward {x : A x = A x‡}.
template <typename T>
class ReconMethod {
 public:
  ReconMethod(MethodTag tag, std::shared_ptr<const ops::LinearMap> op, NetworkConfig network = {},
              std::uint64_t seed = 0, std::optional<ops::LandweberConfig> landweber = std::nullopt);

  MethodTag tag() const noexcept { return tag_; }
  const ops::LinearMap& op() const noexcept { return *op_; }
  std::shared_ptr<const ops::LinearMap> op_ptr() const noexcept { return op_; }
  const NetworkConfig& network() const noexcept { return network_; }
  const ops::LandweberConfig& landweber() const noexcept { return landweber_; }

  std::vector<ad::SmallUNet<T>>& blocks() noexcept { return blocks_; }
  std::vector<ad::Parameter<T>*> parameters();
  std::vector<const ad::Parameter<T>*> parameters() const;

  ad::Shape batch_shape(int batch) const;
  ad::Tensor<T> to_batch(std::span<const ops::Vector> images) const;
  std::vector<ops::Vector> to_vectors(const ad::Tensor<T>& batch) const;

  ad::Tensor<T> pseudoinverse(std::span<const ops::Vector> measurements) const;

  // Learned part of the pipeline applied to a recorded batch x‡.
  ForwardResult<T> forward(ad::Tape<T>& tape, ad::Var pseudoinverse);

  // Full inference path including the Landweber projection.
  UncertaintyOutput<T> reconstruct(std::span<const ops::Vector> measurements);
  UncertaintyOutput<T> reconstruct_from(const ad::Tensor<T>& pseudoinverse);

  // Writes or reads `<stem>.bin` / `<stem>.json`. Loading accepts
  // checkpoints of the tag's weights source and throws ValidationError
  // otherwise.
  void save(const std::filesystem::path& stem) const;
  void load(const std::filesystem::path& stem);

 private:
  MethodTag tag_;
  std::shared_ptr<const ops::LinearMap> op_;
  NetworkConfig network_;
  ops::LandweberConfig landweber_;
  std::vector<ad::SmallUNet<T>> blocks_;
};

extern template class ReconMethod<float>;
extern template class ReconMethod<double>;

// |A x_rec - y| / max(|y|, machine epsilon).
double data_consistency_gap(const ops::LinearMap& op, const ops::Vector& x_rec, const ops::Vector& y);

// Same ratio measured on the retained part of the range. For truncated
// inverses this ignores the components the inverse deliberately drops.
double retained_consistency_gap(const ops::LinearMap& op, const ops::Vector& x_rec, const ops::Vector& y);

}  // namespace nsn::recon
