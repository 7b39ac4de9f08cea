#include "nsn/recon/method.hpp"

#include <limits>
#include <stdexcept>

#include "nsn/autodiff/checkpoint.hpp"
#include "nsn/util/errors.hpp"

namespace nsn::recon {

using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

const std::array<MethodTag, 9>& all_methods() {
  static const std::array<MethodTag, 9> tags = {
      MethodTag::Pseudoinverse, MethodTag::Residual1,     MethodTag::Residual2,
      MethodTag::ProjResidual1, MethodTag::ProjResidual2, MethodTag::NullSpace1,
      MethodTag::NullSpace2,    MethodTag::NullSpace1Unc, MethodTag::NullSpace2Unc,
  };
  return tags;
}

MethodTraits traits(MethodTag tag) {
  switch (tag) {
    case MethodTag::Pseudoinverse: return {0, false, false, false};
    case MethodTag::Residual1: return {1, false, false, false};
    case MethodTag::Residual2: return {2, false, false, false};
    case MethodTag::ProjResidual1: return {1, false, true, false};
    case MethodTag::ProjResidual2: return {2, false, true, false};
    case MethodTag::NullSpace1: return {1, true, false, false};
    case MethodTag::NullSpace2: return {2, true, false, false};
    case MethodTag::NullSpace1Unc: return {1, true, false, true};
    case MethodTag::NullSpace2Unc: return {2, true, false, true};
  }
  throw std::invalid_argument("traits: unknown method tag");
}

std::string to_string(MethodTag tag) {
  switch (tag) {
    case MethodTag::Pseudoinverse: return "Pseudoinverse";
    case MethodTag::Residual1: return "Residual1";
    case MethodTag::Residual2: return "Residual2";
    case MethodTag::ProjResidual1: return "ProjResidual1";
    case MethodTag::ProjResidual2: return "ProjResidual2";
    case MethodTag::NullSpace1: return "NullSpace1";
    case MethodTag::NullSpace2: return "NullSpace2";
    case MethodTag::NullSpace1Unc: return "NullSpace1Unc";
    case MethodTag::NullSpace2Unc: return "NullSpace2Unc";
  }
  return "unknown";
}

MethodTag parse_method(std::string_view name) {
  for (MethodTag tag : all_methods()) {
    if (to_string(tag) == name) return tag;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

MethodTag weights_source(MethodTag tag) {
  if (tag == MethodTag::ProjResidual1) return MethodTag::Residual1;
  if (tag == MethodTag::ProjResidual2) return MethodTag::Residual2;
  return tag;
}

ops::LandweberConfig default_landweber(ops::OperatorKind kind) {
  ops::LandweberConfig cfg;
  cfg.steps = 15;
  cfg.stepsize = kind == ops::OperatorKind::LimitedAngleRadon ? 0.003 : 1.0;
  return cfg;
}

template <typename T>
Var null_space_project(Tape<T>& tape, Var x, const ops::LinearMap& op) {
  const ops::LinearMap* map = &op;
  ad::BatchMap<T> project = [map](const Tensor<T>& in, Tensor<T>& out) {
    const Shape s = in.shape();
    const auto n = static_cast<Eigen::Index>(s.sample());
    if (static_cast<std::size_t>(n) != map->domain_size()) {
      throw DimensionError("null_space_project: sample size " + std::to_string(n) + " does not match the operator");
    }
    Eigen::MatrixXd columns(n, s.n);
    for (int b = 0; b < s.n; ++b) {
      auto sample = in.sample(b);
      for (Eigen::Index i = 0; i < n; ++i) columns(i, b) = static_cast<double>(sample[i]);
    }
    const Eigen::MatrixXd projected = map->null_space_project_columns(columns);
    for (int b = 0; b < s.n; ++b) {
      auto sample = out.sample(b);
      for (Eigen::Index i = 0; i < n; ++i) sample[i] = static_cast<T>(projected(i, b));
    }
  };
  return ad::linear(tape, x, project, project, "null_space_project");
}

template <typename T>
ReconMethod<T>::ReconMethod(MethodTag tag, std::shared_ptr<const ops::LinearMap> op, NetworkConfig network,
                            std::uint64_t seed, std::optional<ops::LandweberConfig> landweber)
    : tag_(tag), op_(std::move(op)), network_(network) {
  if (!op_) throw std::invalid_argument("ReconMethod: operator is null");
  if (!op_->has_pseudoinverse()) {
    throw StateError("ReconMethod: " + ops::to_string(op_->kind()) + " operator has no pseudoinverse");
  }
  landweber_ = landweber.value_or(default_landweber(op_->kind()));
  const MethodTraits t = traits(tag);
  if (t.cascade > NetworkConfig::kMaxCascade) throw std::invalid_argument("ReconMethod: cascade longer than 2");
  const int channels = op_->domain_shape().channels;
  blocks_.reserve(static_cast<std::size_t>(t.cascade));
  for (int k = 0; k < t.cascade; ++k) {
    ad::UNetConfig cfg;
    cfg.in_channels = channels;
    cfg.out_channels = channels;
    cfg.depth = network.depth;
    cfg.base_channels = network.base_channels;
    cfg.slope = network.slope;
    cfg.two_heads = t.uncertainty && k == t.cascade - 1;
    blocks_.emplace_back(cfg, "b" + std::to_string(k) + ".", seed + static_cast<std::uint64_t>(k));
  }
}

template <typename T>
std::vector<ad::Parameter<T>*> ReconMethod<T>::parameters() {
  std::vector<ad::Parameter<T>*> out;
  for (auto& block : blocks_) {
    auto p = block.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

template <typename T>
std::vector<const ad::Parameter<T>*> ReconMethod<T>::parameters() const {
  std::vector<const ad::Parameter<T>*> out;
  for (const auto& block : blocks_) {
    auto p = block.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

template <typename T>
Shape ReconMethod<T>::batch_shape(int batch) const {
  const ops::ImageShape& d = op_->domain_shape();
  return Shape{batch, d.channels, d.height, d.width};
}

template <typename T>
Tensor<T> ReconMethod<T>::to_batch(std::span<const ops::Vector> images) const {
  Tensor<T> out(batch_shape(static_cast<int>(images.size())));
  for (std::size_t b = 0; b < images.size(); ++b) {
    if (static_cast<std::size_t>(images[b].size()) != op_->domain_size()) {
      throw DimensionError("to_batch: image " + std::to_string(b) + " has the wrong length");
    }
    auto sample = out.sample(static_cast<int>(b));
    for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = static_cast<T>(images[b][static_cast<Eigen::Index>(i)]);
  }
  return out;
}

template <typename T>
std::vector<ops::Vector> ReconMethod<T>::to_vectors(const Tensor<T>& batch) const {
  if (batch.shape() != batch_shape(batch.shape().n)) {
    throw DimensionError("to_vectors: batch shape " + batch.shape().str() + " does not match the operator");
  }
  std::vector<ops::Vector> out;
  for (int b = 0; b < batch.shape().n; ++b) {
    auto sample = batch.sample(b);
    ops::Vector v(static_cast<Eigen::Index>(sample.size()));
    for (std::size_t i = 0; i < sample.size(); ++i) v[static_cast<Eigen::Index>(i)] = sample[i];
    out.push_back(std::move(v));
  }
  return out;
}

template <typename T>
Tensor<T> ReconMethod<T>::pseudoinverse(std::span<const ops::Vector> measurements) const {
  std::vector<ops::Vector> images;
  images.reserve(measurements.size());
  for (const auto& y : measurements) images.push_back(op_->pseudoinverse(y));
  return to_batch(images);
}

template <typename T>
ForwardResult<T> ReconMethod<T>::forward(Tape<T>& tape, Var pseudoinverse) {
  const MethodTraits t = traits(tag_);
  ForwardResult<T> result{pseudoinverse, std::nullopt};
  for (auto& block : blocks_) {
    ad::UNetOutput out = block.forward(tape, result.recon);
    Var correction = t.null_space ? null_space_project(tape, out.primary, *op_) : out.primary;
    result.recon = ad::add(tape, result.recon, correction);
    if (out.secondary) {
      result.log_scale = ad::clamp(tape, *out.secondary, static_cast<T>(-kLogScaleBound), static_cast<T>(kLogScaleBound));
    }
  }
  return result;
}

template <typename T>
UncertaintyOutput<T> ReconMethod<T>::reconstruct(std::span<const ops::Vector> measurements) {
  return reconstruct_from(pseudoinverse(measurements));
}

template <typename T>
UncertaintyOutput<T> ReconMethod<T>::reconstruct_from(const Tensor<T>& pseudoinverse) {
  Tape<T> tape(false);
  const ForwardResult<T> out = forward(tape, tape.input(pseudoinverse));
  UncertaintyOutput<T> result{tape.value(out.recon), std::nullopt, pseudoinverse};
  if (out.log_scale) result.log_scale = tape.value(*out.log_scale);
  if (traits(tag_).projected) {
    const auto start = to_vectors(result.recon);
    const auto anchors = to_vectors(pseudoinverse);
    std::vector<ops::Vector> projected;
    for (std::size_t b = 0; b < start.size(); ++b) {
      projected.push_back(ops::landweber_project(*op_, start[b], op_->apply(anchors[b]), landweber_));
    }
    result.recon = to_batch(projected);
  }
  return result;
}

template <typename T>
void ReconMethod<T>::save(const std::filesystem::path& stem) const {
  nlohmann::json arch;
  arch["method"] = to_string(weights_source(tag_));
  arch["operator"] = op_->content_hash();
  arch["blocks"] = nlohmann::json::array();
  for (const auto& block : blocks_) arch["blocks"].push_back(block.config().to_json());
  const auto params = parameters();
  ad::save_checkpoint(stem, std::span<const ad::Parameter<T>* const>(params), arch);
}

template <typename T>
void ReconMethod<T>::load(const std::filesystem::path& stem) {
  const nlohmann::json manifest = ad::read_checkpoint_manifest(stem);
  const nlohmann::json& arch = manifest.at("architecture");
  const std::string stored = arch.value("method", "");
  if (stored != to_string(weights_source(tag_))) {
    throw ValidationError("checkpoint " + stem.string() + " holds " + stored + " weights, expected " +
                          to_string(weights_source(tag_)));
  }
  const auto& stored_blocks = arch.at("blocks");
  if (stored_blocks.size() != blocks_.size()) throw ValidationError("checkpoint block count mismatch");
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (!(ad::UNetConfig::from_json(stored_blocks[k]) == blocks_[k].config())) {
      throw ValidationError("checkpoint architecture mismatch in block " + std::to_string(k));
    }
  }
  auto params = parameters();
  ad::load_checkpoint(stem, std::span<ad::Parameter<T>* const>(params));
}

template class ReconMethod<float>;
template class ReconMethod<double>;
template Var null_space_project<float>(Tape<float>&, Var, const ops::LinearMap&);
template Var null_space_project<double>(Tape<double>&, Var, const ops::LinearMap&);

double data_consistency_gap(const ops::LinearMap& op, const ops::Vector& x_rec, const ops::Vector& y) {
  const double denom = std::max(y.norm(), std::numeric_limits<double>::epsilon());
  return (op.apply(x_rec) - y).norm() / denom;
}

double retained_consistency_gap(const ops::LinearMap& op, const ops::Vector& x_rec, const ops::Vector& y) {
  const ops::Vector qy = op.project_retained_range(y);
  const double denom = std::max(qy.norm(), std::numeric_limits<double>::epsilon());
  return (op.project_retained_range(op.apply(x_rec)) - qy).norm() / denom;
}

}  // namespace nsn::recon
