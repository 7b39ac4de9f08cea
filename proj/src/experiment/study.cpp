#include "nsn/experiment/study.hpp"

#include "nsn/operators/masked_fourier.hpp"
#include "nsn/operators/radon.hpp"

namespace nsn::exp {

std::filesystem::path Layout::checkpoint(recon::MethodTag tag, const char* which) const {
  return checkpoints() / (recon::to_string(recon::weights_source(tag)) + "." + which);
}

std::shared_ptr<ops::LinearMap> build_operator(const ExperimentConfig& config) {
  if (config.study == Study::MaskedFourier) {
    return std::make_shared<ops::MaskedFourierOp>(
        config.grid,
        ops::MaskedFourierOp::make_mask(config.grid, config.kept_fraction, config.center_fraction, config.mask_seed));
  }
  auto cache = ops::cache_dir_from_env();
  if (!cache) cache = Layout{config.out}.cache();
  auto op = std::make_shared<ops::LimitedAngleRadonOp>(
      ops::RadonGeometry::limited_angle(config.grid, config.angles, config.angle_range_deg), cache);
  op->factorize(config.tau);
  return op;
}

ops::LandweberConfig landweber_for(const ExperimentConfig& config, ops::OperatorKind kind) {
  ops::LandweberConfig cfg = recon::default_landweber(kind);
  cfg.steps = config.landweber_steps;
  if (config.landweber_stepsize > 0.0) cfg.stepsize = config.landweber_stepsize;
  return cfg;
}

template <typename T>
recon::ReconMethod<T> make_method(const ExperimentConfig& config, recon::MethodTag tag,
                                  std::shared_ptr<const ops::LinearMap> op) {
  const auto kind = op->kind();
  return recon::ReconMethod<T>(tag, std::move(op), config.network, config.seed, landweber_for(config, kind));
}

template recon::ReconMethod<float> make_method<float>(const ExperimentConfig&, recon::MethodTag,
                                                      std::shared_ptr<const ops::LinearMap>);
template recon::ReconMethod<double> make_method<double>(const ExperimentConfig&, recon::MethodTag,
                                                        std::shared_ptr<const ops::LinearMap>);

}  // namespace nsn::exp
