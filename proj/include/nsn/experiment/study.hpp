#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "nsn/data/dataset.hpp"
#include "nsn/experiment/config.hpp"
#include "nsn/operators/linear_map.hpp"
#include "nsn/recon/method.hpp"

namespace nsn::exp {

// Directory layout below the output root.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path logs() const { return root / "logs"; }
  std::filesystem::path eval() const { return root / "eval"; }
  std::filesystem::path uq() const { return root / "uq"; }
  std::filesystem::path cache() const { return root / "cache"; }
  std::filesystem::path checkpoint(recon::MethodTag tag, const char* which) const;
};

// Radon factorizations are cached under NSN_CACHE_DIR when set, otherwise
// under <out>/cache.
std::shared_ptr<ops::LinearMap> build_operator(const ExperimentConfig& config);

ops::LandweberConfig landweber_for(const ExperimentConfig& config, ops::OperatorKind kind);

template <typename T>
recon::ReconMethod<T> make_method(const ExperimentConfig& config, recon::MethodTag tag,
                                  std::shared_ptr<const ops::LinearMap> op);

}  // namespace nsn::exp
