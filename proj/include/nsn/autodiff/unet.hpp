#pragma once

#include <cstdint>
#include <deque>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "nsn/autodiff/ops.hpp"

namespace nsn::ad {

struct UNetConfig {
  int in_channels = 1;
  int out_channels = 1;
  // Number of resolution levels (2 or 3).
  int depth = 2;
  int base_channels = 16;
  // Adds a second output branch (log-scale map) after the last decoder block.
  bool two_heads = false;
  double slope = 0.1;

  nlohmann::json to_json() const;
  static UNetConfig from_json(const nlohmann::json& j);
  bool operator==(const UNetConfig&) const = default;
};

struct UNetOutput {
  Var primary;
  // Second branch, present iff two_heads.
  std::optional<Var> secondary;
};

// Small U-net corrector: 3x3 same-padding convs with leaky ReLU, stride-2
// conv downsampling, nearest upsampling followed by a conv, and skip
// concatenation at every level. Output heads have no bias and start at zero,
// so a freshly initialized net returns exactly zero.
template <typename T>
class SmallUNet {
 public:
  SmallUNet(UNetConfig config, std::string prefix, std::uint64_t seed = 0);

  // Kaiming-uniform hidden weights, zero biases, zero heads.
  void initialize(std::uint64_t seed);

  UNetOutput forward(Tape<T>& tape, Var x);

  const UNetConfig& config() const noexcept { return config_; }
  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;
  // Parameters that only feed the second branch.
  std::vector<Parameter<T>*> secondary_parameters();

 private:
  struct Conv {
    std::size_t weight;
    std::optional<std::size_t> bias;
    int stride;
  };

  Conv add_conv(const std::string& name, int in, int out, int stride, bool bias);
  Var run(Tape<T>& tape, const Conv& conv, Var x, bool activate);

  UNetConfig config_;
  std::string prefix_;
  std::deque<Parameter<T>> params_;
  std::vector<std::vector<Conv>> encoder_;  // per level
  std::vector<std::vector<Conv>> decoder_;  // per level below the bottom
  Conv head_;
  std::optional<Conv> secondary_block_;
  std::optional<Conv> secondary_head_;
};

extern template class SmallUNet<float>;
extern template class SmallUNet<double>;

}  // namespace nsn::ad
