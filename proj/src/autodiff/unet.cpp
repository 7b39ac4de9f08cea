#include "nsn/autodiff/unet.hpp"

#include <cmath>
#include <random>

#include "nsn/util/errors.hpp"

namespace nsn::ad {

nlohmann::json UNetConfig::to_json() const {
  return {{"in_channels", in_channels}, {"out_channels", out_channels}, {"depth", depth},
          {"base_channels", base_channels}, {"two_heads", two_heads}, {"slope", slope}};
}

UNetConfig UNetConfig::from_json(const nlohmann::json& j) {
  UNetConfig c;
  c.in_channels = j.at("in_channels").get<int>();
  c.out_channels = j.at("out_channels").get<int>();
  c.depth = j.at("depth").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.two_heads = j.at("two_heads").get<bool>();
  c.slope = j.at("slope").get<double>();
  return c;
}

template <typename T>
SmallUNet<T>::SmallUNet(UNetConfig config, std::string prefix, std::uint64_t seed)
    : config_(config), prefix_(std::move(prefix)) {
  if (config_.depth < 2 || config_.depth > 3) throw std::invalid_argument("SmallUNet: depth must be 2 or 3");
  if (config_.in_channels < 1 || config_.out_channels < 1 || config_.base_channels < 1) {
    throw std::invalid_argument("SmallUNet: channel counts must be positive");
  }
  auto width = [&](int level) { return config_.base_channels << level; };

  encoder_.resize(static_cast<std::size_t>(config_.depth));
  for (int level = 0; level < config_.depth; ++level) {
    const std::string tag = "enc" + std::to_string(level);
    auto& convs = encoder_[static_cast<std::size_t>(level)];
    if (level == 0) {
      convs.push_back(add_conv(tag + ".conv0", config_.in_channels, width(0), 1, true));
    } else {
      convs.push_back(add_conv(tag + ".down", width(level - 1), width(level), 2, true));
    }
    convs.push_back(add_conv(tag + ".conv1", width(level), width(level), 1, true));
  }
  decoder_.resize(static_cast<std::size_t>(config_.depth - 1));
  for (int level = config_.depth - 2; level >= 0; --level) {
    const std::string tag = "dec" + std::to_string(level);
    auto& convs = decoder_[static_cast<std::size_t>(level)];
    convs.push_back(add_conv(tag + ".up", width(level + 1), width(level), 1, true));
    convs.push_back(add_conv(tag + ".fuse", 2 * width(level), width(level), 1, true));
  }
  head_ = add_conv("head", width(0), config_.out_channels, 1, false);
  if (config_.two_heads) {
    secondary_block_ = add_conv("scale.conv", width(0), width(0), 1, true);
    secondary_head_ = add_conv("scale.head", width(0), config_.out_channels, 1, false);
  }
  initialize(seed);
}

template <typename T>
typename SmallUNet<T>::Conv SmallUNet<T>::add_conv(const std::string& name, int in, int out, int stride,
                                                   bool bias) {
  Conv conv{params_.size(), std::nullopt, stride};
  params_.emplace_back(prefix_ + name + ".weight", Shape{out, in, 3, 3});
  if (bias) {
    conv.bias = params_.size();
    params_.emplace_back(prefix_ + name + ".bias", Shape{1, out, 1, 1});
  }
  return conv;
}

template <typename T>
void SmallUNet<T>::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double gain = std::sqrt(2.0 / (1.0 + config_.slope * config_.slope));
  auto is_head = [&](std::size_t index) {
    return index == head_.weight || (secondary_head_ && index == secondary_head_->weight);
  };
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter<T>& p = params_[i];
    p.zero_grad();
    if (p.value.shape().h == 1 || is_head(i)) {
      p.value.fill(T(0));
      continue;
    }
    const Shape s = p.value.shape();
    const double fan_in = static_cast<double>(s.c) * s.h * s.w;
    std::uniform_real_distribution<double> uniform(-gain * std::sqrt(3.0 / fan_in), gain * std::sqrt(3.0 / fan_in));
    for (auto& v : p.value.values()) v = static_cast<T>(uniform(rng));
  }
}

template <typename T>
Var SmallUNet<T>::run(Tape<T>& tape, const Conv& conv, Var x, bool activate) {
  Var w = tape.parameter(params_[conv.weight]);
  Var b = conv.bias ? tape.parameter(params_[*conv.bias]) : Var{};
  Var y = conv2d(tape, x, w, b, conv.stride);
  return activate ? leaky_relu(tape, y, static_cast<T>(config_.slope)) : y;
}

template <typename T>
UNetOutput SmallUNet<T>::forward(Tape<T>& tape, Var x) {
  const Shape s = tape.value(x).shape();
  if (s.c != config_.in_channels) {
    throw DimensionError("SmallUNet: expected " + std::to_string(config_.in_channels) + " input channels, got " +
                         s.str());
  }
  const int factor = 1 << (config_.depth - 1);
  if (s.h % factor != 0 || s.w % factor != 0) {
    throw DimensionError("SmallUNet: spatial size " + s.str() + " not divisible by " + std::to_string(factor));
  }

  std::vector<Var> skips;
  Var h = x;
  for (const auto& level : encoder_) {
    for (const auto& conv : level) h = run(tape, conv, h, true);
    skips.push_back(h);
  }
  for (int level = config_.depth - 2; level >= 0; --level) {
    const auto& convs = decoder_[static_cast<std::size_t>(level)];
    h = upsample_nearest2x(tape, h);
    h = run(tape, convs[0], h, true);
    h = concat_channels(tape, h, skips[static_cast<std::size_t>(level)]);
    h = run(tape, convs[1], h, true);
  }
  UNetOutput out{run(tape, head_, h, false), std::nullopt};
  if (config_.two_heads) {
    Var branch = run(tape, *secondary_block_, h, true);
    out.secondary = run(tape, *secondary_head_, branch, false);
  }
  return out;
}

template <typename T>
std::vector<Parameter<T>*> SmallUNet<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> SmallUNet<T>::parameters() const {
  std::vector<const Parameter<T>*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

template <typename T>
std::vector<Parameter<T>*> SmallUNet<T>::secondary_parameters() {
  std::vector<Parameter<T>*> out;
  if (!config_.two_heads) return out;
  for (const Conv* conv : {&*secondary_block_, &*secondary_head_}) {
    out.push_back(&params_[conv->weight]);
    if (conv->bias) out.push_back(&params_[*conv->bias]);
  }
  return out;
}

template class SmallUNet<float>;
template class SmallUNet<double>;

}  // namespace nsn::ad
