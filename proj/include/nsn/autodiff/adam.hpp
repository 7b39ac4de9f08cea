#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nsn/autodiff/tensor.hpp"

namespace nsn::ad {

template <typename T>
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor<T>> first;
  std::vector<Tensor<T>> second;
};

// One bias-corrected Adam update over `params` (moments are created on the
// first call), then zeroes every gradient.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state);

template <typename T>
void zero_grad(std::span<Parameter<T>* const> params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace nsn::ad
