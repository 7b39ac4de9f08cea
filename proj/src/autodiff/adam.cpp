#include "nsn/autodiff/adam.hpp"

#include <cmath>

#include "nsn/util/errors.hpp"

namespace nsn::ad {

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state) {
  if (state.first.empty()) {
    for (const auto* p : params) {
      state.first.emplace_back(p->value.shape());
      state.second.emplace_back(p->value.shape());
    }
  }
  if (state.first.size() != params.size()) throw DimensionError("adam_step: parameter count changed between steps");

  ++state.step;
  const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const double step_size = state.learning_rate / correction1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    Tensor<T>& m = state.first[i];
    Tensor<T>& v = state.second[i];
    if (m.shape() != p.value.shape() || p.grad.shape() != p.value.shape()) {
      throw DimensionError("adam_step: moment shape mismatch for " + p.name);
    }
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      const double mk = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      const double vk = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      p.value[k] -= static_cast<T>(step_size * mk / (std::sqrt(vk / correction2) + state.epsilon));
    }
    p.zero_grad();
  }
}

template void adam_step<float>(std::span<Parameter<float>* const>, AdamState<float>&);
template void adam_step<double>(std::span<Parameter<double>* const>, AdamState<double>&);

}  // namespace nsn::ad
