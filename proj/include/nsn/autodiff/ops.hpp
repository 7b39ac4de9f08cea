#pragma once

#include <functional>

#include "nsn/autodiff/tape.hpp"

namespace nsn::ad {

// Square-kernel convolution with zero "same" padding (pad = k / 2).
// weight: (out, in, k, k); bias: (1, out, 1, 1) or invalid Var.
template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, Var bias, int stride = 1);

template <typename T>
Var leaky_relu(Tape<T>& tape, Var x, T slope);

template <typename T>
Var upsample_nearest2x(Tape<T>& tape, Var x);

template <typename T>
Var concat_channels(Tape<T>& tape, Var a, Var b);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b);

// Elementwise clamp; zero gradient outside [lo, hi].
template <typename T>
Var clamp(Tape<T>& tape, Var x, T lo, T hi);

template <typename T>
Var sum(Tape<T>& tape, Var x);

// Per-sample linear map with a known adjoint. `forward` and `adjoint` act on
// whole batches (shape is preserved).
template <typename T>
using BatchMap = std::function<void(const Tensor<T>& in, Tensor<T>& out)>;

template <typename T>
Var linear(Tape<T>& tape, Var x, BatchMap<T> forward, BatchMap<T> adjoint, const char* name = "linear");

}  // namespace nsn::ad
