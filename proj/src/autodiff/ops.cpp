#include "nsn/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>

#include "nsn/util/errors.hpp"

namespace nsn::ad {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRow = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMapRow = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
  int cin, hin, win, k, pad, stride, hout, wout;
  int rows() const { return cin * k * k; }
  int cols() const { return hout * wout; }
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  for (int c = 0; c < g.cin; ++c) {
    const T* plane = x + static_cast<std::size_t>(c) * g.hin * g.win;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        T* row = col + (static_cast<std::size_t>(c * g.k + ky) * g.k + kx) * g.cols();
        for (int oy = 0; oy < g.hout; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          T* out = row + static_cast<std::size_t>(oy) * g.wout;
          if (iy < 0 || iy >= g.hin) {
            std::fill_n(out, g.wout, T(0));
            continue;
          }
          const T* in = plane + static_cast<std::size_t>(iy) * g.win;
          for (int ox = 0; ox < g.wout; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            out[ox] = (ix >= 0 && ix < g.win) ? in[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* dx) {
  for (int c = 0; c < g.cin; ++c) {
    T* plane = dx + static_cast<std::size_t>(c) * g.hin * g.win;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const T* row = col + (static_cast<std::size_t>(c * g.k + ky) * g.k + kx) * g.cols();
        for (int oy = 0; oy < g.hout; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.hin) continue;
          const T* in = row + static_cast<std::size_t>(oy) * g.wout;
          T* out = plane + static_cast<std::size_t>(iy) * g.win;
          for (int ox = 0; ox < g.wout; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix >= 0 && ix < g.win) out[ix] += in[ox];
          }
        }
      }
    }
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, Var bias, int stride) {
  const Shape xs = tape.value(x).shape();
  const Shape ws = tape.value(weight).shape();
  require(ws.h == ws.w && ws.h % 2 == 1, "conv2d: kernel must be square with odd size");
  require(ws.c == xs.c, "conv2d: weight expects " + std::to_string(ws.c) + " input channels, got " + xs.str());
  require(stride >= 1, "conv2d: stride must be positive");
  if (bias.valid()) require(tape.value(bias).size() == static_cast<std::size_t>(ws.n), "conv2d: bias size mismatch");

  const int pad = ws.h / 2;
  ConvGeometry g{xs.c, xs.h, xs.w, ws.h, pad, stride, (xs.h + 2 * pad - ws.h) / stride + 1,
                 (xs.w + 2 * pad - ws.w) / stride + 1};
  const int cout = ws.n;
  Tensor<T> out(Shape{xs.n, cout, g.hout, g.wout});
  RowMatrix<T> col(g.rows(), g.cols());
  {
    const Tensor<T>& xv = tape.value(x);
    ConstMapRow<T> w(tape.value(weight).data(), cout, g.rows());
    for (int b = 0; b < xs.n; ++b) {
      im2col(xv.sample(b).data(), g, col.data());
      MapRow<T> o(out.sample(b).data(), cout, g.cols());
      o.noalias() = w * col;
      if (bias.valid()) {
        const Tensor<T>& bv = tape.value(bias);
        for (int c = 0; c < cout; ++c) o.row(c).array() += bv[c];
      }
    }
  }
  const bool needs = tape.requires_grad(x) || tape.requires_grad(weight) || (bias.valid() && tape.requires_grad(bias));
  const Var result{tape.size()};
  auto backward = [x, weight, bias, result, g, cout](Tape<T>& t) {
    const Tensor<T>& gout = t.grad(result);
    const Tensor<T>& xv = t.value(x);
    const int batch = xv.shape().n;
    ConstMapRow<T> w(t.value(weight).data(), cout, g.rows());
    RowMatrix<T> col(g.rows(), g.cols());
    RowMatrix<T> dcol;
    const bool want_x = t.requires_grad(x);
    const bool want_w = t.requires_grad(weight);
    const bool want_b = bias.valid() && t.requires_grad(bias);
    for (int b = 0; b < batch; ++b) {
      ConstMapRow<T> go(gout.sample(b).data(), cout, g.cols());
      if (want_w) {
        im2col(xv.sample(b).data(), g, col.data());
        MapRow<T> gw(t.grad_buffer(weight).data(), cout, g.rows());
        gw.noalias() += go * col.transpose();
      }
      if (want_x) {
        dcol.noalias() = w.transpose() * go;
        col2im(dcol.data(), g, t.grad_buffer(x).sample(b).data());
      }
      if (want_b) {
        Tensor<T>& gb = t.grad_buffer(bias);
        for (int c = 0; c < cout; ++c) gb[c] += go.row(c).sum();
      }
    }
  };
  return tape.push("conv2d", std::move(out), needs, backward);
}

template <typename T>
Var leaky_relu(Tape<T>& tape, Var x, T slope) {
  const Tensor<T>& xv = tape.value(x);
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : slope * xv[i];
  const Var result{tape.size()};
  return tape.push("leaky_relu", std::move(out), tape.requires_grad(x), [x, result, slope](Tape<T>& t) {
    const Tensor<T>& xv = t.value(x);
    const Tensor<T>& go = t.grad(result);
    Tensor<T>& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += xv[i] > T(0) ? go[i] : slope * go[i];
  });
}

template <typename T>
Var upsample_nearest2x(Tape<T>& tape, Var x) {
  const Tensor<T>& xv = tape.value(x);
  const Shape s = xv.shape();
  Tensor<T> out(Shape{s.n, s.c, 2 * s.h, 2 * s.w});
  for (int b = 0; b < s.n; ++b)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < 2 * s.h; ++y)
        for (int xx = 0; xx < 2 * s.w; ++xx) out.at(b, c, y, xx) = xv.at(b, c, y / 2, xx / 2);
  const Var result{tape.size()};
  return tape.push("upsample_nearest2x", std::move(out), tape.requires_grad(x), [x, result](Tape<T>& t) {
    const Tensor<T>& go = t.grad(result);
    Tensor<T>& gx = t.grad_buffer(x);
    const Shape s = gx.shape();
    for (int b = 0; b < s.n; ++b)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < 2 * s.h; ++y)
          for (int xx = 0; xx < 2 * s.w; ++xx) gx.at(b, c, y / 2, xx / 2) += go.at(b, c, y, xx);
  });
}

template <typename T>
Var concat_channels(Tape<T>& tape, Var a, Var b) {
  const Shape sa = tape.value(a).shape();
  const Shape sb = tape.value(b).shape();
  require(sa.n == sb.n && sa.h == sb.h && sa.w == sb.w, "concat_channels: " + sa.str() + " vs " + sb.str());
  Tensor<T> out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  for (int n = 0; n < sa.n; ++n) {
    auto dst = out.sample(n);
    auto xa = tape.value(a).sample(n);
    auto xb = tape.value(b).sample(n);
    std::copy(xa.begin(), xa.end(), dst.begin());
    std::copy(xb.begin(), xb.end(), dst.begin() + static_cast<std::ptrdiff_t>(xa.size()));
  }
  const Var result{tape.size()};
  const bool needs = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.push("concat_channels", std::move(out), needs, [a, b, result](Tape<T>& t) {
    const Tensor<T>& go = t.grad(result);
    const std::size_t na = t.value(a).shape().sample();
    const std::size_t nb = t.value(b).shape().sample();
    for (int n = 0; n < go.shape().n; ++n) {
      auto g = go.sample(n);
      if (t.requires_grad(a)) {
        auto ga = t.grad_buffer(a).sample(n);
        for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
      }
      if (t.requires_grad(b)) {
        auto gb = t.grad_buffer(b).sample(n);
        for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
      }
    }
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& va = tape.value(a);
  const Tensor<T>& vb = tape.value(b);
  require(va.shape() == vb.shape(), "add: " + va.shape().str() + " vs " + vb.shape().str());
  Tensor<T> out(va.shape());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] + vb[i];
  const Var result{tape.size()};
  const bool needs = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.push("add", std::move(out), needs, [a, b, result](Tape<T>& t) {
    const Tensor<T>& go = t.grad(result);
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      Tensor<T>& g = t.grad_buffer(v);
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i];
    }
  });
}

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& va = tape.value(a);
  const Tensor<T>& vb = tape.value(b);
  require(va.shape() == vb.shape(), "mul: " + va.shape().str() + " vs " + vb.shape().str());
  Tensor<T> out(va.shape());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] * vb[i];
  const Var result{tape.size()};
  const bool needs = tape.requires_grad(a) || tape.requires_grad(b);
  return tape.push("mul", std::move(out), needs, [a, b, result](Tape<T>& t) {
    const Tensor<T>& go = t.grad(result);
    const Tensor<T>& va = t.value(a);
    const Tensor<T>& vb = t.value(b);
    if (t.requires_grad(a)) {
      Tensor<T>& g = t.grad_buffer(a);
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * vb[i];
    }
    if (t.requires_grad(b)) {
      Tensor<T>& g = t.grad_buffer(b);
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * va[i];
    }
  });
}

template <typename T>
Var clamp(Tape<T>& tape, Var x, T lo, T hi) {
  const Tensor<T>& xv = tape.value(x);
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::clamp(xv[i], lo, hi);
  const Var result{tape.size()};
  return tape.push("clamp", std::move(out), tape.requires_grad(x), [x, result, lo, hi](Tape<T>& t) {
    const Tensor<T>& xv = t.value(x);
    const Tensor<T>& go = t.grad(result);
    Tensor<T>& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] >= lo && xv[i] <= hi) gx[i] += go[i];
    }
  });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  const Tensor<T>& xv = tape.value(x);
  T total = T(0);
  for (T v : xv.values()) total += v;
  Tensor<T> out(Shape{1, 1, 1, 1}, total);
  const Var result{tape.size()};
  return tape.push("sum", std::move(out), tape.requires_grad(x), [x, result](Tape<T>& t) {
    const T go = t.grad(result)[0];
    Tensor<T>& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go;
  });
}

template <typename T>
Var linear(Tape<T>& tape, Var x, BatchMap<T> forward, BatchMap<T> adjoint, const char* name) {
  const Tensor<T>& xv = tape.value(x);
  Tensor<T> out(xv.shape());
  forward(xv, out);
  require(out.shape() == xv.shape(), std::string(name) + ": map changed the tensor shape");
  const Var result{tape.size()};
  return tape.push(name, std::move(out), tape.requires_grad(x), [x, result, adjoint](Tape<T>& t) {
    const Tensor<T>& go = t.grad(result);
    Tensor<T> back(go.shape());
    adjoint(go, back);
    Tensor<T>& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += back[i];
  });
}

#define NSN_INSTANTIATE_OPS(T)                                                         \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var, int);                                \
  template Var leaky_relu<T>(Tape<T>&, Var, T);                                        \
  template Var upsample_nearest2x<T>(Tape<T>&, Var);                                   \
  template Var concat_channels<T>(Tape<T>&, Var, Var);                                 \
  template Var add<T>(Tape<T>&, Var, Var);                                             \
  template Var mul<T>(Tape<T>&, Var, Var);                                             \
  template Var clamp<T>(Tape<T>&, Var, T, T);                                          \
  template Var sum<T>(Tape<T>&, Var);                                                  \
  template Var linear<T>(Tape<T>&, Var, BatchMap<T>, BatchMap<T>, const char*);

NSN_INSTANTIATE_OPS(float)
NSN_INSTANTIATE_OPS(double)

}  // namespace nsn::ad
