#include "nsn/operators/masked_fourier.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>

#include "nsn/util/errors.hpp"

namespace nsn::ops {

namespace {

using Complex = std::complex<double>;

// Unitary 2-D DFT of an n x n row-major array, in place.
void fft2(std::vector<Complex>& data, int n, bool inverse) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<Complex> in(n);
  std::vector<Complex> out(n);
  for (int r = 0; r < n; ++r) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(r) * n, n, in.begin());
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    std::copy(out.begin(), out.end(), data.begin() + static_cast<std::ptrdiff_t>(r) * n);
  }
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) in[r] = data[static_cast<std::size_t>(r) * n + c];
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (int r = 0; r < n; ++r) data[static_cast<std::size_t>(r) * n + c] = out[r];
  }
  const double scale = 1.0 / n;
  for (auto& value : data) value *= scale;
}

std::vector<Complex> to_complex(const Vector& x, int n) {
  const std::size_t pixels = static_cast<std::size_t>(n) * n;
  std::vector<Complex> z(pixels);
  for (std::size_t p = 0; p < pixels; ++p) z[p] = Complex(x(p), x(pixels + p));
  return z;
}

void from_complex(const std::vector<Complex>& z, Vector& x) {
  const std::size_t pixels = z.size();
  for (std::size_t p = 0; p < pixels; ++p) {
    x(p) = z[p].real();
    x(pixels + p) = z[p].imag();
  }
}

}  // namespace

MaskedFourierOp::MaskedFourierOp(int grid, std::vector<int> lines)
    : LinearMap(ImageShape{grid, grid, 2}, 2 * static_cast<std::size_t>(grid) * lines.size()),
      grid_(grid),
      lines_(std::move(lines)),
      keep_(static_cast<std::size_t>(grid), false) {
  if (grid < 1) throw std::invalid_argument("MaskedFourierOp: grid must be positive");
  if (lines_.empty()) throw std::invalid_argument("MaskedFourierOp: mask keeps no lines");
  std::sort(lines_.begin(), lines_.end());
  if (std::adjacent_find(lines_.begin(), lines_.end()) != lines_.end()) {
    throw std::invalid_argument("MaskedFourierOp: duplicate mask line");
  }
  for (int line : lines_) {
    if (line < 0 || line >= grid) throw std::invalid_argument("MaskedFourierOp: mask line out of range");
    keep_[static_cast<std::size_t>(line)] = true;
  }
}

std::vector<int> MaskedFourierOp::make_mask(int grid, double kept_fraction, double center_fraction,
                                            std::uint64_t seed) {
  if (grid < 1) throw std::invalid_argument("make_mask: grid must be positive");
  if (!(kept_fraction > 0.0 && kept_fraction <= 1.0)) {
    throw std::invalid_argument("make_mask: kept_fraction must lie in (0, 1]");
  }
  if (center_fraction < 0.0 || center_fraction > kept_fraction) {
    throw std::invalid_argument("make_mask: center_fraction must lie in [0, kept_fraction]");
  }
  const int total = std::clamp(static_cast<int>(std::lround(kept_fraction * grid)), 1, grid);
  const int center = std::clamp(static_cast<int>(std::lround(center_fraction * grid)), 1, total);

  auto signed_freq = [grid](int k) { return k <= (grid - 1) / 2 ? k : k - grid; };
  std::vector<int> order(static_cast<std::size_t>(grid));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const int fa = signed_freq(a);
    const int fb = signed_freq(b);
    return std::abs(fa) != std::abs(fb) ? std::abs(fa) < std::abs(fb) : fa > fb;
  });

  std::vector<int> lines(order.begin(), order.begin() + center);
  std::vector<int> rest(order.begin() + center, order.end());
  std::sort(rest.begin(), rest.end());
  std::mt19937_64 rng(seed);
  std::shuffle(rest.begin(), rest.end(), rng);
  lines.insert(lines.end(), rest.begin(), rest.begin() + (total - center));
  std::sort(lines.begin(), lines.end());
  return lines;
}

std::vector<int> MaskedFourierOp::full_mask(int grid) {
  std::vector<int> lines(static_cast<std::size_t>(grid));
  std::iota(lines.begin(), lines.end(), 0);
  return lines;
}

nlohmann::json MaskedFourierOp::descriptor() const {
  nlohmann::json j;
  j["kind"] = to_string(kind());
  j["grid"] = grid_;
  j["lines"] = lines_;
  j["kept_fraction"] = kept_fraction();
  return j;
}

void MaskedFourierOp::apply_impl(const Vector& x, Vector& y) const {
  auto z = to_complex(x, grid_);
  fft2(z, grid_, false);
  std::size_t out = 0;
  for (int line : lines_) {
    for (int c = 0; c < grid_; ++c) {
      const Complex value = z[static_cast<std::size_t>(line) * grid_ + c];
      y(out++) = value.real();
      y(out++) = value.imag();
    }
  }
}

void MaskedFourierOp::adjoint_impl(const Vector& y, Vector& x) const {
  std::vector<Complex> z(static_cast<std::size_t>(grid_) * grid_, Complex(0.0, 0.0));
  std::size_t in = 0;
  for (int line : lines_) {
    for (int c = 0; c < grid_; ++c) {
      z[static_cast<std::size_t>(line) * grid_ + c] = Complex(y(in), y(in + 1));
      in += 2;
    }
  }
  fft2(z, grid_, true);
  from_complex(z, x);
}

void MaskedFourierOp::pseudoinverse_impl(const Vector& y, Vector& x) const { adjoint_impl(y, x); }

void MaskedFourierOp::null_space_impl(const Vector& x, Vector& out) const {
  auto z = to_complex(x, grid_);
  fft2(z, grid_, false);
  for (int r = 0; r < grid_; ++r) {
    if (!keep_[static_cast<std::size_t>(r)]) continue;
    std::fill_n(z.begin() + static_cast<std::ptrdiff_t>(r) * grid_, grid_, Complex(0.0, 0.0));
  }
  fft2(z, grid_, true);
  from_complex(z, out);
}

}  // namespace nsn::ops
