#include "nsn/objectives/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "nsn/util/errors.hpp"

namespace nsn::obj {

namespace {

void check_same(const Image& a, const Image& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(who) + ": image sizes differ");
  }
  if (a.size() == 0) throw std::invalid_argument(std::string(who) + ": empty image");
}

// Separable weighted sums over every fully contained window.
Image filter_valid(const Image& img, const Eigen::VectorXd& taps) {
  const Eigen::Index k = taps.size();
  const Eigen::Index rows = img.rows() - k + 1;
  const Eigen::Index cols = img.cols() - k + 1;
  Image horizontal = Image::Zero(img.rows(), cols);
  for (Eigen::Index j = 0; j < k; ++j) horizontal += taps[j] * img.middleCols(j, cols);
  Image out = Image::Zero(rows, cols);
  for (Eigen::Index i = 0; i < k; ++i) out += taps[i] * horizontal.middleRows(i, rows);
  return out;
}

}  // namespace

template <typename T>
Image to_image(const ad::Tensor<T>& batch, int b) {
  const ad::Shape& s = batch.shape();
  if (b < 0 || b >= s.n) throw std::out_of_range("to_image: sample index " + std::to_string(b));
  Image out(s.h, s.w);
  if (s.c == 1) {
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) out(y, x) = batch.at(b, 0, y, x);
  } else if (s.c == 2) {
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) out(y, x) = std::hypot<double>(batch.at(b, 0, y, x), batch.at(b, 1, y, x));
  } else {
    throw DimensionError("to_image: expected 1 or 2 channels, got " + s.str());
  }
  return out;
}

template Image to_image<float>(const ad::Tensor<float>&, int);
template Image to_image<double>(const ad::Tensor<double>&, int);

double peak_of(const Image& truth) {
  if (truth.size() == 0) throw std::invalid_argument("peak_of: empty image");
  return truth.maxCoeff();
}

double psnr(const Image& rec, const Image& truth, double peak) {
  check_same(rec, truth, "psnr");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  const double mse = (rec - truth).square().mean();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

Eigen::VectorXd gaussian_taps(int window, double sigma) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("gaussian_taps: window must be odd and positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_taps: sigma must be positive");
  Eigen::VectorXd taps(window);
  const int half = window / 2;
  for (int i = 0; i < window; ++i) taps[i] = std::exp(-0.5 * (i - half) * (i - half) / (sigma * sigma));
  return taps / taps.sum();
}

double ssim(const Image& rec, const Image& truth, double peak, const SsimOptions& options) {
  check_same(rec, truth, "ssim");
  if (!(peak > 0.0)) throw std::invalid_argument("ssim: peak must be positive");
  if (options.window > rec.rows() || options.window > rec.cols()) {
    throw std::invalid_argument("ssim: window " + std::to_string(options.window) + " larger than image");
  }
  const Eigen::VectorXd taps = gaussian_taps(options.window, options.sigma);
  const double c1 = (options.k1 * peak) * (options.k1 * peak);
  const double c2 = (options.k2 * peak) * (options.k2 * peak);

  const Image mu_x = filter_valid(rec, taps);
  const Image mu_y = filter_valid(truth, taps);
  const Image var_x = filter_valid(rec * rec, taps) - mu_x * mu_x;
  const Image var_y = filter_valid(truth * truth, taps) - mu_y * mu_y;
  const Image cov = filter_valid(rec * truth, taps) - mu_x * mu_y;
  const Image num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
  const Image den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
  return (num / den).mean();
}

MetricReport evaluate_image(const Image& rec, const Image& truth, const std::optional<Image>& sigma) {
  MetricReport report;
  report.peak = peak_of(truth);
  report.psnr = psnr(rec, truth, report.peak);
  report.ssim = ssim(rec, truth, report.peak);
  report.mae = (rec - truth).abs().mean();
  if (sigma) {
    check_same(*sigma, truth, "evaluate_image");
    report.mean_uncertainty = sigma->mean();
  }
  return report;
}

}  // namespace nsn::obj
