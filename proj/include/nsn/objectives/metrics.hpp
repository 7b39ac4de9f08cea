#pragma once

#include <optional>

#include <Eigen/Core>

#include "nsn/autodiff/tensor.hpp"

namespace nsn::obj {

using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Sample b of a batch as a single image. One channel is taken as is; two
// channels (real, imaginary) are reduced to the magnitude image.
template <typename T>
Image to_image(const ad::Tensor<T>& batch, int b);

// Per-image peak convention: maximum of the ground truth.
double peak_of(const Image& truth);

// 10 log10(peak^2 / MSE); +infinity for identical images.
double psnr(const Image& rec, const Image& truth, double peak);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Mean local SSIM over all window positions fully inside the image, with a
// normalized Gaussian window and stabilizers C1 = (k1 peak)^2, C2 = (k2 peak)^2.
double ssim(const Image& rec, const Image& truth, double peak, const SsimOptions& options = {});

// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
Eigen::VectorXd gaussian_taps(int window, double sigma);

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double mae = 0.0;
  double peak = 0.0;
  std::optional<double> mean_uncertainty;
};

MetricReport evaluate_image(const Image& rec, const Image& truth, const std::optional<Image>& sigma = std::nullopt);

}  // namespace nsn::obj
