#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace nsn::util {

using Plane = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// 16-bit grayscale PNG of `image`, mapping [lo, hi] linearly onto
// [0, 65535] (values outside are clipped).
void write_png_gray16(const std::filesystem::path& path, const Plane& image, double lo, double hi);

// 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triples
};

// Gray rendering of `image` over [lo, hi].
RgbImage gray_tile(const Plane& image, double lo, double hi);
// Heatmap rendering (black, red, yellow, white) of `image` over [lo, hi].
RgbImage heat_tile(const Plane& image, double lo, double hi);
// Side-by-side concatenation with `gap` white pixels between tiles.
RgbImage hconcat(const std::vector<RgbImage>& tiles, int gap = 2);

void write_png_rgb8(const std::filesystem::path& path, const RgbImage& image);

}  // namespace nsn::util
