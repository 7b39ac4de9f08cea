#include "nsn/util/png.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace nsn::util {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

void write_rows(const std::filesystem::path& path, int width, int height, int bit_depth, int color_type,
                const std::vector<png_byte>& pixels, std::size_t row_bytes) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed while writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

double normalized(double v, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

}  // namespace

void write_png_gray16(const std::filesystem::path& path, const Plane& image, double lo, double hi) {
  const int h = static_cast<int>(image.rows());
  const int w = static_cast<int>(image.cols());
  std::vector<png_byte> pixels(static_cast<std::size_t>(h) * w * 2);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto v = static_cast<std::uint16_t>(std::lround(normalized(image(r, c), lo, hi) * 65535.0));
      const std::size_t at = (static_cast<std::size_t>(r) * w + c) * 2;
      pixels[at] = static_cast<png_byte>(v >> 8);  // PNG stores big-endian samples
      pixels[at + 1] = static_cast<png_byte>(v & 0xff);
    }
  }
  write_rows(path, w, h, 16, PNG_COLOR_TYPE_GRAY, pixels, static_cast<std::size_t>(w) * 2);
}

RgbImage gray_tile(const Plane& image, double lo, double hi) {
  RgbImage out{static_cast<int>(image.cols()), static_cast<int>(image.rows()), {}};
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const auto v = static_cast<std::uint8_t>(std::lround(normalized(image(r, c), lo, hi) * 255.0));
      const std::size_t at = (static_cast<std::size_t>(r) * out.width + c) * 3;
      out.pixels[at] = out.pixels[at + 1] = out.pixels[at + 2] = v;
    }
  }
  return out;
}

RgbImage heat_tile(const Plane& image, double lo, double hi) {
  RgbImage out{static_cast<int>(image.cols()), static_cast<int>(image.rows()), {}};
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const double t = normalized(image(r, c), lo, hi);
      const double rgb[3] = {std::clamp(3.0 * t, 0.0, 1.0), std::clamp(3.0 * t - 1.0, 0.0, 1.0),
                             std::clamp(3.0 * t - 2.0, 0.0, 1.0)};
      const std::size_t at = (static_cast<std::size_t>(r) * out.width + c) * 3;
      for (int k = 0; k < 3; ++k) out.pixels[at + k] = static_cast<std::uint8_t>(std::lround(rgb[k] * 255.0));
    }
  }
  return out;
}

RgbImage hconcat(const std::vector<RgbImage>& tiles, int gap) {
  RgbImage out;
  for (const auto& t : tiles) out.height = std::max(out.height, t.height);
  for (std::size_t i = 0; i < tiles.size(); ++i) out.width += tiles[i].width + (i ? gap : 0);
  out.pixels.assign(static_cast<std::size_t>(out.width) * out.height * 3, 255);
  int x0 = 0;
  for (const auto& t : tiles) {
    for (int r = 0; r < t.height; ++r) {
      std::copy_n(t.pixels.begin() + static_cast<std::ptrdiff_t>(r) * t.width * 3, t.width * 3,
                  out.pixels.begin() + (static_cast<std::ptrdiff_t>(r) * out.width + x0) * 3);
    }
    x0 += t.width + gap;
  }
  return out;
}

void write_png_rgb8(const std::filesystem::path& path, const RgbImage& image) {
  std::vector<png_byte> pixels(image.pixels.begin(), image.pixels.end());
  write_rows(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, pixels, static_cast<std::size_t>(image.width) * 3);
}

}  // namespace nsn::util
