#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>

#include "nsn/operators/linear_map.hpp"

namespace nsn::data {

// Random piecewise-constant phantoms on [-1, 1]^2: a disc of constant base
// intensity holding ellipses and rectangles, the whole picture rotated by a
// uniform angle, optionally with a striped or checkered fine-detail patch.
struct PhantomSpec {
  int grid = 64;
  // Disc radius as a fraction of the half-width of the image.
  double disc_radius = 0.9;
  double base_min = 0.2;
  double base_max = 0.4;
  int ellipses_min = 2;
  int ellipses_max = 6;
  int rectangles_min = 1;
  int rectangles_max = 4;
  double intensity_min = 0.05;
  double intensity_max = 1.0;
  double high_frequency_probability = 0.3;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static PhantomSpec from_json(const nlohmann::json& j);
};

// Row-major grid x grid image with values in [0, 1], a pure function of
// (spec, index).
ops::Vector generate_phantom(const PhantomSpec& spec, std::uint64_t index);

// Fraction of pixels with a nonzero value.
double foreground_fraction(const ops::Vector& image);

// Embeds a real image into an operator domain: one channel as is, two
// channels as (real, imaginary = 0).
ops::Vector to_domain(const ops::Vector& image, const ops::ImageShape& shape);

}  // namespace nsn::data
