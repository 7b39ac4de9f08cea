#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>

#include "nsn/operators/linear_map.hpp"

namespace nsn::data {

enum class PerturbationKind { None, AdditiveMeasurementNoise, SaltPepperRegion, SquareInsert };

std::string to_string(PerturbationKind kind);
PerturbationKind parse_perturbation(const std::string& name);

// Axis-aligned square of `size` pixels with top-left pixel (row, col).
struct Region {
  int row = 0;
  int col = 0;
  int size = 0;
};

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::None;
  // Exact noise norm |eps|_2 for additive measurement noise.
  double delta = 0.0;
  Region region;
  // Per-pixel replacement probability for salt-and-pepper regions.
  double probability = 0.0;
  // Value written by square inserts.
  double intensity = 1.0;
  std::uint64_t seed = 0;

  static PerturbationSpec noise(double delta, std::uint64_t seed);
  static PerturbationSpec salt_pepper(Region region, double probability, std::uint64_t seed);
  static PerturbationSpec square(Region region, double intensity);

  nlohmann::json to_json() const;
};

// y = A x + eps. For additive noise eps is a Gaussian draw rescaled to
// |eps|_2 = delta exactly; other kinds leave the measurement clean.
ops::Vector simulate_measurement(const ops::LinearMap& op, const ops::Vector& x, const PerturbationSpec& perturbation);

// Applies a salt-and-pepper region or square insert to a single-channel
// height x width image. Pixels outside the region are never touched. Throws
// std::invalid_argument when the region leaves the grid.
ops::Vector inject_ood(const ops::Vector& x, int height, int width, const PerturbationSpec& perturbation);

}  // namespace nsn::data
