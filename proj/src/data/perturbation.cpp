#include "nsn/data/perturbation.hpp"

#include <stdexcept>

#include "nsn/data/random.hpp"
#include "nsn/util/errors.hpp"

namespace nsn::data {

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::None: return "None";
    case PerturbationKind::AdditiveMeasurementNoise: return "AdditiveMeasurementNoise";
    case PerturbationKind::SaltPepperRegion: return "SaltPepperRegion";
    case PerturbationKind::SquareInsert: return "SquareInsert";
  }
  return "unknown";
}

PerturbationKind parse_perturbation(const std::string& name) {
  for (auto kind : {PerturbationKind::None, PerturbationKind::AdditiveMeasurementNoise,
                    PerturbationKind::SaltPepperRegion, PerturbationKind::SquareInsert}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown perturbation kind '" + name + "'");
}

PerturbationSpec PerturbationSpec::noise(double delta, std::uint64_t seed) {
  PerturbationSpec p;
  p.kind = PerturbationKind::AdditiveMeasurementNoise;
  p.delta = delta;
  p.seed = seed;
  return p;
}

PerturbationSpec PerturbationSpec::salt_pepper(Region region, double probability, std::uint64_t seed) {
  PerturbationSpec p;
  p.kind = PerturbationKind::SaltPepperRegion;
  p.region = region;
  p.probability = probability;
  p.seed = seed;
  return p;
}

PerturbationSpec PerturbationSpec::square(Region region, double intensity) {
  PerturbationSpec p;
  p.kind = PerturbationKind::SquareInsert;
  p.region = region;
  p.intensity = intensity;
  return p;
}

nlohmann::json PerturbationSpec::to_json() const {
  return {{"kind", to_string(kind)},
          {"delta", delta},
          {"region", {{"row", region.row}, {"col", region.col}, {"size", region.size}}},
          {"probability", probability},
          {"intensity", intensity},
          {"seed", seed}};
}

ops::Vector simulate_measurement(const ops::LinearMap& op, const ops::Vector& x, const PerturbationSpec& perturbation) {
  ops::Vector y = op.apply(x);
  if (perturbation.kind != PerturbationKind::AdditiveMeasurementNoise || perturbation.delta == 0.0) return y;
  if (perturbation.delta < 0.0) throw std::invalid_argument("simulate_measurement: delta must be non-negative");
  Stream rng(perturbation.seed, 0);
  ops::Vector noise(y.size());
  for (auto& v : noise) v = rng.normal();
  return y + noise * (perturbation.delta / noise.norm());
}

ops::Vector inject_ood(const ops::Vector& x, int height, int width, const PerturbationSpec& perturbation) {
  if (x.size() != static_cast<Eigen::Index>(height) * width) {
    throw DimensionError("inject_ood: image does not match a " + std::to_string(height) + "x" +
                         std::to_string(width) + " grid");
  }
  const Region& r = perturbation.region;
  const bool regional = perturbation.kind == PerturbationKind::SaltPepperRegion ||
                        perturbation.kind == PerturbationKind::SquareInsert;
  if (!regional) throw std::invalid_argument("inject_ood: perturbation is not an image-domain kind");
  if (r.size <= 0 || r.row < 0 || r.col < 0 || r.row + r.size > height || r.col + r.size > width) {
    throw std::invalid_argument("inject_ood: region out of bounds");
  }
  ops::Vector out = x;
  Stream rng(perturbation.seed, 1);
  for (int i = r.row; i < r.row + r.size; ++i) {
    for (int j = r.col; j < r.col + r.size; ++j) {
      double& px = out[static_cast<Eigen::Index>(i) * width + j];
      if (perturbation.kind == PerturbationKind::SquareInsert) {
        px = perturbation.intensity;
      } else if (rng.bernoulli(perturbation.probability)) {
        px = rng.bernoulli(0.5) ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

}  // namespace nsn::data
