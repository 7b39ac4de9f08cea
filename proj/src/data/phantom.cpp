#include "nsn/data/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nsn/data/random.hpp"
#include "nsn/util/errors.hpp"

namespace nsn::data {

namespace {

struct Frame {
  double cos_a;
  double sin_a;
  // Coordinates of p in a frame rotated by angle a about the centre (cx, cy).
  std::pair<double, double> local(double x, double y, double cx, double cy) const {
    const double dx = x - cx;
    const double dy = y - cy;
    return {cos_a * dx + sin_a * dy, -sin_a * dx + cos_a * dy};
  }
};

Frame frame(double angle) { return {std::cos(angle), std::sin(angle)}; }

struct Feature {
  enum Kind { Ellipse, Rectangle, Stripes, Checker } kind;
  double cx, cy, a, b;
  Frame orientation;
  double intensity;
  double low = 0.0;
  double period = 0.0;
};

bool inside(const Feature& s, double u, double v) {
  switch (s.kind) {
    case Feature::Ellipse: return (u * u) / (s.a * s.a) + (v * v) / (s.b * s.b) <= 1.0;
    default: return std::abs(u) <= s.a && std::abs(v) <= s.b;
  }
}

double value(const Feature& s, double u, double v) {
  if (s.kind == Feature::Stripes) {
    return static_cast<long>(std::floor((u + s.a) / s.period)) % 2 == 0 ? s.intensity : s.low;
  }
  if (s.kind == Feature::Checker) {
    const long i = static_cast<long>(std::floor((u + s.a) / s.period));
    const long j = static_cast<long>(std::floor((v + s.b) / s.period));
    return (i + j) % 2 == 0 ? s.intensity : s.low;
  }
  return s.intensity;
}

}  // namespace

nlohmann::json PhantomSpec::to_json() const {
  return {{"grid", grid},
          {"disc_radius", disc_radius},
          {"base_min", base_min},
          {"base_max", base_max},
          {"ellipses_min", ellipses_min},
          {"ellipses_max", ellipses_max},
          {"rectangles_min", rectangles_min},
          {"rectangles_max", rectangles_max},
          {"intensity_min", intensity_min},
          {"intensity_max", intensity_max},
          {"high_frequency_probability", high_frequency_probability},
          {"seed", seed}};
}

PhantomSpec PhantomSpec::from_json(const nlohmann::json& j) {
  PhantomSpec s;
  s.grid = j.at("grid").get<int>();
  s.disc_radius = j.at("disc_radius").get<double>();
  s.base_min = j.at("base_min").get<double>();
  s.base_max = j.at("base_max").get<double>();
  s.ellipses_min = j.at("ellipses_min").get<int>();
  s.ellipses_max = j.at("ellipses_max").get<int>();
  s.rectangles_min = j.at("rectangles_min").get<int>();
  s.rectangles_max = j.at("rectangles_max").get<int>();
  s.intensity_min = j.at("intensity_min").get<double>();
  s.intensity_max = j.at("intensity_max").get<double>();
  s.high_frequency_probability = j.at("high_frequency_probability").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

ops::Vector generate_phantom(const PhantomSpec& spec, std::uint64_t index) {
  if (spec.grid < 2) throw std::invalid_argument("generate_phantom: grid must be at least 2");
  if (spec.disc_radius <= 0.0 || spec.disc_radius > 1.0) {
    throw std::invalid_argument("generate_phantom: disc radius must lie in (0, 1]");
  }
  if (spec.ellipses_min < 0 || spec.ellipses_max < spec.ellipses_min || spec.rectangles_min < 0 ||
      spec.rectangles_max < spec.rectangles_min) {
    throw std::invalid_argument("generate_phantom: invalid shape count range");
  }
  Stream rng(spec.seed, index);
  const double radius = spec.disc_radius;
  const Frame rotation = frame(rng.uniform(0.0, 2.0 * std::numbers::pi));
  const double base = rng.uniform(spec.base_min, spec.base_max);

  // Shapes are placed in the unrotated phantom frame, inside the disc.
  auto centre = [&](double reach) {
    const double r = reach * std::sqrt(rng.uniform());
    const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return std::pair{r * std::cos(t), r * std::sin(t)};
  };
  std::vector<Feature> shapes;
  const int ellipses = rng.integer(spec.ellipses_min, spec.ellipses_max);
  for (int k = 0; k < ellipses; ++k) {
    const auto [cx, cy] = centre(0.6 * radius);
    const double a = rng.uniform(0.06, 0.3) * radius;
    const double b = rng.uniform(0.06, 0.3) * radius;
    const Frame f = frame(rng.uniform(0.0, std::numbers::pi));
    shapes.push_back({Feature::Ellipse, cx, cy, a, b, f, rng.uniform(spec.intensity_min, spec.intensity_max)});
  }
  const int rectangles = rng.integer(spec.rectangles_min, spec.rectangles_max);
  for (int k = 0; k < rectangles; ++k) {
    const auto [cx, cy] = centre(0.6 * radius);
    const double a = rng.uniform(0.04, 0.2) * radius;
    const double b = rng.uniform(0.04, 0.2) * radius;
    const Frame f = frame(rng.uniform(0.0, std::numbers::pi));
    shapes.push_back({Feature::Rectangle, cx, cy, a, b, f, rng.uniform(spec.intensity_min, spec.intensity_max)});
  }
  if (rng.bernoulli(spec.high_frequency_probability)) {
    const auto [cx, cy] = centre(0.4 * radius);
    const double half = rng.uniform(0.1, 0.2) * radius;
    const double pixel = 2.0 / spec.grid;
    Feature patch{rng.bernoulli(0.5) ? Feature::Stripes : Feature::Checker, cx, cy, half, half, frame(0.0),
                rng.uniform(0.6, 1.0)};
    patch.low = rng.uniform(0.0, 0.3);
    patch.period = pixel * rng.integer(1, 2);
    shapes.push_back(patch);
  }

  const int n = spec.grid;
  const double h = 2.0 / n;
  ops::Vector image = ops::Vector::Zero(static_cast<Eigen::Index>(n) * n);
  for (int row = 0; row < n; ++row) {
    const double y = 1.0 - (row + 0.5) * h;
    for (int col = 0; col < n; ++col) {
      const double x = -1.0 + (col + 0.5) * h;
      const auto [px, py] = rotation.local(x, y, 0.0, 0.0);
      if (px * px + py * py > radius * radius) continue;
      double v = base;
      for (const Feature& s : shapes) {
        const auto [u, w] = s.orientation.local(px, py, s.cx, s.cy);
        if (inside(s, u, w)) v = value(s, u, w);
      }
      image[static_cast<Eigen::Index>(row) * n + col] = std::clamp(v, 0.0, 1.0);
    }
  }
  return image;
}

double foreground_fraction(const ops::Vector& image) {
  if (image.size() == 0) return 0.0;
  return static_cast<double>((image.array() != 0.0).count()) / static_cast<double>(image.size());
}

ops::Vector to_domain(const ops::Vector& image, const ops::ImageShape& shape) {
  const auto plane = static_cast<Eigen::Index>(shape.height) * shape.width;
  if (image.size() != plane) throw DimensionError("to_domain: image does not match the operator grid");
  if (shape.channels == 1) return image;
  if (shape.channels != 2) throw DimensionError("to_domain: unsupported channel count");
  ops::Vector out = ops::Vector::Zero(2 * plane);
  out.head(plane) = image;
  return out;
}

}  // namespace nsn::data
