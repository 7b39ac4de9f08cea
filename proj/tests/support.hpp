#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "nsn/operators/radon.hpp"

namespace nsn::testing {

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline double rel(double value, double scale) { return value / std::max(scale, 1e-300); }

// Brute-force line integral of a single pixel: walk the ray in tiny steps
// and accumulate the length spent inside each pixel.
inline Eigen::MatrixXd quadrature_radon_matrix(const nsn::ops::RadonGeometry& g, int samples) {
  const int n = g.grid;
  const double h = 2.0 / n;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.rays()), n * n);
  const double t0 = -2.0;
  const double dt = 4.0 / samples;
  int row = 0;
  for (double angle : g.angles_deg) {
    const double phi = angle * std::numbers::pi / 180.0;
    for (int b = 0; b < g.detector_bins; ++b, ++row) {
      const double s = g.bin_center(b);
      for (int k = 0; k < samples; ++k) {
        const double t = t0 + (k + 0.5) * dt;
        const double x = s * std::cos(phi) - t * std::sin(phi);
        const double y = s * std::sin(phi) + t * std::cos(phi);
        if (x <= -1.0 || x >= 1.0 || y <= -1.0 || y >= 1.0) continue;
        const int col = static_cast<int>((x + 1.0) / h);
        const int r = static_cast<int>((1.0 - y) / h);
        out(row, r * n + col) += dt;
      }
    }
  }
  return out;
}

}  // namespace nsn::testing
