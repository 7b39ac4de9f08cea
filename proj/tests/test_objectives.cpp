#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nsn/objectives/losses.hpp"
#include "nsn/objectives/metrics.hpp"
#include "nsn/objectives/statistics.hpp"
#include "nsn/util/errors.hpp"

using namespace nsn;
using namespace nsn::obj;
using ad::Shape;
using ad::Tensor;

namespace {

Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(lo, hi);
  Tensor<double> t(shape);
  for (auto& v : t.values()) v = uniform(rng);
  return t;
}

// Golden-section search for the minimizer of a unimodal function on [a, b].
template <typename F>
double golden_section(F f, double a, double b, double tol = 1e-10) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  while (b - a > tol) {
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return 0.5 * (a + b);
}

// Direct SSIM: every window position evaluated with its own weighted sums.
double ssim_oracle(const Image& x, const Image& y, double peak) {
  const int k = 11;
  const double sigma = 1.5;
  double weights[k][k];
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double di = i - k / 2;
      const double dj = j - k / 2;
      weights[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      total += weights[i][j];
    }
  }
  const double c1 = std::pow(0.01 * peak, 2);
  const double c2 = std::pow(0.03 * peak, 2);
  double acc = 0.0;
  int count = 0;
  for (int r = 0; r + k <= x.rows(); ++r) {
    for (int c = 0; c + k <= x.cols(); ++c) {
      double mx = 0, my = 0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          mx += weights[i][j] / total * x(r + i, c + j);
          my += weights[i][j] / total * y(r + i, c + j);
        }
      double vx = 0, vy = 0, cxy = 0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          const double w = weights[i][j] / total;
          vx += w * (x(r + i, c + j) - mx) * (x(r + i, c + j) - mx);
          vy += w * (y(r + i, c + j) - my) * (y(r + i, c + j) - my);
          cxy += w * (x(r + i, c + j) - mx) * (y(r + i, c + j) - my);
        }
      acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return acc / count;
}

Image random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Image img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = uniform(rng);
  return img;
}

}  // namespace

TEST_CASE("mae_risk values") {
  const auto x = random_tensor({3, 1, 4, 4}, 1);
  CHECK(mae_risk(x, x).value == 0.0);

  Tensor<double> truth({1, 1, 2, 2});
  Tensor<double> rec({1, 1, 2, 2}, std::vector<double>{1.0, -1.0, 2.0, 0.0});
  const auto loss = mae_risk(rec, truth);
  CHECK(loss.value == 4.0);
  CHECK(loss.residual[1] == -1.0);

  CHECK_THROWS_AS(mae_risk(Tensor<double>({0, 1, 2, 2}), Tensor<double>({0, 1, 2, 2})), std::invalid_argument);
  CHECK_THROWS_AS(mae_risk(Tensor<double>({1, 1, 2, 2}), Tensor<double>({1, 1, 2, 3})), DimensionError);
}

TEST_CASE("mae_risk gradient is sign(residual) / N") {
  const auto rec = random_tensor({4, 2, 3, 3}, 2);
  const auto truth = random_tensor({4, 2, 3, 3}, 3);
  ad::Tape<double> tape;
  ad::Var r = tape.input(rec, true);
  tape.backward(mae_risk(tape, r, tape.input(truth)));
  const auto& g = tape.grad(r);
  const double h = 1e-6;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    CHECK(g[i] == (rec[i] > truth[i] ? 0.25 : -0.25));
    auto plus = rec;
    auto minus = rec;
    plus[i] += h;
    minus[i] -= h;
    const double fd = (mae_risk(plus, truth).value - mae_risk(minus, truth).value) / (2 * h);
    CHECK(fd == doctest::Approx(g[i]).epsilon(1e-6));
  }
}

TEST_CASE("uncertainty_loss with rho = 0 reduces to mae_risk plus n log 2") {
  const Shape shape{5, 2, 6, 6};
  const auto rec = random_tensor(shape, 4);
  const auto truth = random_tensor(shape, 5);
  const Tensor<double> rho(shape);
  const double n = static_cast<double>(shape.sample());
  const double expected = mae_risk(rec, truth).value + n * std::numbers::ln2;
  CHECK(std::abs(uncertainty_loss(rec, rho, truth).value - expected) <= 1e-12 * expected);

  ad::Tape<double> tape;
  ad::Var v = uncertainty_loss(tape, tape.input(rec, true), tape.input(rho), tape.input(truth));
  CHECK(std::abs(tape.value(v)[0] - expected) <= 1e-12 * expected);
}

TEST_CASE("uncertainty_loss with frozen constant sigma") {
  const Shape shape{3, 1, 5, 5};
  const auto rec = random_tensor(shape, 6);
  const auto truth = random_tensor(shape, 7);
  const double sigma = 0.37;
  const Tensor<double> rho(shape, std::log(sigma));
  const double n = static_cast<double>(shape.sample());
  const double expected = mae_risk(rec, truth).value / sigma + n * std::log(2.0 * sigma);
  CHECK(uncertainty_loss(rec, rho, truth).value == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("single pixel with r = 2 is minimized at rho = log 2") {
  Tensor<double> truth({1, 1, 1, 1});
  Tensor<double> rec({1, 1, 1, 1}, 2.0);
  auto value_at = [&](double rho) { return uncertainty_loss(rec, Tensor<double>({1, 1, 1, 1}, rho), truth).value; };
  const double best = golden_section(value_at, -5.0, 5.0);
  CHECK(best == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  CHECK(value_at(std::log(2.0)) == doctest::Approx(1.0 + std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("pixelwise rho minimizer is log|r| and the loss respects its lower bound") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uniform(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double r = uniform(rng);
    Tensor<double> rec({1, 1, 1, 1}, r);
    Tensor<double> truth({1, 1, 1, 1});
    auto value_at = [&](double rho) {
      return uncertainty_loss(rec, Tensor<double>({1, 1, 1, 1}, rho), truth).value;
    };
    CHECK(golden_section(value_at, -10.0, 10.0) == doctest::Approx(std::log(std::abs(r))).epsilon(1e-6));
  }

  const Shape shape{2, 1, 8, 8};
  const auto rec = random_tensor(shape, 9);
  const auto truth = random_tensor(shape, 10);
  const auto residual = mae_risk(rec, truth).residual;
  const double bound = uncertainty_loss_lower_bound(residual);
  for (std::uint64_t seed = 11; seed < 21; ++seed) {
    CHECK(uncertainty_loss(rec, random_tensor(shape, seed, -4.0, 4.0), truth).value >= bound);
  }
  Tensor<double> optimal(shape);
  for (std::size_t i = 0; i < residual.size(); ++i) optimal[i] = std::log(std::abs(residual[i]));
  CHECK(uncertainty_loss(rec, optimal, truth).value == doctest::Approx(bound).epsilon(1e-12));
}

TEST_CASE("uncertainty_loss gradients match finite differences") {
  const Shape shape{2, 1, 3, 4};
  const auto rec = random_tensor(shape, 30);
  const auto rho = random_tensor(shape, 31);
  const auto truth = random_tensor(shape, 32);
  ad::Tape<double> tape;
  ad::Var vr = tape.input(rec, true);
  ad::Var vp = tape.input(rho, true);
  tape.backward(uncertainty_loss(tape, vr, vp, tape.input(truth)));
  const double h = 1e-6;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double r = rec[i] - truth[i];
    const double analytic = (1.0 - std::abs(r) * std::exp(-rho[i])) / shape.n;
    CHECK(tape.grad(vp)[i] == doctest::Approx(analytic).epsilon(1e-12));
    auto plus = rho;
    auto minus = rho;
    plus[i] += h;
    minus[i] -= h;
    const double fd = (uncertainty_loss(rec, plus, truth).value - uncertainty_loss(rec, minus, truth).value) / (2 * h);
    CHECK(std::abs(fd - tape.grad(vp)[i]) <= 1e-6);

    auto rplus = rec;
    auto rminus = rec;
    rplus[i] += h;
    rminus[i] -= h;
    const double fdr =
        (uncertainty_loss(rplus, rho, truth).value - uncertainty_loss(rminus, rho, truth).value) / (2 * h);
    CHECK(std::abs(fdr - tape.grad(vr)[i]) <= 1e-6);
  }
}

TEST_CASE("uncertainty_loss rejects non-finite rho") {
  const Shape shape{1, 1, 2, 2};
  Tensor<double> rho(shape);
  rho[2] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(uncertainty_loss(Tensor<double>(shape), rho, Tensor<double>(shape)), FaultError);
}

TEST_CASE("psnr") {
  const Image truth = random_image(16, 16, 40);
  CHECK(psnr(truth + 0.1, truth, 1.0) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(std::abs(psnr(truth + 0.1, truth, 1.0) - 20.0) <= 1e-9);
  CHECK(psnr(truth + 2.0, truth, 2.0) == doctest::Approx(0.0));
  CHECK(std::isinf(psnr(truth, truth, 1.0)));
  const Image rec = truth + 0.05 * random_image(16, 16, 41);
  CHECK(psnr(2.0 * rec, 2.0 * truth, 2.0) == doctest::Approx(psnr(rec, truth, 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(psnr(rec, truth, 0.0), std::invalid_argument);
  CHECK(peak_of(truth) == truth.maxCoeff());
}

TEST_CASE("psnr and mae agree on pixelwise dominated errors") {
  const Image truth = random_image(12, 12, 42);
  const Image small_err = 0.05 * (random_image(12, 12, 43) - 0.5);
  const Image large_err = 2.0 * small_err + 0.01;
  const MetricReport a = evaluate_image(truth + small_err, truth);
  const MetricReport b = evaluate_image(truth + large_err, truth);
  CHECK(a.psnr > b.psnr);
  CHECK(a.mae < b.mae);
}

TEST_CASE("ssim") {
  const Image x = random_image(24, 20, 50);
  CHECK(ssim(x, x, 1.0) == doctest::Approx(1.0).epsilon(1e-14));

  Image half = Image::Zero(32, 32);
  half.rightCols(16) = 1.0;
  const Image inverted = 1.0 - half;
  const double value = ssim(inverted, half, 1.0);
  CHECK(value < 0.1);
  CHECK(value == doctest::Approx(ssim_oracle(inverted, half, 1.0)).epsilon(1e-10));

  const Image y = (x + 0.2 * random_image(24, 20, 51)).min(1.0);
  CHECK(ssim(x, y, 1.0) == doctest::Approx(ssim(y, x, 1.0)).epsilon(1e-14));
  CHECK(ssim(x, y, 1.0) == doctest::Approx(ssim_oracle(x, y, 1.0)).epsilon(1e-10));

  CHECK_THROWS_AS(ssim(random_image(10, 30, 1), random_image(10, 30, 2), 1.0), std::invalid_argument);
}

TEST_CASE("two-channel tensors are reduced to magnitude images") {
  Tensor<double> t({1, 2, 1, 2}, std::vector<double>{3.0, 0.0, 4.0, -1.0});
  const Image img = to_image(t, 0);
  CHECK(img(0, 0) == doctest::Approx(5.0));
  CHECK(img(0, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(to_image(Tensor<double>({1, 3, 1, 1}), 0), DimensionError);
}

TEST_CASE("uncertainty_error_report") {
  std::vector<UncertaintyErrorRow> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({0.01 * (i + 1) * (i % 3 + 1), 0.2});
  const auto flat = uncertainty_error_report(rows);
  CHECK(flat.correlation.degenerate);
  CHECK(flat.correlation.r == 0.0);

  for (auto& row : rows) row.mean_sigma = row.mean_abs_residual;
  const auto oracle = uncertainty_error_report(rows);
  CHECK_FALSE(oracle.correlation.degenerate);
  CHECK(oracle.correlation.r == doctest::Approx(1.0).epsilon(1e-14));

  rows.resize(2);
  CHECK_THROWS_AS(uncertainty_error_report(rows), StatisticsError);
}
