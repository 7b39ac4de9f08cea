#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "nsn/operators/dense_matrix.hpp"
#include "nsn/operators/factory.hpp"
#include "nsn/operators/landweber.hpp"
#include "nsn/operators/masked_fourier.hpp"
#include "nsn/operators/radon.hpp"
#include "nsn/util/errors.hpp"
#include "support.hpp"

using namespace nsn;
using namespace nsn::ops;
using nsn::testing::quadrature_radon_matrix;
using nsn::testing::random_matrix;
using nsn::testing::random_vector;

namespace {

double dot_test_defect(const LinearMap& op, std::uint64_t seed) {
  const Vector x = random_vector(static_cast<Eigen::Index>(op.domain_size()), seed);
  const Vector y = random_vector(static_cast<Eigen::Index>(op.range_size()), seed + 7919);
  const Vector ax = op.apply(x);
  const Vector aty = op.adjoint(y);
  return std::abs(ax.dot(y) - x.dot(aty)) / (x.norm() * aty.norm() + ax.norm() * y.norm());
}

std::shared_ptr<LimitedAngleRadonOp> radon(int n, int angles, double range, double tau = 1e-3) {
  auto op = std::make_shared<LimitedAngleRadonOp>(RadonGeometry::limited_angle(n, angles, range));
  op->factorize(tau);
  return op;
}

}  // namespace

TEST_CASE("adjoint dot-test holds for every operator kind") {
  SUBCASE("Radon 16x16, 100 random pairs") {
    LimitedAngleRadonOp op(RadonGeometry::limited_angle(16, 20, 120.0));
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) worst = std::max(worst, dot_test_defect(op, s));
    CHECK(worst <= 1e-10);
  }
  SUBCASE("Radon 64x64") {
    LimitedAngleRadonOp op(RadonGeometry::limited_angle(64, 30, 120.0));
    for (std::uint64_t s = 0; s < 5; ++s) CHECK(dot_test_defect(op, s) <= 1e-10);
  }
  SUBCASE("masked Fourier") {
    MaskedFourierOp op(32, MaskedFourierOp::make_mask(32, 0.25, 0.08, 3));
    for (std::uint64_t s = 0; s < 20; ++s) CHECK(dot_test_defect(op, s) <= 1e-10);
  }
  SUBCASE("dense matrix") {
    DenseMatrixOp op(random_matrix(7, 5, 1));
    for (std::uint64_t s = 0; s < 20; ++s) CHECK(dot_test_defect(op, s) <= 1e-10);
  }
}

TEST_CASE("apply and adjoint basics") {
  MaskedFourierOp fourier(16, MaskedFourierOp::make_mask(16, 0.25, 0.08, 0));
  LimitedAngleRadonOp ct(RadonGeometry::limited_angle(8, 6, 120.0));

  CHECK(fourier.apply(Vector::Zero(fourier.domain_size())).norm() == 0.0);
  CHECK(ct.apply(Vector::Zero(ct.domain_size())).norm() == 0.0);
  CHECK(ct.adjoint(Vector::Zero(ct.range_size())).norm() == 0.0);

  const Vector x1 = random_vector(ct.domain_size(), 1);
  const Vector x2 = random_vector(ct.domain_size(), 2);
  const Vector lhs = ct.apply(2.5 * x1 - 0.75 * x2);
  const Vector rhs = 2.5 * ct.apply(x1) - 0.75 * ct.apply(x2);
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());

  const Eigen::MatrixXd m = random_matrix(4, 3, 9);
  DenseMatrixOp dense(m);
  const Vector y = random_vector(4, 10);
  CHECK((dense.adjoint(y) - m.transpose() * y).norm() <= 1e-14);

  CHECK_THROWS_AS(ct.apply(Vector::Zero(3)), DimensionError);
  CHECK_THROWS_AS(ct.adjoint(Vector::Zero(3)), DimensionError);
  CHECK_THROWS_AS(fourier.apply(Vector::Zero(16 * 16)), DimensionError);
}

TEST_CASE("Radon weights match a fine-quadrature line integral on 8x8") {
  const auto g = RadonGeometry::limited_angle(8, 12, 180.0);
  LimitedAngleRadonOp op(g);
  const Eigen::MatrixXd oracle = quadrature_radon_matrix(g, 400000);
  const Eigen::MatrixXd exact(op.matrix());
  for (int pixel = 0; pixel < 64; ++pixel) {
    Vector indicator = Vector::Zero(64);
    indicator(pixel) = 1.0;
    const Vector column = op.apply(indicator);
    const double err = (column - oracle.col(pixel)).norm() / oracle.col(pixel).norm();
    CHECK(err <= 1e-3);
  }
  CHECK((exact - oracle).cwiseAbs().maxCoeff() <= 2e-5);
  CHECK(exact.minCoeff() >= 0.0);
}

TEST_CASE("Radon geometry defaults") {
  const auto g = RadonGeometry::limited_angle(64, 30, 120.0);
  CHECK(g.detector_bins == 91);
  CHECK(g.angles_deg.size() == 30);
  CHECK(g.angles_deg.front() == 0.0);
  CHECK(g.angles_deg.back() == doctest::Approx(116.0));
  CHECK_THROWS_AS(build_radon_matrix(RadonGeometry{8, {185.0}, 12}), std::invalid_argument);
}

TEST_CASE("masked Fourier operator") {
  SUBCASE("mask construction keeps the centre and the requested fraction") {
    const auto lines = MaskedFourierOp::make_mask(64, 0.25, 0.08, 0);
    CHECK(lines.size() == 16);
    for (int k : {0, 1, 2, 62, 63}) CHECK(std::find(lines.begin(), lines.end(), k) != lines.end());
    CHECK(MaskedFourierOp::make_mask(64, 0.25, 0.08, 0) == lines);
  }
  SUBCASE("full sampling is unitary") {
    MaskedFourierOp op(16, MaskedFourierOp::full_mask(16));
    const Vector x = random_vector(op.domain_size(), 4);
    CHECK((op.adjoint(op.apply(x)) - x).norm() <= 1e-12 * x.norm());
    CHECK(op.null_space_project(x).norm() <= 1e-12 * x.norm());
  }
  SUBCASE("A A* is the identity on retained coefficients") {
    MaskedFourierOp op(32, MaskedFourierOp::make_mask(32, 0.25, 0.08, 5));
    const Vector y = random_vector(op.range_size(), 6);
    CHECK((op.apply(op.adjoint(y)) - y).norm() <= 1e-12 * y.norm());
    const Vector aty = op.adjoint(y);
    CHECK((op.adjoint(op.apply(aty)) - aty).norm() <= 1e-12 * aty.norm());
    CHECK((op.pseudoinverse(y) - aty).norm() == 0.0);
  }
  SUBCASE("pseudoinverse reproduces data for x in the row space") {
    MaskedFourierOp op(32, MaskedFourierOp::make_mask(32, 0.25, 0.08, 5));
    const Vector x = op.adjoint(random_vector(op.range_size(), 8));
    const Vector y = op.apply(x);
    CHECK((op.apply(op.pseudoinverse(y)) - y).norm() <= 1e-10 * y.norm());
  }
}

TEST_CASE("pseudoinverse") {
  SUBCASE("3x2 matrix matches the normal equations") {
    Eigen::MatrixXd a(3, 2);
    a << 1, 2, 3, 4, 5, 7;
    DenseMatrixOp op(a);
    const Eigen::MatrixXd normal = (a.transpose() * a).inverse() * a.transpose();
    const Vector y = random_vector(3, 11);
    CHECK((op.pseudoinverse(y) - normal * y).norm() <= 1e-12 * (normal * y).norm());
  }
  SUBCASE("tau = 0 on a full-rank square matrix is the inverse") {
    const Eigen::MatrixXd a = random_matrix(6, 6, 12) + 3.0 * Eigen::MatrixXd::Identity(6, 6);
    DenseMatrixOp op(a, 0.0);
    const Vector y = random_vector(6, 13);
    const Vector expected = a.inverse() * y;
    CHECK((op.pseudoinverse(y) - expected).norm() <= 1e-8 * expected.norm());
  }
  SUBCASE("Radon requires a factorization") {
    LimitedAngleRadonOp op(RadonGeometry::limited_angle(8, 6, 120.0));
    CHECK_FALSE(op.has_pseudoinverse());
    CHECK_THROWS_AS(op.pseudoinverse(Vector::Zero(op.range_size())), StateError);
    CHECK_THROWS_AS(op.null_space_project(Vector::Zero(op.domain_size())), StateError);
    CHECK_THROWS_AS(op.svd(), StateError);
  }
}

TEST_CASE("truncated SVD invariants on a Radon operator") {
  auto op = radon(16, 12, 120.0);
  const auto& svd = op->svd();
  CHECK(svd.rank() > 0);
  CHECK(svd.singular_values().minCoeff() >= svd.tau() * svd.largest());
  const Vector y = random_vector(op->range_size(), 14);
  const Vector p = op->pseudoinverse(y);
  const Vector ppp = op->pseudoinverse(op->apply(p));
  CHECK((ppp - p).norm() <= 1e-8 * p.norm());
}

TEST_CASE("null-space projector") {
  auto ct = radon(16, 12, 120.0);
  MaskedFourierOp fourier(32, MaskedFourierOp::make_mask(32, 0.25, 0.08, 1));
  DenseMatrixOp dense(random_matrix(4, 7, 2));
  const std::vector<const LinearMap*> ops = {ct.get(), &fourier, &dense};
  for (const LinearMap* op : ops) {
    CAPTURE(to_string(op->kind()));
    const Vector x = random_vector(op->domain_size(), 21);
    const Vector z = random_vector(op->domain_size(), 22);
    const Vector p = op->null_space_project(x);
    CHECK((op->null_space_project(p) - p).norm() <= 1e-10 * p.norm());
    CHECK(std::abs(p.dot(z) - x.dot(op->null_space_project(z))) <= 1e-10 * x.norm() * z.norm());
    // Truncation-qualified: only the retained part of the range must vanish.
    const Vector ap = op->project_retained_range(op->apply(p));
    CHECK(ap.norm() <= 1e-8 * op->opnorm() * x.norm());

    Eigen::MatrixXd columns(op->domain_size(), 3);
    columns << x, z, p;
    const Eigen::MatrixXd projected = op->null_space_project_columns(columns);
    CHECK((projected.col(0) - p).norm() <= 1e-12 * x.norm());
    CHECK((projected.col(1) - op->null_space_project(z)).norm() <= 1e-12 * z.norm());
  }
  // The untruncated range of the Radon operator also sees P0 x only
  // through singular values below tau * s_1.
  const Vector x = random_vector(ct->domain_size(), 23);
  CHECK(ct->apply(ct->null_space_project(x)).norm() <= 1e-3 * ct->opnorm() * x.norm());
}

TEST_CASE("operator norm estimate") {
  CHECK(estimate_opnorm(DenseMatrixOp(Eigen::MatrixXd::Identity(5, 5)), 20) == doctest::Approx(1.0).epsilon(1e-6));
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  CHECK(std::abs(estimate_opnorm(DenseMatrixOp(d), 10) - 3.0) <= 0.15);
  CHECK_THROWS_AS(estimate_opnorm(DenseMatrixOp(d), 5), std::invalid_argument);

  LimitedAngleRadonOp op(RadonGeometry::limited_angle(16, 20, 120.0));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(op.matrix()));
  const double s1 = svd.singularValues()(0);
  CHECK(std::abs(estimate_opnorm(op, 50) - s1) <= 0.05 * s1);
  CHECK(estimate_opnorm(op, 50, 0) == estimate_opnorm(op, 50, 0));
}

TEST_CASE("Landweber projection") {
  SUBCASE("fixed point when A x0 = y") {
    auto ct = radon(8, 6, 120.0);
    const Vector x0 = random_vector(ct->domain_size(), 31);
    const Vector y = ct->apply(x0);
    const Vector out = landweber_project(*ct, x0, y, {15, 0.003});
    CHECK((out - x0).norm() == 0.0);
  }
  SUBCASE("converges to the dense-SVD projection on a 6x4 system") {
    // Rank 3, so L(A, y) is a line and the projection is nontrivial.
    const Eigen::MatrixXd a = random_matrix(6, 3, 40) * random_matrix(3, 4, 41);
    DenseMatrixOp op(a, 1e-12);
    const Vector y = a * random_vector(4, 42);
    const Vector x0 = random_vector(4, 43);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const Vector oracle = x0 - svd.solve(a * x0 - y);

    const double norm = op.opnorm();
    const Vector out = landweber_project(op, x0, y, {10000, 1.0 / (norm * norm)});
    CHECK((out - oracle).norm() <= 1e-6 * oracle.norm());
    CHECK((op.apply(out) - y).norm() <= 1e-6 * y.norm());
  }
  SUBCASE("y = 0 converges to P0 x0") {
    DenseMatrixOp op(random_matrix(3, 6, 50));
    const Vector x0 = random_vector(6, 51);
    const double norm = op.opnorm();
    const Vector out = landweber_project(op, x0, Vector::Zero(3), {5000, 1.0 / (norm * norm)});
    CHECK((out - op.null_space_project(x0)).norm() <= 1e-6 * x0.norm());
  }
  SUBCASE("residual is non-increasing for stepsize <= 1/|A|^2") {
    auto ct = radon(16, 12, 120.0);
    const Vector y = ct->apply(random_vector(ct->domain_size(), 60));
    Vector x = random_vector(ct->domain_size(), 61);
    const double lambda = 1.0 / (ct->opnorm() * ct->opnorm());
    double previous = (ct->apply(x) - y).norm();
    for (int j = 0; j < 30; ++j) {
      x = landweber_project(*ct, x, y, {1, lambda});
      const double current = (ct->apply(x) - y).norm();
      CHECK(current <= previous * (1.0 + 1e-12));
      previous = current;
    }
  }
  SUBCASE("Fourier with stepsize 1 projects in one step") {
    MaskedFourierOp op(16, MaskedFourierOp::make_mask(16, 0.25, 0.08, 2));
    const Vector x0 = random_vector(op.domain_size(), 70);
    const Vector y = op.apply(random_vector(op.domain_size(), 71));
    const Vector out = landweber_project(op, x0, y, {1, 1.0});
    const Vector exact = x0 - op.pseudoinverse(op.apply(x0) - y);
    CHECK((out - exact).norm() <= 1e-12 * exact.norm());
  }
  SUBCASE("stepsize above the bound is rejected, and divergence is named") {
    DenseMatrixOp op(random_matrix(4, 4, 80));
    const double norm = op.opnorm();
    const Vector x0 = random_vector(4, 81);
    const Vector y = random_vector(4, 82);
    CHECK_THROWS_AS(landweber_project(op, x0, y, {50, 3.0 / (norm * norm)}), StabilityError);
    try {
      landweber_project(op, x0, y, {500, 3.0 / (norm * norm), true});
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(std::string(e.what()).find("lambda") != std::string::npos);
    }
    CHECK_THROWS_AS(landweber_project(op, x0, y, {0, 0.1}), std::invalid_argument);
  }
}

TEST_CASE("descriptor round trip and cache") {
  const auto dir = std::filesystem::temp_directory_path() / "nsn_test_cache_ops";
  std::filesystem::remove_all(dir);
  LimitedAngleRadonOp first(RadonGeometry::limited_angle(12, 8, 120.0), dir);
  first.factorize(1e-3);
  auto second = make_operator(first.descriptor(), dir);
  CHECK(second->content_hash() == first.content_hash());
  const Vector x = random_vector(first.domain_size(), 90);
  CHECK((second->apply(x) - first.apply(x)).norm() == 0.0);
  CHECK((second->null_space_project(x) - first.null_space_project(x)).norm() == 0.0);

  MaskedFourierOp fourier(16, MaskedFourierOp::make_mask(16, 0.25, 0.08, 3));
  auto rebuilt = make_operator(fourier.descriptor());
  CHECK(rebuilt->content_hash() == fourier.content_hash());
  CHECK_THROWS_AS(make_operator(nlohmann::json{{"kind", "Cone"}}), std::invalid_argument);
  std::filesystem::remove_all(dir);
}
