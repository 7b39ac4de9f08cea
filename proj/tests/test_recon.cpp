#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "nsn/autodiff/gradcheck.hpp"
#include "nsn/objectives/losses.hpp"
#include "nsn/operators/masked_fourier.hpp"
#include "nsn/operators/radon.hpp"
#include "nsn/recon/method.hpp"
#include "nsn/util/errors.hpp"
#include "support.hpp"

using namespace nsn;
using namespace nsn::recon;
using nsn::testing::random_vector;
using ops::Vector;

namespace {

std::shared_ptr<ops::MaskedFourierOp> fourier(int n = 16) {
  return std::make_shared<ops::MaskedFourierOp>(n, ops::MaskedFourierOp::make_mask(n, 0.25, 0.08, 3));
}

std::shared_ptr<ops::LimitedAngleRadonOp> radon(int n = 16) {
  auto op = std::make_shared<ops::LimitedAngleRadonOp>(ops::RadonGeometry::limited_angle(n, 12, 120.0));
  op->factorize(1e-3);
  return op;
}

template <typename T>
void randomize(ReconMethod<T>& method, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-scale, scale);
  for (auto* p : method.parameters())
    for (auto& v : p->value.values()) v = static_cast<T>(uniform(rng));
}

std::vector<Vector> measurements(const ops::LinearMap& op, int count, std::uint64_t seed) {
  std::vector<Vector> ys;
  for (int i = 0; i < count; ++i) ys.push_back(op.apply(random_vector(op.domain_size(), seed + i)));
  return ys;
}

double max_abs_diff(const ad::Tensor<double>& a, const ad::Tensor<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("method tags") {
  CHECK(all_methods().front() == MethodTag::Pseudoinverse);
  CHECK(all_methods().back() == MethodTag::NullSpace2Unc);
  for (MethodTag tag : all_methods()) CHECK(parse_method(to_string(tag)) == tag);
  CHECK_THROWS_AS(parse_method("NullSpace3"), std::invalid_argument);
  CHECK(weights_source(MethodTag::ProjResidual2) == MethodTag::Residual2);
  CHECK(traits(MethodTag::NullSpace2Unc).cascade == 2);
  CHECK(traits(MethodTag::NullSpace2Unc).uncertainty);
  CHECK(default_landweber(ops::OperatorKind::LimitedAngleRadon).stepsize == 0.003);
}

TEST_CASE("operators without an inverse are rejected") {
  auto op = std::make_shared<ops::LimitedAngleRadonOp>(ops::RadonGeometry::limited_angle(8, 6, 120.0));
  CHECK_THROWS_AS(ReconMethod<double>(MethodTag::NullSpace1, op), StateError);
}

TEST_CASE("zero-initialized methods return the pseudoinverse") {
  const std::vector<std::shared_ptr<const ops::LinearMap>> operators = {fourier(), radon()};
  for (const auto& op : operators) {
    const auto ys = measurements(*op, 2, 10);
    for (MethodTag tag : all_methods()) {
      CAPTURE(to_string(tag));
      ReconMethod<double> method(tag, op, {2, 4}, 1);
      const auto out = method.reconstruct(ys);
      CHECK(max_abs_diff(out.recon, out.pseudoinverse) == 0.0);
      CHECK(out.log_scale.has_value() == traits(tag).uncertainty);
      if (out.log_scale) {
        for (double v : out.log_scale->values()) CHECK(v == 0.0);
      }
    }
  }
}

TEST_CASE("null-space methods are data consistent for arbitrary parameters") {
  const std::vector<std::shared_ptr<const ops::LinearMap>> operators = {fourier(), radon()};
  for (const auto& op : operators) {
    const auto ys = measurements(*op, 3, 20);
    for (MethodTag tag : {MethodTag::NullSpace1, MethodTag::NullSpace2, MethodTag::NullSpace1Unc,
                          MethodTag::NullSpace2Unc}) {
      CAPTURE(to_string(tag));
      CAPTURE(ops::to_string(op->kind()));
      ReconMethod<double> method(tag, op, {2, 4}, 2);
      randomize(method, 30);
      const auto out = method.reconstruct(ys);
      const auto recon = method.to_vectors(out.recon);
      const auto xdag = method.to_vectors(out.pseudoinverse);
      for (std::size_t b = 0; b < ys.size(); ++b) {
        CHECK(max_abs_diff(out.recon, out.pseudoinverse) > 1e-3);
        CHECK(retained_consistency_gap(*op, recon[b], op->apply(xdag[b])) <= 1e-10);
        if (op->kind() == ops::OperatorKind::MaskedFourier) {
          CHECK(data_consistency_gap(*op, recon[b], ys[b]) <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("pseudoinverse is consistent with noiseless Fourier data") {
  auto op = fourier();
  ReconMethod<double> method(MethodTag::Pseudoinverse, op);
  const auto ys = measurements(*op, 2, 40);
  const auto recon = method.to_vectors(method.reconstruct(ys).recon);
  for (std::size_t b = 0; b < ys.size(); ++b) CHECK(data_consistency_gap(*op, recon[b], ys[b]) <= 1e-10);
}

TEST_CASE("second null-space block with zero weights leaves the first unchanged") {
  auto op = radon();
  ReconMethod<double> one(MethodTag::NullSpace1, op, {2, 4}, 3);
  ReconMethod<double> two(MethodTag::NullSpace2, op, {2, 4}, 3);
  randomize(one, 50);
  const auto p1 = one.parameters();
  const auto p2 = two.parameters();
  for (std::size_t i = 0; i < p1.size(); ++i) p2[i]->value = p1[i]->value;
  for (std::size_t i = p1.size(); i < p2.size(); ++i) p2[i]->value.fill(0.0);
  const auto ys = measurements(*op, 2, 60);
  CHECK(max_abs_diff(one.reconstruct(ys).recon, two.reconstruct(ys).recon) == 0.0);
}

TEST_CASE("null-space output equals the projected residual output") {
  auto op = fourier();
  ReconMethod<double> null_space(MethodTag::NullSpace1, op, {2, 4}, 4);
  ReconMethod<double> residual(MethodTag::Residual1, op, {2, 4}, 4);
  randomize(null_space, 70);
  const auto pn = null_space.parameters();
  const auto pr = residual.parameters();
  for (std::size_t i = 0; i < pn.size(); ++i) pr[i]->value = pn[i]->value;

  const auto ys = measurements(*op, 3, 80);
  const auto ns = null_space.to_vectors(null_space.reconstruct(ys).recon);
  const auto res_out = residual.reconstruct(ys);
  const auto res = residual.to_vectors(res_out.recon);
  const auto xdag = residual.to_vectors(res_out.pseudoinverse);
  for (std::size_t b = 0; b < ys.size(); ++b) {
    // Exact projection onto {x : A x = A x‡}.
    const Vector target = op->apply(xdag[b]);
    const Vector exact = res[b] - op->pseudoinverse(op->apply(res[b]) - target);
    CHECK((ns[b] - exact).norm() <= 1e-8 * exact.norm());
    const Vector iterated = ops::landweber_project(*op, res[b], target, {200, 0.5, false});
    CHECK((ns[b] - iterated).norm() <= 1e-5 * exact.norm());
  }
}

TEST_CASE("residual methods violate data consistency where null-space methods do not") {
  auto op = fourier();
  int larger = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ReconMethod<double> residual(MethodTag::Residual1, op, {2, 4}, seed);
    ReconMethod<double> null_space(MethodTag::NullSpace1, op, {2, 4}, seed);
    randomize(residual, 100 + seed);
    const auto pr = residual.parameters();
    const auto pn = null_space.parameters();
    for (std::size_t i = 0; i < pr.size(); ++i) pn[i]->value = pr[i]->value;
    const auto ys = measurements(*op, 1, 200 + seed);
    const double gap_res = data_consistency_gap(*op, residual.to_vectors(residual.reconstruct(ys).recon)[0], ys[0]);
    const double gap_ns = data_consistency_gap(*op, null_space.to_vectors(null_space.reconstruct(ys).recon)[0], ys[0]);
    CHECK(gap_ns <= 1e-6);
    larger += gap_res > gap_ns;
  }
  CHECK(larger == 20);
}

TEST_CASE("reconstruction branch ignores the log-scale branch parameters") {
  auto op = fourier();
  ReconMethod<double> method(MethodTag::NullSpace2Unc, op, {2, 4}, 5);
  randomize(method, 300);
  const auto ys = measurements(*op, 2, 310);
  const auto before = method.reconstruct(ys);
  std::mt19937_64 rng(320);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (auto* p : method.blocks().back().secondary_parameters())
    for (auto& v : p->value.values()) v += normal(rng);
  const auto after = method.reconstruct(ys);
  CHECK(max_abs_diff(before.recon, after.recon) == 0.0);
  CHECK(max_abs_diff(*before.log_scale, *after.log_scale) > 1e-3);
  for (double v : after.log_scale->values()) CHECK(std::abs(v) <= kLogScaleBound);
}

TEST_CASE("gradients through the network and P0 match finite differences") {
  const std::vector<std::shared_ptr<const ops::LinearMap>> operators = {fourier(8), radon(16)};
  for (const auto& op : operators) {
    for (MethodTag tag : {MethodTag::NullSpace2, MethodTag::NullSpace1Unc}) {
      CAPTURE(to_string(tag));
      CAPTURE(ops::to_string(op->kind()));
      ReconMethod<double> method(tag, op, {2, 4}, 6);
      randomize(method, 400);
      const auto ys = measurements(*op, 2, 410);
      const auto xdag = method.pseudoinverse(ys);
      std::vector<Vector> truth_vectors;
      for (int b = 0; b < 2; ++b) truth_vectors.push_back(random_vector(op->domain_size(), 420 + b));
      const auto truth = method.to_batch(truth_vectors);
      auto params = method.parameters();
      const ad::LossBuilder loss = [&](ad::Tape<double>& tape) {
        const auto out = method.forward(tape, tape.input(xdag));
        if (out.log_scale) return obj::uncertainty_loss(tape, out.recon, *out.log_scale, tape.input(truth));
        return obj::mae_risk(tape, out.recon, tape.input(truth));
      };
      const auto report = ad::gradient_check(std::span<ad::Parameter<double>* const>(params), loss, {60, 1e-4, 7});
      CHECK(report.sampled >= 50);
      CHECK(report.max_relative_error <= 1e-4);
    }
  }
}

TEST_CASE("checkpoints follow the weights source") {
  const auto dir = std::filesystem::temp_directory_path() / "nsn_test_recon";
  std::filesystem::remove_all(dir);
  auto op = fourier(8);
  ReconMethod<float> residual(MethodTag::Residual2, op, {2, 4}, 8);
  randomize(residual, 500);
  residual.save(dir / "Residual2");

  ReconMethod<float> projected(MethodTag::ProjResidual2, op, {2, 4}, 9);
  projected.load(dir / "Residual2");
  CHECK(projected.parameters()[3]->value[0] == residual.parameters()[3]->value[0]);

  ReconMethod<float> null_space(MethodTag::NullSpace2, op, {2, 4}, 9);
  CHECK_THROWS_AS(null_space.load(dir / "Residual2"), ValidationError);
  ReconMethod<float> wider(MethodTag::Residual2, op, {2, 8}, 9);
  CHECK_THROWS_AS(wider.load(dir / "Residual2"), ValidationError);
  std::filesystem::remove_all(dir);
}
