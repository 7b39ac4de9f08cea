#include "nsn/experiment/oracle.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>

#include "nsn/autodiff/gradcheck.hpp"
#include "nsn/objectives/losses.hpp"
#include "nsn/objectives/metrics.hpp"
#include "nsn/operators/dense_matrix.hpp"
#include "nsn/operators/landweber.hpp"
#include "nsn/operators/masked_fourier.hpp"
#include "nsn/operators/radon.hpp"
#include "nsn/recon/method.hpp"

namespace nsn::exp {

using ops::Vector;
using recon::MethodTag;
using recon::ReconMethod;

namespace {

Vector gaussian_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = normal(rng);
  return v;
}

// Forwards everything to `inner` but scales the adjoint by (1 + error).
class CorruptedAdjoint final : public ops::LinearMap {
 public:
  CorruptedAdjoint(std::shared_ptr<const ops::LinearMap> inner, double error)
      : LinearMap(inner->domain_shape(), inner->range_size()), inner_(std::move(inner)), error_(error) {}

  ops::OperatorKind kind() const noexcept override { return inner_->kind(); }
  bool has_pseudoinverse() const noexcept override { return inner_->has_pseudoinverse(); }
  nlohmann::json descriptor() const override { return inner_->descriptor(); }

 protected:
  void apply_impl(const Vector& x, Vector& y) const override { y = inner_->apply(x); }
  void adjoint_impl(const Vector& y, Vector& x) const override { x = (1.0 + error_) * inner_->adjoint(y); }
  void pseudoinverse_impl(const Vector& y, Vector& x) const override { x = inner_->pseudoinverse(y); }

 private:
  std::shared_ptr<const ops::LinearMap> inner_;
  double error_;
};

double dot_test(const ops::LinearMap& op, std::uint64_t seed, int pairs) {
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const Vector x = gaussian_vector(op.domain_size(), seed + 2 * k);
    const Vector y = gaussian_vector(op.range_size(), seed + 2 * k + 1);
    const Vector ax = op.apply(x);
    const Vector aty = op.adjoint(y);
    worst = std::max(worst, std::abs(ax.dot(y) - x.dot(aty)) / (x.norm() * aty.norm() + ax.norm() * y.norm()));
  }
  return worst;
}

// Line integrals by midpoint sampling along every ray.
Vector quadrature_radon(const ops::RadonGeometry& g, const Vector& image, int samples) {
  const int n = g.grid;
  const double h = 2.0 / n;
  const double dt = 4.0 / samples;
  Vector out = Vector::Zero(static_cast<Eigen::Index>(g.rays()));
  Eigen::Index row = 0;
  for (double angle : g.angles_deg) {
    const double phi = angle * std::numbers::pi / 180.0;
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    for (int b = 0; b < g.detector_bins; ++b, ++row) {
      const double offset = g.bin_center(b);
      double sum = 0.0;
      for (int k = 0; k < samples; ++k) {
        const double t = -2.0 + (k + 0.5) * dt;
        const double x = offset * c - t * s;
        const double y = offset * s + t * c;
        if (x <= -1.0 || x >= 1.0 || y <= -1.0 || y >= 1.0) continue;
        const int col = static_cast<int>((x + 1.0) / h);
        const int r = static_cast<int>((1.0 - y) / h);
        sum += image[r * n + col];
      }
      out[row] = sum * dt;
    }
  }
  return out;
}

template <typename T>
void randomize(ReconMethod<T>& method, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.3, 0.3);
  for (auto* p : method.parameters())
    for (auto& v : p->value.values()) v = static_cast<T>(uniform(rng));
}

std::vector<Vector> random_measurements(const ops::LinearMap& op, int count, std::uint64_t seed) {
  std::vector<Vector> ys;
  for (int i = 0; i < count; ++i) ys.push_back(op.apply(gaussian_vector(op.domain_size(), seed + i)));
  return ys;
}

std::string format_value(double v) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(3) << v;
  return out.str();
}

class Recorder {
 public:
  explicit Recorder(std::ostream& log) : log_(log) {}

  void add(int criterion, std::string name, double value, double tolerance) {
    const bool pass = std::isfinite(value) && value <= tolerance;
    log_ << "[" << criterion << "] " << (pass ? "PASS " : "FAIL ") << name << ": " << format_value(value)
         << " (tolerance " << format_value(tolerance) << ")\n";
    log_.flush();
    results_.push_back({criterion, std::move(name), value, tolerance, pass});
  }

  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  std::ostream& log_;
  std::vector<CheckResult> results_;
};

std::shared_ptr<ops::LimitedAngleRadonOp> factorized_radon(int grid, int angles,
                                                           const std::optional<std::filesystem::path>& cache) {
  auto op = std::make_shared<ops::LimitedAngleRadonOp>(ops::RadonGeometry::limited_angle(grid, angles, 120.0), cache);
  op->factorize(1e-3);
  return op;
}

void operator_checks(const OracleOptions& options, Recorder& rec) {
  const std::uint64_t seed = options.seed;
  auto fourier = std::make_shared<ops::MaskedFourierOp>(64, ops::MaskedFourierOp::make_mask(64, 0.25, 0.08, seed));
  rec.add(1, "adjoint dot-test MaskedFourier 64x64", dot_test(*fourier, seed + 10, 20), 1e-10);

  std::shared_ptr<const ops::LinearMap> radon =
      std::make_shared<ops::LimitedAngleRadonOp>(ops::RadonGeometry::limited_angle(64, 30, 120.0));
  std::string radon_name = "adjoint dot-test LimitedAngleRadon 64x64";
  if (options.inject_adjoint_fault) {
    radon = std::make_shared<CorruptedAdjoint>(radon, 1e-3);
    radon_name += " (corrupted adjoint)";
  }
  rec.add(1, radon_name, dot_test(*radon, seed + 20, 20), 1e-10);

  std::mt19937_64 rng(seed + 30);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(20, 30);
  for (auto& v : m.reshaped()) v = normal(rng);
  rec.add(1, "adjoint dot-test DenseMatrix 20x30", dot_test(ops::DenseMatrixOp(m), seed + 40, 20), 1e-10);

  const auto g = ops::RadonGeometry::limited_angle(8, 12, 180.0);
  ops::LimitedAngleRadonOp small(g);
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Vector x = gaussian_vector(small.domain_size(), seed + 50 + k).cwiseAbs();
    const Vector oracle = quadrature_radon(g, x, 200000);
    worst = std::max(worst, (small.apply(x) - oracle).norm() / oracle.norm());
  }
  rec.add(1, "Radon 8x8 apply vs fine-quadrature line integrals", worst, 1e-3);
}

void projector_checks(const OracleOptions& options, Recorder& rec) {
  const std::uint64_t seed = options.seed;
  const std::vector<std::shared_ptr<const ops::LinearMap>> operators = {
      std::make_shared<ops::MaskedFourierOp>(64, ops::MaskedFourierOp::make_mask(64, 0.25, 0.08, seed)),
      factorized_radon(32, 30, options.cache_dir)};
  for (const auto& op : operators) {
    const std::string kind = ops::to_string(op->kind());
    double idempotence = 0.0, annihilation = 0.0;
    for (int k = 0; k < 5; ++k) {
      const Vector x = gaussian_vector(op->domain_size(), seed + 100 + k);
      const Vector p = op->null_space_project(x);
      idempotence = std::max(idempotence, (op->null_space_project(p) - p).norm() / x.norm());
      annihilation = std::max(annihilation, op->project_retained_range(op->apply(p)).norm() / (op->opnorm() * x.norm()));
    }
    rec.add(2, "P0 idempotence " + kind, idempotence, 1e-8);
    rec.add(2, "A P0 = 0 on the retained range " + kind, annihilation, 1e-8);
  }

  std::mt19937_64 rng(seed + 200);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd left(6, 3), right(3, 4);
  for (auto& v : left.reshaped()) v = normal(rng);
  for (auto& v : right.reshaped()) v = normal(rng);
  const Eigen::MatrixXd a = left * right;
  ops::DenseMatrixOp dense(a, 1e-12);
  const Vector y = a * gaussian_vector(4, seed + 210);
  const Vector x0 = gaussian_vector(4, seed + 220);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const Vector oracle = x0 - svd.solve(a * x0 - y);
  const double norm = dense.opnorm();
  const Vector out = ops::landweber_project(dense, x0, y, {10000, 1.0 / (norm * norm)});
  rec.add(2, "Landweber (10000 steps) vs dense-SVD projection on 6x4", (out - oracle).norm() / oracle.norm(), 1e-6);
}

void method_checks(const OracleOptions& options, Recorder& rec) {
  const std::uint64_t seed = options.seed;
  auto fourier = std::make_shared<ops::MaskedFourierOp>(32, ops::MaskedFourierOp::make_mask(32, 0.25, 0.08, seed));
  auto radon = factorized_radon(32, 30, options.cache_dir);
  const recon::NetworkConfig net{2, 4};

  for (const auto& [op, tolerance] : {std::pair<std::shared_ptr<const ops::LinearMap>, double>{fourier, 1e-6},
                                      std::pair<std::shared_ptr<const ops::LinearMap>, double>{radon, 1e-5}}) {
    const auto ys = random_measurements(*op, 3, seed + 300);
    for (MethodTag tag :
         {MethodTag::NullSpace1, MethodTag::NullSpace2, MethodTag::NullSpace1Unc, MethodTag::NullSpace2Unc}) {
      ReconMethod<double> method(tag, op, net, seed + 310);
      randomize(method, seed + 320);
      const auto recs = method.to_vectors(method.reconstruct(ys).recon);
      double worst = 0.0;
      for (std::size_t b = 0; b < ys.size(); ++b) {
        worst = std::max(worst, op->kind() == ops::OperatorKind::MaskedFourier
                                    ? recon::data_consistency_gap(*op, recs[b], ys[b])
                                    : recon::retained_consistency_gap(*op, recs[b], ys[b]));
      }
      rec.add(3, "data consistency " + recon::to_string(tag) + " " + ops::to_string(op->kind()), worst, tolerance);
    }
  }

  {
    ReconMethod<double> null_space(MethodTag::NullSpace1, fourier, net, seed + 400);
    ReconMethod<double> residual(MethodTag::Residual1, fourier, net, seed + 400);
    randomize(null_space, seed + 410);
    const auto pn = null_space.parameters();
    const auto pr = residual.parameters();
    for (std::size_t i = 0; i < pn.size(); ++i) pr[i]->value = pn[i]->value;
    const auto ys = random_measurements(*fourier, 3, seed + 420);
    const auto ns = null_space.to_vectors(null_space.reconstruct(ys).recon);
    const auto res_out = residual.reconstruct(ys);
    const auto res = residual.to_vectors(res_out.recon);
    const auto xdag = residual.to_vectors(res_out.pseudoinverse);
    double worst = 0.0;
    for (std::size_t b = 0; b < ys.size(); ++b) {
      const Vector exact = res[b] - fourier->pseudoinverse(fourier->apply(res[b]) - fourier->apply(xdag[b]));
      worst = std::max(worst, (ns[b] - exact).norm() / exact.norm());
    }
    rec.add(4, "NullSpace1 vs projected Residual1 (MaskedFourier)", worst, 1e-8);
  }

  auto fourier8 = std::make_shared<ops::MaskedFourierOp>(8, ops::MaskedFourierOp::make_mask(8, 0.25, 0.08, seed));
  auto radon16 = factorized_radon(16, 12, std::nullopt);
  for (const auto& op : std::vector<std::shared_ptr<const ops::LinearMap>>{fourier8, radon16}) {
    for (MethodTag tag : {MethodTag::NullSpace2, MethodTag::NullSpace1Unc}) {
      ReconMethod<double> method(tag, op, net, seed + 500);
      randomize(method, seed + 510);
      const auto xdag = method.pseudoinverse(random_measurements(*op, 2, seed + 520));
      std::vector<Vector> truth_vectors;
      for (int b = 0; b < 2; ++b) truth_vectors.push_back(gaussian_vector(op->domain_size(), seed + 530 + b));
      const auto truth = method.to_batch(truth_vectors);
      auto params = method.parameters();
      const ad::LossBuilder loss = [&](ad::Tape<double>& tape) {
        const auto out = method.forward(tape, tape.input(xdag));
        if (out.log_scale) return obj::uncertainty_loss(tape, out.recon, *out.log_scale, tape.input(truth));
        return obj::mae_risk(tape, out.recon, tape.input(truth));
      };
      const auto report =
          ad::gradient_check(std::span<ad::Parameter<double>* const>(params), loss, {60, 1e-4, seed + 540});
      const std::string loss_name = recon::traits(tag).uncertainty ? "Laplace loss" : "MAE risk";
      const double value = report.sampled >= 50 ? report.max_relative_error : std::numeric_limits<double>::infinity();
      rec.add(5, "gradient check " + loss_name + " through " + recon::to_string(tag) + " " + ops::to_string(op->kind()) +
                     " (" + std::to_string(report.sampled) + " coordinates)",
              value, 1e-4);
    }
  }
}

void loss_and_metric_checks(const OracleOptions& options, Recorder& rec) {
  const ad::Shape shape{3, 1, 8, 8};
  ad::Tensor<double> recon(shape), truth(shape), rho(shape, 0.0);
  std::mt19937_64 rng(options.seed + 600);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : recon.values()) v = normal(rng);
  for (auto& v : truth.values()) v = normal(rng);
  const double n = static_cast<double>(shape.sample());
  const double laplace = obj::uncertainty_loss(recon, rho, truth).value;
  const double expected = obj::mae_risk(recon, truth).value + n * std::log(2.0);
  rec.add(6, "Laplace loss at rho = 0 minus (MAE risk + n log 2)", std::abs(laplace - expected) / std::abs(expected),
          1e-12);

  obj::Image x(32, 32);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (auto& v : x.reshaped()) v = uniform(rng);
  rec.add(9, "|ssim(x, x) - 1|", std::abs(obj::ssim(x, x, 1.0) - 1.0), 1e-12);
  rec.add(9, "|psnr(x + 0.1, x; peak 1) - 20 dB|", std::abs(obj::psnr(x + 0.1, x, 1.0) - 20.0), 1e-9);
}

}  // namespace

std::vector<CheckResult> run_oracle_checks(const OracleOptions& options, std::ostream& log) {
  Recorder rec(log);
  operator_checks(options, rec);
  projector_checks(options, rec);
  method_checks(options, rec);
  loss_and_metric_checks(options, rec);
  return rec.take();
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
}

}  // namespace nsn::exp
