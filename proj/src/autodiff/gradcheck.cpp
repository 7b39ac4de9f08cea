#include "nsn/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nsn/util/errors.hpp"

namespace nsn::ad {

namespace {

double evaluate(const LossBuilder& loss) {
  Tape<double> tape(false);
  return tape.value(loss(tape))[0];
}

}  // namespace

GradCheckReport gradient_check(std::span<Parameter<double>* const> params, const LossBuilder& loss,
                               const GradCheckOptions& options) {
  if (params.empty()) throw std::invalid_argument("gradient_check: no parameters");
  for (auto* p : params) p->zero_grad();
  {
    Tape<double> tape;
    tape.backward(loss(tape));
  }
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (auto* p : params) {
    offsets.push_back(total);
    total += p->value.size();
  }

  double largest = 0.0;
  for (auto* p : params)
    for (double g : p->grad.values()) largest = std::max(largest, std::abs(g));
  const double denominator_floor = std::max(options.relative_floor * largest, 1e-300);

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  GradCheckReport report;
  const int max_attempts = 20 * options.samples;
  for (int attempt = 0; attempt < max_attempts && report.sampled < options.samples; ++attempt) {
    std::size_t flat = pick(rng);
    std::size_t which = 0;
    while (which + 1 < params.size() && offsets[which + 1] <= flat) ++which;
    Parameter<double>& p = *params[which];
    const std::size_t k = flat - offsets[which];

    const double original = p.value[k];
    const double center = evaluate(loss);
    p.value[k] = original + options.step;
    const double plus = evaluate(loss);
    p.value[k] = original - options.step;
    const double minus = evaluate(loss);
    p.value[k] = original;

    const double forward = (plus - center) / options.step;
    const double backward = (center - minus) / options.step;
    const double scale = std::max({std::abs(forward), std::abs(backward), 1e-12});
    if (std::abs(forward - backward) > options.kink_tolerance * scale) {
      ++report.skipped_kinks;
      continue;
    }
    const double fd = (plus - minus) / (2.0 * options.step);
    const double analytic = p.grad[k];
    const double err = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), denominator_floor});
    report.max_relative_error = std::max(report.max_relative_error, err);
    ++report.sampled;
  }
  for (auto* p : params) p->zero_grad();
  return report;
}

}  // namespace nsn::ad
