#include "nsn/objectives/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nsn/util/errors.hpp"

namespace nsn::obj {

Correlation pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("pearson: sample sizes differ");
  if (a.size() < 3) throw StatisticsError("pearson: need at least 3 samples, got " + std::to_string(a.size()));
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(a) || constant(b)) return {0.0, true};
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) return {0.0, true};
  return {sab / std::sqrt(saa * sbb), false};
}

UncertaintyErrorReport uncertainty_error_report(std::vector<UncertaintyErrorRow> rows) {
  if (rows.size() < 3) {
    throw StatisticsError("uncertainty_error_report: need at least 3 images, got " + std::to_string(rows.size()));
  }
  std::vector<double> residual, sigma;
  for (const auto& row : rows) {
    residual.push_back(row.mean_abs_residual);
    sigma.push_back(row.mean_sigma);
  }
  UncertaintyErrorReport report;
  report.correlation = pearson(residual, sigma);
  report.rows = std::move(rows);
  return report;
}

}  // namespace nsn::obj
