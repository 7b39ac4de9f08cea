#pragma once

#include <span>
#include <vector>

namespace nsn::obj {

struct Correlation {
  double r = 0.0;
  // True when either variable has zero variance; r is then reported as 0.
  bool degenerate = false;
};

// Pearson correlation of two equally long samples (at least 3 entries).
Correlation pearson(std::span<const double> a, std::span<const double> b);

struct UncertaintyErrorRow {
  double mean_abs_residual = 0.0;
  double mean_sigma = 0.0;
};

struct UncertaintyErrorReport {
  std::vector<UncertaintyErrorRow> rows;
  Correlation correlation;
};

UncertaintyErrorReport uncertainty_error_report(std::vector<UncertaintyErrorRow> rows);

}  // namespace nsn::obj
