#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace nsn::exp {

// One invariant with its measured value and tolerance. A check passes when
// value <= tolerance.
struct CheckResult {
  int criterion = 0;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct OracleOptions {
  std::uint64_t seed = 0;
  // Cache for the Radon factorization used by the projector checks.
  std::optional<std::filesystem::path> cache_dir;
  // Wraps the Radon operator with a deliberately wrong adjoint so the
  // dot-test must fail.
  bool inject_adjoint_fault = false;
};

// Operator, projector, data-consistency, equivalence, gradient, loss and
// metric invariants. Prints one line per check to `log`.
std::vector<CheckResult> run_oracle_checks(const OracleOptions& options, std::ostream& log);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace nsn::exp
