#pragma once

#include <cstdint>
#include <vector>

#include "nsn/operators/linear_map.hpp"

namespace nsn::ops {

// A = S F on an n x n complex image stored as two real channels
// (real, imaginary). F is the unitary 2-D DFT and S keeps whole k-space
// rows (phase-encoding lines). Measurements hold, for every retained line
// in ascending order and every column, the interleaved pair (re, im).
class MaskedFourierOp final : public LinearMap {
 public:
  MaskedFourierOp(int grid, std::vector<int> lines);

  // Lines in unshifted FFT order. The lines closest to DC covering
  // `center_fraction` of the grid are always kept, the rest are drawn
  // uniformly until `kept_fraction` of all lines are retained.
  static std::vector<int> make_mask(int grid, double kept_fraction, double center_fraction,
                                    std::uint64_t seed);
  static std::vector<int> full_mask(int grid);

  OperatorKind kind() const noexcept override { return OperatorKind::MaskedFourier; }
  bool has_pseudoinverse() const noexcept override { return true; }
  nlohmann::json descriptor() const override;

  int grid() const noexcept { return grid_; }
  const std::vector<int>& lines() const noexcept { return lines_; }
  double kept_fraction() const noexcept { return static_cast<double>(lines_.size()) / grid_; }

 protected:
  void apply_impl(const Vector& x, Vector& y) const override;
  void adjoint_impl(const Vector& y, Vector& x) const override;
  void pseudoinverse_impl(const Vector& y, Vector& x) const override;
  void null_space_impl(const Vector& x, Vector& out) const override;

 private:
  int grid_;
  std::vector<int> lines_;
  std::vector<bool> keep_;
};

}  // namespace nsn::ops
