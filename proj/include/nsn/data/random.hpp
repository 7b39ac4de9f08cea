#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace nsn::data {

// Portable random stream: the raw mt19937_64 sequence is fixed by the
// standard, and the conversions below are spelled out so that every
// generated artifact is identical across standard libraries.
class Stream {
 public:
  // Seeded from (seed, index) through std::seed_seq.
  Stream(std::uint64_t seed, std::uint64_t index);

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [lo, hi].
  int integer(int lo, int hi);
  bool bernoulli(double p) { return uniform() < p; }
  // Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace nsn::data
