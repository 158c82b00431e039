#pragma once

#include <cmath>
#include <cstdint>

namespace hil {

/// SplitMix64 pseudo-random stream. Chosen over std facilities because the
/// exact output sequence is part of the model reproducibility contract:
/// step   s += 0x9E3779B97F4A7C15
/// mix    z = s; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
///        z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31)
/// uniform(): (next() >> 11) * 2^-53 in [0, 1)
/// gaussian(): Box-Muller on two uniforms, cosine branch only.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal deviate; consumes exactly two uniforms.
  double gaussian() {
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace hil
