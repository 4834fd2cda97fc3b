// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "cogmimo/types.hpp"

namespace cogmimo {

/// SplitMix64 finalizer, used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Random stream for one pulse. Pulse m of a run seeded with `seed` always
/// uses substream m, so pulses can be generated in any order.
class PulseRng {
 public:
  PulseRng(std::uint64_t seed, std::uint64_t pulse_index)
      : engine_(mix64(mix64(seed) ^ mix64(pulse_index + 0x632be59bd9b4e019ULL))) {}

  /// Circular complex Gaussian with E|x|^2 = variance.
  cdouble complex_normal(double variance) {
    if (variance <= 0.0) return {0.0, 0.0};
    const double sd = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {sd * re, sd * im};
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace cogmimo
