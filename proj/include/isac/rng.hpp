#pragma once

#include "isac/common.hpp"

#include <cstdint>
#include <random>

namespace isac {

/// Named random substreams. Each simulation component draws from its own
/// generator so that two schemes run with the same seed see identical
/// randomness in the components they share.
enum class Stream : std::uint32_t {
  Payload = 1,
  CommNoise = 2,
  RadarNoise = 3,
  Pilots = 4,
  Measurement = 5,
  Process = 6,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Rng(std::uint64_t seed, std::uint64_t trial, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
                      static_cast<std::uint32_t>(stream)};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double gaussian(double stddev = 1.0) { return std::normal_distribution<double>(0.0, stddev)(engine_); }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  cd complex_gaussian(double variance) {
    if (variance <= 0.0) return {};
    const double s = std::sqrt(variance / 2.0);
    const double re = gaussian(s);
    const double im = gaussian(s);
    return {re, im};
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace isac
