// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mixmc {

/// Portable seeded random source.
///
/// The bit stream comes from std::mt19937_64, whose output sequence is fixed
/// by the C++ standard. The standard library distributions are not portable
/// across implementations, so every derived draw is computed here from raw
/// engine output. Results are therefore identical on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Standard exponential variate.
  double exponential();

  // Index drawn with probability proportional to weights (non-negative, not all zero).
  std::size_t categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mixmc
