#pragma once

// Deterministic random number utilities.
//
// All randomness in the library flows through SplitMix64 (Steele, Lea &
// Flood's public-domain mixing generator).  It is fast, stateless beyond a
// single 64-bit word, fully portable, and trivially splittable: independent
// child streams are derived by hashing a (seed, index) pair, so the k-th
// scenario of a study draws the same numbers no matter how many scenarios run
// before it or on which thread.
//
// Uniform doubles are built from the top 53 bits of the raw output and
// normals from an explicit Box-Muller transform.  The standard-library
// distributions are deliberately avoided because their output is
// implementation-defined, which would break byte-identical reproducibility.

#include <cmath>
#include <cstdint>

namespace pcpg {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Standard normal via Box-Muller.  Exactly two uniforms are consumed per
  // call, so the stream position is a pure function of the call count.
  double normal() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;  // guard the log singularity
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Seed of the child stream `index` of a parent seed.  One extra mixing
  // round keeps consecutive indices statistically independent.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (0x9E3779B97F4A7C15ull * (index + 1)));
    return g.next_u64();
  }

  SplitMix64 split(std::uint64_t index) const { return SplitMix64(derive(state_, index)); }

 private:
  std::uint64_t state_;
};

}  // namespace pcpg
