#pragma once

// Counter-based seed splitting.
//
// Every random stream is identified by (root seed, purpose, trial index), so a
// trial draws the same numbers no matter how many trials run or which worker
// runs it.

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace hybridlab {

enum class StreamPurpose : std::uint64_t {
  kCodebook = 1,
  kSource = 2,
  kChannel = 3,
  kTieBreak = 4,
  kCodebook2 = 5,
  kTieBreak2 = 6,
  kRestart = 7,
  kTrial = 8,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, StreamPurpose purpose,
                                    std::uint64_t index) {
  return mix64(mix64(root ^ mix64(static_cast<std::uint64_t>(purpose))) + index);
}

/// mt19937_64 with portable bounded-integer and unit-interval draws (the
/// std distributions are implementation-defined, which would break
/// cross-toolchain reproducibility).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t root, StreamPurpose purpose, std::uint64_t index)
      : engine_(derive_seed(root, purpose, index)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

  /// Inverse-CDF draw from a probability vector.
  template <typename Derived>
  int categorical(const Eigen::DenseBase<Derived>& probs) {
    const double u = uniform();
    double acc = 0.0;
    const Eigen::Index last = probs.size() - 1;
    for (Eigen::Index i = 0; i < last; ++i) {
      acc += probs.derived().coeff(i);
      if (u < acc) return static_cast<int>(i);
    }
    // Round-off: return the last symbol with positive mass.
    for (Eigen::Index i = last; i > 0; --i) {
      if (probs.derived().coeff(i) > 0.0) return static_cast<int>(i);
    }
    return 0;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hybridlab
