#pragma once

// Random i.i.d. codebooks for the operational simulators.

#include <cstdint>
#include <span>
#include <vector>

#include "hybridlab/infotheory.hpp"
#include "hybridlab/rng.hpp"

namespace hybridlab {

/// Default cap on codeword count times block length.
inline constexpr std::int64_t kDefaultCodebookCap = std::int64_t{1} << 22;

/// floor(2^(nR)); throws ResourceLimitError when count * n exceeds `cap`.
std::int64_t codeword_count(int n, double rate, std::int64_t cap = kDefaultCodebookCap);

/// floor(2^(nR)) codewords of length n, symbols i.i.d. from `pmf`, drawn from a
/// generator seeded with `seed` in codeword-major order.
class Codebook {
 public:
  static Codebook generate(int n, double rate, const Pmf& pmf, std::uint64_t seed,
                           std::int64_t cap = kDefaultCodebookCap);
  /// Same layout, drawing from a caller-owned stream; seed() reports 0.
  static Codebook generate(int n, double rate, const Pmf& pmf, Rng& rng,
                           std::int64_t cap = kDefaultCodebookCap);

  int n() const { return n_; }
  double rate() const { return rate_; }
  int alphabet_size() const { return alphabet_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t size() const { return size_; }
  std::span<const int> operator[](std::int64_t m) const {
    return {symbols_.data() + m * n_, static_cast<std::size_t>(n_)};
  }

 private:
  int n_ = 0;
  double rate_ = 0.0;
  int alphabet_ = 1;
  std::uint64_t seed_ = 0;
  std::int64_t size_ = 0;
  std::vector<int> symbols_;
};

}  // namespace hybridlab
