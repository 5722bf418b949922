#include "hybridlab/codebook.hpp"

#include <cmath>
#include <string>

namespace hybridlab {

std::int64_t codeword_count(int n, double rate, std::int64_t cap) {
  if (n < 1) throw InputError("codebook: block length must be >= 1");
  if (!(rate >= 0.0)) throw InputError("codebook: rate must be >= 0");
  const double bits = n * rate;
  // 2^(nR) * n <= cap needs nR < log2(cap); test before forming the power.
  if (bits >= std::log2(static_cast<double>(cap)) + 1.0) {
    throw ResourceLimitError("codebook: 2^(nR) with nR=" + std::to_string(bits) +
                             " exceeds the memory cap");
  }
  // Tolerance so that integral nR is not lost to round-off in n * R.
  const auto count = static_cast<std::int64_t>(std::floor(std::exp2(bits) + 1e-9));
  if (count > cap / n) {
    throw ResourceLimitError("codebook: " + std::to_string(count) + " codewords of length " +
                             std::to_string(n) + " exceed the cap of " + std::to_string(cap) +
                             " symbols");
  }
  return count;
}

Codebook Codebook::generate(int n, double rate, const Pmf& pmf, Rng& rng, std::int64_t cap) {
  Codebook cb;
  cb.n_ = n;
  cb.rate_ = rate;
  cb.alphabet_ = pmf.size();
  cb.size_ = codeword_count(n, rate, cap);
  cb.symbols_.resize(static_cast<std::size_t>(cb.size_ * n));
  for (int& sym : cb.symbols_) sym = rng.categorical(pmf.probs());
  return cb;
}

Codebook Codebook::generate(int n, double rate, const Pmf& pmf, std::uint64_t seed,
                            std::int64_t cap) {
  Rng rng(seed);
  Codebook cb = generate(n, rate, pmf, rng, cap);
  cb.seed_ = seed;
  return cb;
}

}  // namespace hybridlab
