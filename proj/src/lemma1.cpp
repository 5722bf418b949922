#include "hybridlab/lemma1.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "hybridlab/codebook.hpp"
#include "hybridlab/p2p_sim.hpp"
#include "hybridlab/parallel.hpp"

namespace hybridlab {

void Lemma1Config::validate() const {
  if (n < 1) throw InputError("lemma1: n must be >= 1");
  if (!(rate >= 0.0) || !(epsilon_prime > 0.0)) throw InputError("lemma1: need rate >= 0, eps' > 0");
  if (outer_trials < 1 || min_count < 1 || jobs < 1) throw InputError("lemma1: counts must be positive");
}

namespace {

constexpr std::int64_t kLemma1Block = 4096;

std::int64_t int_pow(int base, int exp) {
  std::int64_t v = 1;
  for (int i = 0; i < exp; ++i) v *= base;
  return v;
}

std::int64_t seq_index(std::span<const int> seq, int base) {
  std::int64_t v = 0;
  for (int x : seq) v = v * base + x;
  return v;
}

}  // namespace

Lemma1Report lemma1_check(const JointPmf& joint, const Lemma1Config& cfg) {
  cfg.validate();
  if (joint.rank() != 2) throw InputError("lemma1: joint must have axes (U, S)");
  const int nu = joint.dims()[0], ns = joint.dims()[1];
  const std::int64_t codewords = codeword_count(cfg.n, cfg.rate);
  if (codewords < 2) throw InputError("lemma1: the rate must give at least two codewords");

  // Dense tally over (u~, s, u); refuse tables beyond 2^24 entries.
  constexpr double kMaxLog2Cells = 24.0;
  if (cfg.n * (2.0 * std::log2(nu) + std::log2(ns)) > kMaxLog2Cells) {
    throw ResourceLimitError("lemma1: |U|^(2n) |S|^n exceeds the tally cap");
  }
  const std::int64_t useqs = int_pow(nu, cfg.n), sseqs = int_pow(ns, cfg.n);

  const std::array<int, 2> su{1, 0};
  const std::array<int, 1> u_axis{0}, s_axis{1};
  const TypicalityTester cover(joint.marginal(su), cfg.epsilon_prime, cfg.n);
  const Pmf p_u = joint.marginal(u_axis).to_pmf();
  const Pmf p_s = joint.marginal(s_axis).to_pmf();
  const Eigen::MatrixXi enc_map = Eigen::MatrixXi::Zero(nu, ns);

  // Trials run in fixed blocks, one stream per block, so the draws do not
  // depend on how blocks are spread over workers.
  const std::int64_t blocks = (cfg.outer_trials + kLemma1Block - 1) / kLemma1Block;
  const std::int64_t chunks = chunk_count(blocks, cfg.jobs);
  std::vector<std::vector<std::int64_t>> tallies(static_cast<std::size_t>(chunks));
  parallel_chunks(blocks, cfg.jobs, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
    auto& tally = tallies[static_cast<std::size_t>(c)];
    tally.assign(static_cast<std::size_t>(useqs * sseqs * useqs), 0);
    std::vector<int> s(static_cast<std::size_t>(cfg.n));
    for (std::int64_t block = b; block < e; ++block) {
      Rng rng(cfg.seed, StreamPurpose::kTrial, static_cast<std::uint64_t>(block));
      const std::int64_t end = std::min(cfg.outer_trials, (block + 1) * kLemma1Block);
      for (std::int64_t t = block * kLemma1Block; t < end; ++t) {
        for (int& v : s) v = rng.categorical(p_s.probs());
        const Codebook cb = Codebook::generate(cfg.n, cfg.rate, p_u, rng);
        if (encode_p2p(s, cb, cover, enc_map, rng).index != 0) continue;
        const std::int64_t cell = seq_index(cb[0], nu) * sseqs + seq_index(s, ns);
        ++tally[static_cast<std::size_t>(cell * useqs + seq_index(cb[1], nu))];
      }
    }
  });

  Lemma1Report r;
  r.n = cfg.n;
  r.codewords = codewords;
  r.outer_trials = cfg.outer_trials;
  std::vector<double> product(static_cast<std::size_t>(useqs));
  for (std::int64_t u = 0; u < useqs; ++u) {
    double p = 1.0;
    for (std::int64_t k = u, i = 0; i < cfg.n; ++i, k /= nu) p *= p_u[static_cast<int>(k % nu)];
    product[static_cast<std::size_t>(u)] = p;
  }
  for (std::int64_t cell = 0; cell < useqs * sseqs; ++cell) {
    Lemma1Cell lc;
    lc.u_tilde = cell / sseqs;
    lc.s = cell % sseqs;
    lc.counts.assign(static_cast<std::size_t>(useqs), 0);
    for (const auto& tally : tallies) {
      for (std::int64_t u = 0; u < useqs; ++u) {
        lc.counts[static_cast<std::size_t>(u)] += tally[static_cast<std::size_t>(cell * useqs + u)];
      }
    }
    for (std::int64_t v : lc.counts) lc.total += v;
    if (lc.total == 0) continue;
    r.accepted += lc.total;
    lc.ratios.resize(static_cast<std::size_t>(useqs));
    for (std::int64_t u = 0; u < useqs; ++u) {
      const auto i = static_cast<std::size_t>(u);
      // Zero-probability sequences are never drawn; score them as ratio 0.
      lc.ratios[i] = product[i] > 0.0
                         ? static_cast<double>(lc.counts[i]) / static_cast<double>(lc.total) / product[i]
                         : 0.0;
      lc.max_ratio = std::max(lc.max_ratio, lc.ratios[i]);
    }
    if (lc.total >= cfg.min_count) {
      ++r.scored_cells;
      r.max_ratio = std::max(r.max_ratio, lc.max_ratio);
    }
    r.cells.push_back(std::move(lc));
  }
  r.conclusive = r.scored_cells > 0;
  return r;
}

}  // namespace hybridlab
