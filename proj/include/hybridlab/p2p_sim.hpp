#pragma once

// Monte Carlo simulation of the random-codebook hybrid coding scheme over a
// point-to-point channel, with the error-event decomposition of its analysis.

#include <cstdint>
#include <span>
#include <vector>

#include "hybridlab/codebook.hpp"
#include "hybridlab/p2p_bounds.hpp"
#include "hybridlab/rng.hpp"

namespace hybridlab {

struct SimConfig {
  int n = 100;
  int trials = 100;
  double epsilon = 0.3;        // decoding slack
  double epsilon_prime = 0.2;  // encoding slack, must be < epsilon
  std::uint64_t seed = 20130611;
  std::int64_t max_codebook_symbols = kDefaultCodebookCap;
  int jobs = 1;
  bool keep_trials = false;  // retain per-trial outcomes in the report

  void validate() const;
};

/// Empirical frequency with a 95% normal-approximation half-width.
struct Proportion {
  std::int64_t count = 0;
  double p = 0.0;
  double half_width = 0.0;
};

Proportion make_proportion(std::int64_t count, std::int64_t trials);

struct EncodeResult {
  std::int64_t index = 0;  // 0-based
  std::int64_t hits = 0;   // codewords jointly typical with s^n
  std::vector<int> x;
};

/// Picks uniformly among codewords jointly typical with s^n under `cover`
/// (axes S, U), or uniformly among all codewords when none is. Only
/// `tie_break` supplies randomness.
EncodeResult encode_p2p(std::span<const int> s, const Codebook& cb,
                        const TypicalityTester& cover, const Eigen::MatrixXi& enc_map,
                        Rng& tie_break);

struct DecodeResult {
  std::int64_t index = 0;               // 0-based; 0 when not unique
  std::vector<std::int64_t> candidates;  // all typical indices
  std::vector<int> s_hat;
};

/// Unique joint-typicality decoding of (u^n(m), y^n) under `packing` (axes U, Y);
/// falls back to the first index when there is none or more than one.
DecodeResult decode_p2p(std::span<const int> y, const Codebook& cb,
                        const TypicalityTester& packing, const Eigen::MatrixXi& dec_map);

struct P2pTrial {
  std::int64_t trial = 0;
  std::uint64_t seed = 0;  // the trial's source stream seed
  bool e1 = false;         // no codeword covers s^n
  bool e2 = false;         // (S, U(M), Y) not typical
  bool e3 = false;         // another codeword is typical with y^n
  bool error = false;      // (S, U(M_hat), Y) not typical
  std::int64_t m = 0;
  std::int64_t m_hat = 0;
  double distortion = 0.0;
};

struct P2pReport {
  int n = 0;
  int trials = 0;
  std::int64_t codewords = 0;
  Proportion e1;
  Proportion e2_not_e1;
  Proportion e3;
  Proportion error;
  Proportion union_events;  // E1 or E2 or E3
  double mean_distortion = 0.0;
  double distortion_std_error = 0.0;
  double distortion_half_width = 0.0;
  double mean_distortion_no_error = 0.0;  // over trials without E; 0 when none
  std::int64_t no_error_trials = 0;
  std::vector<P2pTrial> per_trial;
};

/// Independent trials with fresh source, codebook and channel noise per trial,
/// each drawn from its own (seed, purpose, trial) stream.
P2pReport run_p2p(const Pmf& source, const ConditionalPmf& channel, const DistortionMeasure& d,
                  const HybridCodeSpec& spec, const SimConfig& cfg);

}  // namespace hybridlab
