#pragma once

// Empirical check that, conditioned on the encoder choosing index 1, a
// different codeword is distributed close to the i.i.d. generation pmf.

#include <cstdint>
#include <vector>

#include "hybridlab/infotheory.hpp"

namespace hybridlab {

struct Lemma1Config {
  int n = 4;
  double rate = 0.5;
  double epsilon_prime = 0.25;
  std::int64_t outer_trials = 100'000;
  std::int64_t min_count = 1000;  // cells with fewer accepted samples are not scored
  std::uint64_t seed = 20130611;
  int jobs = 1;

  void validate() const;
};

/// One conditioning cell (u~^n, s^n). Sequences are indexed base |alphabet|
/// with position 0 most significant.
struct Lemma1Cell {
  std::int64_t u_tilde = 0;
  std::int64_t s = 0;
  std::int64_t total = 0;             // accepted trials in this cell
  std::vector<std::int64_t> counts;   // by u^n index of the second codeword
  std::vector<double> ratios;         // (count / total) / prod p_U(u_i)
  double max_ratio = 0.0;
};

struct Lemma1Report {
  int n = 0;
  std::int64_t codewords = 0;
  std::int64_t outer_trials = 0;
  std::int64_t accepted = 0;  // trials with M = 1
  std::int64_t scored_cells = 0;
  double max_ratio = 0.0;     // over scored cells; 0 when none
  bool conclusive = false;    // at least one cell reached min_count
  std::vector<Lemma1Cell> cells;  // every cell with a sample, by (u~, s)
};

/// Draws (S^n, codebook), runs the covering index selection, keeps trials
/// with M = 1 (rejection) and tallies U^n(2) per (U^n(1), S^n) cell.
/// `joint` has axes (U, S). Rates giving fewer than two codewords are rejected.
Lemma1Report lemma1_check(const JointPmf& joint, const Lemma1Config& cfg);

}  // namespace hybridlab
