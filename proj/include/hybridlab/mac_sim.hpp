#pragma once

// Monte Carlo simulation of hybrid coding over a two-sender multiple access
// channel with a joint-typicality pair decoder.

#include <array>
#include <cstdint>
#include <vector>

#include "hybridlab/mac_bounds.hpp"
#include "hybridlab/p2p_sim.hpp"

namespace hybridlab {

struct MacTrial {
  std::int64_t trial = 0;
  std::uint64_t seed = 0;
  // E1, E2: sender j finds no covering codeword.
  // E3: (S1, S2, U1(M1), U2(M2), Y) not typical.
  // E4: (U1(m1), U2(m2), Y) typical for some m1 != M1, m2 != M2.
  // E5: (U1(m1), U2(M2), Y) typical for some m1 != M1.
  // E6: (U1(M1), U2(m2), Y) typical for some m2 != M2.
  std::array<bool, 6> events{};
  bool error = false;  // (S1, S2, U1(M1_hat), U2(M2_hat), Y) not typical
  std::int64_t m1 = 0, m2 = 0, m1_hat = 0, m2_hat = 0;
  double distortion1 = 0.0;
  double distortion2 = 0.0;
};

struct MacReport {
  int n = 0;
  int trials = 0;
  std::int64_t codewords1 = 0;
  std::int64_t codewords2 = 0;
  std::array<Proportion, 6> events;
  Proportion e3_clean;  // E3 without E1 or E2
  Proportion error;
  Proportion union_events;
  double mean_distortion1 = 0.0;
  double mean_distortion2 = 0.0;
  double distortion1_half_width = 0.0;
  double distortion2_half_width = 0.0;
  std::vector<MacTrial> per_trial;
};

/// Two independent codebooks at rates spec.rate1, spec.rate2, per-sender
/// covering encoders and an exhaustive search over all index pairs. When the
/// typical pair is not unique the decoder returns the first pair (0, 0).
/// Only |Q| = 1 is simulated.
MacReport run_mac(const JointPmf& sources, const MacChannel& mac, const DistortionMeasure& d1,
                  const DistortionMeasure& d2, const MacHybridSpec& spec, const SimConfig& cfg);

}  // namespace hybridlab
