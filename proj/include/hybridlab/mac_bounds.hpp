#pragma once

// Hybrid coding over a two-sender multiple access channel.

#include <cstdint>
#include <optional>
#include <vector>

#include "hybridlab/bound_report.hpp"
#include "hybridlab/infotheory.hpp"

namespace hybridlab {

/// p(y | x1, x2) with kernel rows indexed x1 * |X2| + x2.
struct MacChannel {
  ConditionalPmf kernel;
  int x1_size = 0;
  int x2_size = 0;

  void validate() const;
  /// Y = (X1, X2), output index x1 * |X2| + x2.
  static MacChannel noiseless(int x1_size, int x2_size);
};

/// Time sharing p(q), per-sender kernels p(u_j | s_j, q) and the four maps.
///
/// Table layouts (last index fastest):
///   aux_j rows         (q, s_j)
///   enc_j              (q, u_j, s_j)  -> x_j
///   dec_j              (q, u1, u2, y) -> s_hat_j
struct MacHybridSpec {
  Pmf time_sharing{1.0};
  ConditionalPmf aux1;
  ConditionalPmf aux2;
  std::vector<int> enc1;
  std::vector<int> enc2;
  std::vector<int> dec1;
  std::vector<int> dec2;
  double rate1 = 0.0;
  double rate2 = 0.0;

  int q_size() const { return time_sharing.size(); }
  int u1_size() const { return aux1.outputs(); }
  int u2_size() const { return aux2.outputs(); }
};

/// Axes of the joint built for the MAC condition.
enum MacAxis : int { kMacQ = 0, kMacS1, kMacS2, kMacU1, kMacU2, kMacX1, kMacX2, kMacY };

/// p(q, s1, s2, u1, u2, x1, x2, y).
JointPmf thm2_joint(const JointPmf& sources, const MacChannel& mac, const MacHybridSpec& spec);

/// The three MAC conditions and both expected distortions.
BoundReport thm2_region_check(const JointPmf& sources, const MacChannel& mac,
                              const DistortionMeasure& d1, const DistortionMeasure& d2,
                              const MacHybridSpec& spec, double margin = kDefaultMargin);

/// Channel-input kernels p(x_j | s_j, q), rows indexed (q, s_j).
struct LosslessInputs {
  Pmf time_sharing{1.0};
  ConditionalPmf input1;
  ConditionalPmf input2;
};

/// U_j = (X_j, S_j), u_j = x_j * |S_j| + s_j; decoders return the s_j part.
MacHybridSpec lossless_substitution(const JointPmf& sources, const MacChannel& mac,
                                    const LosslessInputs& in);

/// H(S1|S2) < I(X1;Y|X2,S2,Q), H(S2|S1) < I(X2;Y|X1,S1,Q),
/// H(S1,S2) < I(X1,X2;Y|Q), evaluated on p(q) p(s1,s2) p(x1|s1,q) p(x2|s2,q) p(y|x1,x2).
BoundReport lossless_mac_check(const JointPmf& sources, const MacChannel& mac,
                               const LosslessInputs& in, double margin = kDefaultMargin);

/// Distributed lossy compression: p(q), p(u~_j | s_j, q) and decoders
/// s_hat_j(q, u~1, u~2), layout (q, u~1, u~2).
struct DistributedCode {
  Pmf time_sharing{1.0};
  ConditionalPmf aux1;
  ConditionalPmf aux2;
  std::vector<int> dec1;
  std::vector<int> dec2;
};

/// U_j = (X_j, U~_j) over the noiseless MAC with X_j uniform on x_j_size
/// symbols; u_j = x_j * |U~_j| + u~_j. Rates are log2 of the input sizes.
MacHybridSpec distributed_substitution(const JointPmf& sources, const DistributedCode& code,
                                       int x1_size, int x2_size);

/// R1 > I(S1;U1|U2,Q), R2 > I(S2;U2|U1,Q), R1 + R2 > I(S1,S2;U1,U2|Q) and
/// both expected distortions.
BoundReport distributed_lossy_check(const JointPmf& sources, const DistributedCode& code,
                                    const DistortionMeasure& d1, const DistortionMeasure& d2,
                                    double rate1, double rate2, double margin = kDefaultMargin);

struct Thm2SearchOptions {
  int aux_cap = 2;
  int grid_resolution = 4;
  double margin = kDefaultMargin;
  std::int64_t max_candidates = 5'000'000;
  int jobs = 1;
};

struct Thm2SearchResult {
  bool feasible = false;
  std::optional<MacHybridSpec> spec;
  BoundReport report;
  double min_slack = 0.0;
  std::int64_t candidates = 0;
  int aux_cap = 0;
};

/// Maximizes the smallest slack of the three conditions subject to
/// E d_j <= target_j, with |Q| = 1, |U_j| <= aux_cap, kernels on the simplex
/// grid and all encoder maps. Decoders are per-cell Bayes choices.
Thm2SearchResult thm2_optimize(const JointPmf& sources, const MacChannel& mac,
                               const DistortionMeasure& d1, const DistortionMeasure& d2,
                               double target1, double target2, const Thm2SearchOptions& opts = {});

}  // namespace hybridlab
