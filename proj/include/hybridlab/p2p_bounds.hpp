#pragma once

// Point-to-point hybrid coding condition I(S;U) < I(U;Y) and its search.

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "hybridlab/bound_report.hpp"
#include "hybridlab/infotheory.hpp"

namespace hybridlab {

/// Auxiliary kernel p(u|s), symbol maps x(u,s) and s_hat(u,y), codebook rate.
struct HybridCodeSpec {
  ConditionalPmf aux_kernel;  // rows s, columns u
  Eigen::MatrixXi enc_map;    // [u][s] -> channel input
  Eigen::MatrixXi dec_map;    // [u][y] -> reconstruction
  double rate = 0.0;

  int aux_size() const { return aux_kernel.outputs(); }
  /// Throws InputError unless the tables are total and in range.
  void validate(int sources, int inputs, int outputs, int reconstructions) const;
};

/// p(s, u, x, y) with axes in that order.
JointPmf thm1_joint(const Pmf& source, const ConditionalPmf& channel, const HybridCodeSpec& spec);

/// Evaluates I(S;U) + margin < I(U;Y) and E d(S, s_hat(U,Y)). With |U| = 1
/// the scheme is uncoded transmission and is reported satisfied.
BoundReport check_thm1(const Pmf& source, const ConditionalPmf& channel,
                       const DistortionMeasure& d, const HybridCodeSpec& spec,
                       double margin = kDefaultMargin);

/// U = (X, S_hat) with X ~ p(x) independent of (S, S_hat) ~ p(s) p(s_hat|s).
/// The auxiliary index is u = x * |S_hat| + s_hat.
HybridCodeSpec separation_spec(const ConditionalPmf& test_channel, const Pmf& input,
                               int channel_outputs, double rate = 0.0);

/// Uncoded transmission: |U| = 1, x = x(s), s_hat = s_hat(y).
HybridCodeSpec uncoded_spec(std::span<const int> encoder, std::span<const int> decoder,
                            int sources);

struct Thm1SearchOptions {
  int aux_cap = 0;         // 0 selects |S| |X| + 2
  int grid_resolution = 12;  // kernel rows on the simplex grid with step 1/m
  double margin = kDefaultMargin;
  std::int64_t max_candidates = 2'000'000'000;
  int jobs = 1;
};

struct Thm1SearchResult {
  bool feasible = false;
  std::optional<HybridCodeSpec> spec;
  BoundReport report;        // check_thm1 on the returned spec
  double slack = 0.0;        // I(U;Y) - I(S;U)
  double distortion = 0.0;
  int aux_cap = 0;           // cardinality cap actually used
  std::int64_t candidates = 0;
};

/// Maximizes I(U;Y) - I(S;U) subject to E d <= target_D over |U| <= aux_cap,
/// kernels on the simplex grid and all encoder maps. The decoder is chosen
/// per (u, y) cell to minimize expected distortion, which is exact because
/// neither information term depends on it. Ties go to the smallest
/// (|U|, kernel index, encoder index).
Thm1SearchResult thm1_optimize(const Pmf& source, const ConditionalPmf& channel,
                               const DistortionMeasure& d, double target_D,
                               const Thm1SearchOptions& opts = {});

/// Smallest E d over the same search space among specs that satisfy the
/// condition (|U| = 1 always does).
Thm1SearchResult thm1_min_distortion(const Pmf& source, const ConditionalPmf& channel,
                                     const DistortionMeasure& d,
                                     const Thm1SearchOptions& opts = {});

/// Largest D with R(D) >= C, i.e. the separation boundary, by bisection on
/// the rate-distortion function.
double separation_boundary(const Pmf& source, const ConditionalPmf& channel,
                           const DistortionMeasure& d, double tol = 1e-9);

}  // namespace hybridlab
