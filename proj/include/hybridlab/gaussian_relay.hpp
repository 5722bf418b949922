#pragma once

// Closed-form rate bounds for the Gaussian two-way relay channel
//   Y1 = g13 X3 + Z1,  Y2 = g23 X3 + Z2,  Y3 = g31 X1 + g32 X2 + Z3
// with unit-variance noise and received SNRs S_jk = g_jk^2 P.
//
// sigma2 may be +infinity; every formula is then evaluated as its limit.

#include <cstdint>
#include <string>
#include <vector>

#include "hybridlab/search.hpp"

namespace hybridlab {

/// C(x) = 1/2 log2(1 + x). Throws InputError for x < 0.
double gauss_c(double x);

struct GaussianTwrcParams {
  double s13 = 0.0;
  double s23 = 0.0;
  double s31 = 0.0;
  double s32 = 0.0;

  /// SNRs from amplitude gains and power.
  static GaussianTwrcParams from_gains(double power, double g13, double g23, double g31,
                                       double g32);
  /// Nodes 1 and 2 at unit distance, relay at distance r from node 1, gains r^(-exp/2).
  static GaussianTwrcParams line_network(double power, double r, double path_loss_exponent = 3.0);
  void validate() const;
};

struct SchemeParams {
  double alpha = 0.0;
  double beta = 0.0;
  double sigma2 = 1.0;

  void validate() const;  // alpha, beta in [0,1], alpha + beta <= 1, sigma2 > 0
};

enum class Scheme { kNnc, kAf, kHcSpecial, kHcGeneral, kCutset };

const char* scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

struct RatePoint {
  double r1 = 0.0;
  double r2 = 0.0;
  Scheme scheme = Scheme::kNnc;
  int binding1 = 0;  // index of the smaller R1 term
  int binding2 = 0;
  bool clamped = false;  // a min-term was negative and reported as 0

  double sum() const { return r1 + r2; }
};

struct HcGeneralOptions {
  /// Use beta instead of (1 - alpha) in the second numerator of each rate.
  bool beta_in_numerator = false;
};

RatePoint hc_general_rates(const GaussianTwrcParams& ch, const SchemeParams& sp,
                           const HcGeneralOptions& opts = {});
RatePoint nnc_rates(const GaussianTwrcParams& ch, double sigma2);
RatePoint af_rates(const GaussianTwrcParams& ch);
RatePoint hc_special_rates(const GaussianTwrcParams& ch, double sigma2);
/// Two-cut reference: R1 <= min(C(S31), C(S23)), R2 <= min(C(S32), C(S13)).
RatePoint cutset_rates(const GaussianTwrcParams& ch);

struct OptimizedScheme {
  Scheme scheme = Scheme::kNnc;
  SchemeParams params;
  RatePoint rates;
  double sum_rate = 0.0;
};

/// Maximizes R1 + R2 over the free parameters of the scheme: sigma2 on a
/// log grid refined by golden section, (alpha, beta) on a triangular grid
/// refined by coordinate descent. AF and cutset have no free parameters.
OptimizedScheme optimize_scheme(const GaussianTwrcParams& ch, Scheme scheme,
                                const SearchConfig& cfg = {}, const HcGeneralOptions& opts = {});

struct Fig8Row {
  double r = 0.0;
  double cutset = 0.0;
  double af = 0.0;
  double nnc = 0.0;
  double hc = 0.0;  // optimized hc_special sum rate
};

/// Optimized sum rates on the line network for each r in (0, 1).
std::vector<Fig8Row> fig8_sweep(double power, const std::vector<double>& r_grid,
                                double path_loss_exponent = 3.0, const SearchConfig& cfg = {});

/// "r,R_CS,R_AF,R_NNC,R_HC" with six decimals.
std::string fig8_csv(const std::vector<Fig8Row>& rows);

}  // namespace hybridlab
