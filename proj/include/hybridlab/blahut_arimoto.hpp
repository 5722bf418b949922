#pragma once

#include <Eigen/Dense>

#include "hybridlab/infotheory.hpp"

namespace hybridlab {

struct BlahutArimotoOptions {
  double tolerance = 1e-9;  // bits, on the upper/lower bound gap
  int max_iterations = 10'000;
};

struct BlahutArimotoResult {
  double value = 0.0;          // bits
  double gap = 0.0;            // certified upper - lower bound at exit, bits
  int iterations = 0;
  bool converged = false;      // false means the iteration cap was hit
  Eigen::VectorXd distribution;  // capacity: optimal input pmf; R(D): output pmf
  Eigen::MatrixXd test_channel;  // R(D) only: p(s_hat | s)
  double distortion = 0.0;     // R(D) only: distortion of the returned test channel
};

/// C = max_{p(x)} I(X;Y).
BlahutArimotoResult capacity(const ConditionalPmf& channel, BlahutArimotoOptions opts = {});

/// R(D) = min I(S; S_hat) subject to E d(S, S_hat) <= D.
/// Throws InputError when D is below the minimum achievable distortion.
BlahutArimotoResult rd_function(const Pmf& source, const DistortionMeasure& d, double D,
                                BlahutArimotoOptions opts = {});

/// sum_s p(s) min_shat d(s, shat).
double min_distortion(const Pmf& source, const DistortionMeasure& d);
/// min_shat sum_s p(s) d(s, shat): the distortion reachable at zero rate.
double zero_rate_distortion(const Pmf& source, const DistortionMeasure& d);

}  // namespace hybridlab
