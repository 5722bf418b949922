#include "hybridlab/blahut_arimoto.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace hybridlab {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// One fixed-slope solve of min_Q I(S;S_hat) + beta E d'(S,S_hat), where the
// weight matrix is A = exp(-beta d') (or the zero-excess indicator when
// beta is infinite). All internal quantities are in nats.
struct SlopeSolve {
  Eigen::VectorXd q;     // output pmf
  Eigen::MatrixXd Q;     // test channel, rows s
  double rate = 0.0;     // I(p, Q), nats
  double distortion = 0.0;  // E d' under Q
  double gap = 0.0;      // nats
  int iterations = 0;
  bool converged = false;
};

SlopeSolve solve_slope(const Eigen::VectorXd& p, const Eigen::MatrixXd& excess,
                       double beta, Eigen::VectorXd q, double tol_nats, int max_iter) {
  const Eigen::Index ns = excess.rows();
  const Eigen::Index nr = excess.cols();
  Eigen::MatrixXd A(ns, nr);
  if (std::isinf(beta)) {
    A = (excess.array() <= 1e-12).cast<double>();
  } else {
    A = (-beta * excess.array()).exp();
  }

  SlopeSolve out;
  Eigen::VectorXd c(ns);
  Eigen::VectorXd lambda(nr);
  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    c = A * q;
    lambda = A.transpose() * p.cwiseQuotient(c);
    // Blahut's bounds: the current test channel has rate I_up at distortion D_q,
    // and R(D_q) >= beta D_q - sum p log c - log max lambda. Both share the
    // beta D_q term, so the gap reduces to the expression below.
    double upper_minus_common = 0.0;  // I(Q) - (beta D_q - sum p log c)
    {
      // I(Q) with Q = q A / c: sum_s p sum_shat Q log(Q / q_out), q_out = q .* lambda
      double i_q = 0.0;
      double dq = 0.0;
      for (Eigen::Index s = 0; s < ns; ++s) {
        for (Eigen::Index r = 0; r < nr; ++r) {
          const double qr = q[r] * A(s, r) / c[s];
          if (qr <= 0.0) continue;
          i_q += p[s] * qr * std::log(qr / (q[r] * lambda[r]));
          dq += p[s] * qr * excess(s, r);
        }
      }
      double common = -(p.array() * c.array().log()).sum();
      if (!std::isinf(beta)) common -= beta * dq;
      upper_minus_common = i_q - common;
      out.rate = i_q;
      out.distortion = dq;
    }
    const double log_max_lambda = std::log(lambda.maxCoeff());
    out.gap = upper_minus_common + log_max_lambda;
    if (out.gap <= tol_nats) {
      out.converged = true;
      break;
    }
    q = q.cwiseProduct(lambda);
    q /= q.sum();
  }
  out.q = q;
  out.Q.resize(ns, nr);
  c = A * q;
  for (Eigen::Index s = 0; s < ns; ++s) out.Q.row(s) = (q.transpose().array() * A.row(s).array()) / c[s];
  return out;
}

}  // namespace

double min_distortion(const Pmf& source, const DistortionMeasure& d) {
  if (d.sources() != source.size()) throw InputError("distortion table rows != source alphabet");
  return source.probs().dot(d.table().rowwise().minCoeff());
}

double zero_rate_distortion(const Pmf& source, const DistortionMeasure& d) {
  if (d.sources() != source.size()) throw InputError("distortion table rows != source alphabet");
  return (source.probs().transpose() * d.table()).minCoeff();
}

BlahutArimotoResult capacity(const ConditionalPmf& channel, BlahutArimotoOptions opts) {
  const Eigen::MatrixXd& W = channel.matrix();
  const Eigen::Index nx = W.rows();
  Eigen::VectorXd p = Eigen::VectorXd::Constant(nx, 1.0 / static_cast<double>(nx));
  Eigen::VectorXd div(nx);
  BlahutArimotoResult r;
  const double tol_nats = opts.tolerance * kLn2;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    r.iterations = it;
    const Eigen::VectorXd q = W.transpose() * p;
    for (Eigen::Index x = 0; x < nx; ++x) {
      double dx = 0.0;
      for (Eigen::Index y = 0; y < W.cols(); ++y) {
        const double w = W(x, y);
        if (w > 0.0) dx += w * std::log(w / q[y]);
      }
      div[x] = dx;
    }
    // I_L = log sum p e^D  <=  C  <=  I_U = max D.
    const double shift = div.maxCoeff();
    const double lower = shift + std::log((p.array() * (div.array() - shift).exp()).sum());
    r.gap = (shift - lower) / kLn2;
    r.value = lower / kLn2;
    if (r.gap <= opts.tolerance || shift - lower <= tol_nats) {
      r.converged = true;
      break;
    }
    p = p.array() * (div.array() - shift).exp();
    p /= p.sum();
  }
  r.value = std::max(0.0, r.value);
  r.distribution = p;
  return r;
}

BlahutArimotoResult rd_function(const Pmf& source, const DistortionMeasure& d, double D,
                                BlahutArimotoOptions opts) {
  const double d_min = min_distortion(source, d);
  const double d_max = zero_rate_distortion(source, d);
  if (!std::isfinite(D) || D < d_min - 1e-12) {
    throw InputError("rd_function: D = " + std::to_string(D) +
                     " is below the minimum achievable distortion " + std::to_string(d_min));
  }
  const Eigen::VectorXd& p = source.probs();
  const Eigen::MatrixXd excess = d.table().colwise() - d.table().rowwise().minCoeff();
  const Eigen::Index nr = d.reconstructions();
  const double tol_nats = opts.tolerance * kLn2;

  auto finish = [&](const SlopeSolve& s) {
    BlahutArimotoResult r;
    r.value = std::max(0.0, s.rate / kLn2);
    r.gap = s.gap / kLn2;
    r.iterations = s.iterations;
    r.converged = s.converged;
    r.distribution = s.q;
    r.test_channel = s.Q;
    r.distortion = s.distortion + d_min;
    return r;
  };

  if (D >= d_max) {
    // A constant reconstruction meets D at zero rate.
    Eigen::Index best = 0;
    (p.transpose() * d.table()).minCoeff(&best);
    BlahutArimotoResult r;
    r.converged = true;
    r.iterations = 0;
    r.distribution = Eigen::VectorXd::Zero(nr);
    r.distribution[best] = 1.0;
    r.test_channel = Eigen::MatrixXd::Zero(source.size(), nr);
    r.test_channel.col(best).setOnes();
    r.distortion = d_max;
    return r;
  }

  const Eigen::VectorXd q0 = Eigen::VectorXd::Constant(nr, 1.0 / static_cast<double>(nr));
  const double target = D - d_min;
  if (target <= 1e-12) {
    return finish(solve_slope(p, excess, std::numeric_limits<double>::infinity(), q0, tol_nats,
                              opts.max_iterations));
  }

  // The fixed-slope distortion D'(beta) is nonincreasing in beta. Bracket the
  // target, then bisect on log(beta).
  const int inner = opts.max_iterations;
  double beta_lo = 1.0;
  double beta_hi = 1.0;
  SlopeSolve at = solve_slope(p, excess, 1.0, q0, tol_nats * 1e-3, inner);
  SlopeSolve lo_solve = at;
  SlopeSolve hi_solve = at;
  if (at.distortion > target) {
    while (hi_solve.distortion > target && beta_hi < 1e12) {
      beta_lo = beta_hi;
      lo_solve = hi_solve;
      beta_hi *= 2.0;
      hi_solve = solve_slope(p, excess, beta_hi, hi_solve.q, tol_nats * 1e-3, inner);
    }
  } else {
    while (lo_solve.distortion <= target && beta_lo > 1e-12) {
      beta_hi = beta_lo;
      hi_solve = lo_solve;
      beta_lo *= 0.5;
      lo_solve = solve_slope(p, excess, beta_lo, q0, tol_nats * 1e-3, inner);
    }
  }
  // Invariant: D'(beta_lo) > target >= D'(beta_hi).
  for (int k = 0; k < 200; ++k) {
    if (std::abs(hi_solve.distortion - target) <= 1e-14) break;
    const double mid = std::sqrt(beta_lo * beta_hi);
    if (mid <= beta_lo || mid >= beta_hi) break;
    SlopeSolve s = solve_slope(p, excess, mid, hi_solve.q, tol_nats * 1e-3, inner);
    if (s.distortion > target) {
      beta_lo = mid;
      lo_solve = std::move(s);
    } else {
      beta_hi = mid;
      hi_solve = std::move(s);
    }
  }
  if (std::abs(hi_solve.distortion - target) <= 1e-12) return finish(hi_solve);
  // Target falls inside a jump of D'(beta): R(D) is linear between the two
  // bracketing points (a straight segment of the curve).
  const double t = (lo_solve.distortion - target) / (lo_solve.distortion - hi_solve.distortion);
  SlopeSolve mixed = hi_solve;
  mixed.rate = (1.0 - t) * lo_solve.rate + t * hi_solve.rate;
  mixed.distortion = target;
  mixed.Q = (1.0 - t) * lo_solve.Q + t * hi_solve.Q;
  mixed.q = (1.0 - t) * lo_solve.q + t * hi_solve.q;
  mixed.gap = std::max(lo_solve.gap, hi_solve.gap);
  mixed.converged = lo_solve.converged && hi_solve.converged;
  return finish(mixed);
}

}  // namespace hybridlab
