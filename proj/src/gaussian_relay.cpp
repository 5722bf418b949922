#include "hybridlab/gaussian_relay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "hybridlab/errors.hpp"
#include "hybridlab/parallel.hpp"

namespace hybridlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_sigma(double sigma2) {
  if (!(sigma2 > 0.0)) throw InputError("sigma2 must be > 0");
}

// C(1/sigma2), zero in the sigma2 -> infinity limit.
double c_inv(double sigma2) { return std::isinf(sigma2) ? 0.0 : gauss_c(1.0 / sigma2); }

struct Terms {
  double first;
  double second;
};

// min of two terms, clamped at zero, with the binding index.
void assign(double& rate, int& binding, bool& clamped, Terms t) {
  binding = t.second < t.first ? 1 : 0;
  const double m = std::min(t.first, t.second);
  if (m < 0.0) clamped = true;
  rate = std::max(0.0, m);
}

RatePoint make_point(Scheme scheme, Terms t1, Terms t2) {
  RatePoint p;
  p.scheme = scheme;
  assign(p.r1, p.binding1, p.clamped, t1);
  assign(p.r2, p.binding2, p.clamped, t2);
  return p;
}

// The two hybrid-coding terms for one direction. `sx` is the relay-to-receiver
// SNR (S23 for R1), `sy` the uplink SNR of the sender (S31 for R1), and
// `d` = S31 + S32 + 1.
Terms hc_terms(double sx, double sy, double d, const SchemeParams& sp, bool beta_in_numerator) {
  const double a = sp.alpha * sx / d;
  const double c = beta_in_numerator ? sp.beta : 1.0 - sp.alpha;
  if (std::isinf(sp.sigma2)) {
    return {0.5 * std::log2((a * (sy + 1.0) + 1.0) / (a + 1.0)),
            0.5 * std::log2((a * (sy + 1.0) + c * sx + 1.0) / (a + 1.0))};
  }
  const double s2 = sp.sigma2;
  const double root_b = std::sqrt(sp.beta * s2);
  const double den = (a + sp.beta * sx + 1.0) * (1.0 + s2) -
                     sx * std::pow(std::sqrt(sp.alpha / d) + root_b, 2);
  const double num1 = (a * (sy + 1.0) + sp.beta * sx + 1.0) * (sy + 1.0 + s2) -
                      sx * std::pow(std::sqrt(sp.alpha * (sy + 1.0) / d) + root_b, 2);
  const double num2 = (a * (sy + 1.0) + c * sx + 1.0) * (1.0 + s2);
  if (!(den > 0.0) || !(num1 > 0.0) || !(num2 > 0.0)) {
    throw InvariantError("hc_general_rates: nonpositive variance term");
  }
  return {0.5 * std::log2(num1 / den), 0.5 * std::log2(num2 / den) - c_inv(s2)};
}

}  // namespace

double gauss_c(double x) {
  if (!(x >= 0.0)) throw InputError("C(x) requires x >= 0");
  return 0.5 * std::log2(1.0 + x);
}

GaussianTwrcParams GaussianTwrcParams::from_gains(double power, double g13, double g23,
                                                  double g31, double g32) {
  if (!(power > 0.0)) throw InputError("power must be > 0");
  GaussianTwrcParams p{g13 * g13 * power, g23 * g23 * power, g31 * g31 * power,
                       g32 * g32 * power};
  p.validate();
  return p;
}

GaussianTwrcParams GaussianTwrcParams::line_network(double power, double r,
                                                    double path_loss_exponent) {
  if (!(r > 0.0 && r < 1.0)) throw InputError("relay position r must lie in (0, 1)");
  if (!(path_loss_exponent > 0.0)) throw InputError("path-loss exponent must be > 0");
  const double g1 = std::pow(r, -path_loss_exponent / 2.0);
  const double g2 = std::pow(1.0 - r, -path_loss_exponent / 2.0);
  return from_gains(power, g1, g2, g1, g2);
}

void GaussianTwrcParams::validate() const {
  for (double s : {s13, s23, s31, s32}) {
    if (!(s >= 0.0) || std::isinf(s)) throw InputError("SNRs must be finite and >= 0");
  }
}

void SchemeParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0)) {
    throw InputError("alpha and beta must lie in [0, 1]");
  }
  if (alpha + beta > 1.0 + 1e-12) throw InputError("alpha + beta must be <= 1");
  require_sigma(sigma2);
}

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kNnc: return "nnc";
    case Scheme::kAf: return "af";
    case Scheme::kHcSpecial: return "hc_special";
    case Scheme::kHcGeneral: return "hc_general";
    case Scheme::kCutset: return "cutset";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : {Scheme::kNnc, Scheme::kAf, Scheme::kHcSpecial, Scheme::kHcGeneral,
                   Scheme::kCutset}) {
    if (name == scheme_name(s)) return s;
  }
  throw InputError("unknown scheme '" + name + "'");
}

RatePoint hc_general_rates(const GaussianTwrcParams& ch, const SchemeParams& sp,
                           const HcGeneralOptions& opts) {
  ch.validate();
  sp.validate();
  const double d = ch.s31 + ch.s32 + 1.0;
  return make_point(Scheme::kHcGeneral, hc_terms(ch.s23, ch.s31, d, sp, opts.beta_in_numerator),
                    hc_terms(ch.s13, ch.s32, d, sp, opts.beta_in_numerator));
}

RatePoint nnc_rates(const GaussianTwrcParams& ch, double sigma2) {
  ch.validate();
  require_sigma(sigma2);
  if (std::isinf(sigma2)) return make_point(Scheme::kNnc, {0.0, gauss_c(ch.s23)}, {0.0, gauss_c(ch.s13)});
  return make_point(Scheme::kNnc,
                    {gauss_c(ch.s31 / (1.0 + sigma2)), gauss_c(ch.s23) - c_inv(sigma2)},
                    {gauss_c(ch.s32 / (1.0 + sigma2)), gauss_c(ch.s13) - c_inv(sigma2)});
}

RatePoint af_rates(const GaussianTwrcParams& ch) {
  ch.validate();
  const Terms t1{gauss_c(ch.s23 * ch.s31 / (1.0 + ch.s23 + ch.s31 + ch.s32)), kInf};
  const Terms t2{gauss_c(ch.s13 * ch.s32 / (1.0 + ch.s13 + ch.s31 + ch.s32)), kInf};
  return make_point(Scheme::kAf, t1, t2);
}

RatePoint hc_special_rates(const GaussianTwrcParams& ch, double sigma2) {
  ch.validate();
  require_sigma(sigma2);
  auto terms = [sigma2](double sx, double sy) -> Terms {
    if (std::isinf(sigma2)) return {0.0, gauss_c(sx)};
    const double den = 1.0 + sigma2 + sx;
    return {gauss_c(sy * (1.0 + sx) / den), gauss_c(sx * sigma2 / den) - c_inv(sigma2)};
  };
  return make_point(Scheme::kHcSpecial, terms(ch.s23, ch.s31), terms(ch.s13, ch.s32));
}

RatePoint cutset_rates(const GaussianTwrcParams& ch) {
  ch.validate();
  return make_point(Scheme::kCutset, {gauss_c(ch.s31), gauss_c(ch.s23)},
                    {gauss_c(ch.s32), gauss_c(ch.s13)});
}

namespace {

std::vector<double> log_sigma_grid(const SearchConfig& cfg) {
  std::vector<double> g(static_cast<std::size_t>(cfg.sigma_grid_points));
  const double lo = std::log(cfg.sigma_min), hi = std::log(cfg.sigma_max);
  for (int i = 0; i < cfg.sigma_grid_points; ++i) {
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (cfg.sigma_grid_points - 1);
  }
  return g;
}

struct SigmaOpt {
  double log_sigma = 0.0;
  double value = 0.0;
};

// Grid argmax over log sigma2 (earliest wins ties), then golden refinement
// within one cell on either side.
SigmaOpt optimize_sigma(const std::function<double(double)>& f, const std::vector<double>& grid,
                        const SearchConfig& cfg) {
  std::size_t best = 0;
  double best_v = f(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = f(grid[i]);
    if (v > best_v) {
      best = i;
      best_v = v;
    }
  }
  const double lo = grid[best == 0 ? 0 : best - 1];
  const double hi = grid[std::min(best + 1, grid.size() - 1)];
  const GoldenResult g = golden_refine(f, lo, hi, cfg.golden_tolerance, cfg.golden_max_iter, grid[best]);
  return {g.x, g.value};
}

double sigma_of(double log_sigma) { return std::exp(log_sigma); }

OptimizedScheme finish(Scheme scheme, SchemeParams sp, RatePoint rp) {
  OptimizedScheme o;
  o.scheme = scheme;
  o.params = sp;
  o.rates = rp;
  o.sum_rate = rp.sum();
  return o;
}

OptimizedScheme optimize_general(const GaussianTwrcParams& ch, const SearchConfig& cfg,
                                 const HcGeneralOptions& opts) {
  const std::vector<double> grid = log_sigma_grid(cfg);
  auto value = [&](double a, double b, double log_s) {
    return hc_general_rates(ch, {a, b, std::isinf(log_s) ? kInf : sigma_of(log_s)}, opts).sum();
  };

  struct Candidate {
    TrianglePoint p;
    double log_s;  // +inf encodes sigma2 = infinity
    double v;
  };
  auto better = [](const Candidate& a, const Candidate& b) { return a.v > b.v; };

  // Coarse stage: the triangle crossed with the sigma2 grid and its infinite limit.
  const std::vector<TrianglePoint> tri = triangle_grid(cfg.ab_step);
  std::vector<Candidate> parts(static_cast<std::size_t>(chunk_count(static_cast<std::int64_t>(tri.size()), cfg.jobs)));
  parallel_chunks(static_cast<std::int64_t>(tri.size()), cfg.jobs,
                  [&](std::int64_t c, std::int64_t b, std::int64_t e) {
                    Candidate best{tri[static_cast<std::size_t>(b)], grid[0], -kInf};
                    for (std::int64_t i = b; i < e; ++i) {
                      const TrianglePoint p = tri[static_cast<std::size_t>(i)];
                      for (double ls : grid) {
                        const double v = value(p.alpha, p.beta, ls);
                        if (v > best.v) best = {p, ls, v};
                      }
                      const double v = value(p.alpha, p.beta, kInf);
                      if (v > best.v) best = {p, kInf, v};
                    }
                    parts[static_cast<std::size_t>(c)] = best;
                  });
  Candidate coarse = parts.front();
  for (const auto& p : parts) {
    if (better(p, coarse)) coarse = p;
  }

  // Starts: coarse optimum, the special-case optima, AF, then seeded restarts.
  std::vector<Candidate> starts{coarse};
  const OptimizedScheme nnc = optimize_scheme(ch, Scheme::kNnc, cfg);
  const OptimizedScheme hcs = optimize_scheme(ch, Scheme::kHcSpecial, cfg);
  starts.push_back({{0.0, 0.0}, std::log(nnc.params.sigma2), 0.0});
  starts.push_back({{0.0, 1.0}, std::log(hcs.params.sigma2), 0.0});
  starts.push_back({{1.0, 0.0}, kInf, 0.0});
  for (TrianglePoint p : restart_points(cfg.seed, cfg.restarts)) {
    starts.push_back({p, grid[grid.size() / 2], 0.0});
  }

  const StepSchedule schedule{cfg.ab_step, 0.5, cfg.descent_min_step};
  Candidate best{{0.0, 0.0}, grid[0], -kInf};
  for (Candidate c : starts) {
    c.v = value(c.p.alpha, c.p.beta, c.log_s);
    // Alternate (alpha, beta) descent with sigma2 refinement until neither improves.
    for (int round = 0; round < cfg.descent_rounds; ++round) {
      const double before = c.v;
      const double ls = c.log_s;
      const DescentResult dr = coordinate_descent(
          [&](double a, double b) { return value(a, b, ls); }, c.p, schedule, cfg.descent_rounds);
      if (dr.value > c.v + kImprovementThreshold) {
        c.p = dr.point;
        c.v = dr.value;
      }
      auto f = [&](double s) { return value(c.p.alpha, c.p.beta, s); };
      const SigmaOpt so = optimize_sigma(f, grid, cfg);
      if (so.value > c.v + kImprovementThreshold) {
        c.log_s = so.log_sigma;
        c.v = so.value;
      }
      if (!(c.v > before + kImprovementThreshold)) break;
    }
    if (better(c, best)) best = c;
  }
  const SchemeParams sp{best.p.alpha, best.p.beta, std::isinf(best.log_s) ? kInf : sigma_of(best.log_s)};
  return finish(Scheme::kHcGeneral, sp, hc_general_rates(ch, sp, opts));
}

}  // namespace

OptimizedScheme optimize_scheme(const GaussianTwrcParams& ch, Scheme scheme,
                                const SearchConfig& cfg, const HcGeneralOptions& opts) {
  ch.validate();
  cfg.validate();
  switch (scheme) {
    case Scheme::kAf: return finish(scheme, {1.0, 0.0, kInf}, af_rates(ch));
    case Scheme::kCutset: return finish(scheme, {0.0, 0.0, kInf}, cutset_rates(ch));
    case Scheme::kNnc:
    case Scheme::kHcSpecial: {
      const bool nnc = scheme == Scheme::kNnc;
      auto rates = [&](double s) { return nnc ? nnc_rates(ch, s) : hc_special_rates(ch, s); };
      const SigmaOpt so =
          optimize_sigma([&](double ls) { return rates(sigma_of(ls)).sum(); }, log_sigma_grid(cfg), cfg);
      const double s = sigma_of(so.log_sigma);
      return finish(scheme, {0.0, nnc ? 0.0 : 1.0, s}, rates(s));
    }
    case Scheme::kHcGeneral: return optimize_general(ch, cfg, opts);
  }
  throw InputError("optimize_scheme: unknown scheme");
}

std::vector<Fig8Row> fig8_sweep(double power, const std::vector<double>& r_grid,
                                double path_loss_exponent, const SearchConfig& cfg) {
  for (double r : r_grid) {
    if (!(r > 0.0 && r < 1.0)) throw InputError("fig8 sweep: every r must lie in (0, 1)");
  }
  std::vector<Fig8Row> rows(r_grid.size());
  SearchConfig inner = cfg;
  inner.jobs = 1;
  parallel_chunks(static_cast<std::int64_t>(r_grid.size()), cfg.jobs,
                  [&](std::int64_t, std::int64_t b, std::int64_t e) {
                    for (std::int64_t i = b; i < e; ++i) {
                      const double r = r_grid[static_cast<std::size_t>(i)];
                      const auto ch = GaussianTwrcParams::line_network(power, r, path_loss_exponent);
                      rows[static_cast<std::size_t>(i)] = {
                          r, cutset_rates(ch).sum(), af_rates(ch).sum(),
                          optimize_scheme(ch, Scheme::kNnc, inner).sum_rate,
                          optimize_scheme(ch, Scheme::kHcSpecial, inner).sum_rate};
                    }
                  });
  return rows;
}

std::string fig8_csv(const std::vector<Fig8Row>& rows) {
  std::string out = "r,R_CS,R_AF,R_NNC,R_HC\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f\n", row.r, row.cutset, row.af,
                  row.nnc, row.hc);
    out += buf;
  }
  return out;
}

}  // namespace hybridlab
