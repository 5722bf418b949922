#include "hybridlab/p2p_bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "hybridlab/blahut_arimoto.hpp"
#include "hybridlab/parallel.hpp"
#include "hybridlab/search.hpp"

namespace hybridlab {

// ---------------------------------------------------------------------------
// BoundReport

const ConstraintValue& BoundReport::constraint(const std::string& name) const {
  for (const auto& c : constraints) {
    if (c.name == name) return c;
  }
  throw InputError("BoundReport: no constraint named " + name);
}

double BoundReport::value(const std::string& name) const {
  for (const auto& v : values) {
    if (v.name == name) return v.value;
  }
  throw InputError("BoundReport: no value named " + name);
}

void BoundReport::finalize(double margin) {
  if (constraints.empty()) throw InvariantError("BoundReport: no constraints to finalize");
  satisfied = true;
  std::size_t binding = 0;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    auto& c = constraints[i];
    c.satisfied = c.lhs + margin < c.rhs;
    satisfied = satisfied && c.satisfied;
    if (c.slack() < constraints[binding].slack()) binding = i;
  }
  binding_constraint = constraints[binding].name;
}

// ---------------------------------------------------------------------------
// Point-to-point condition evaluation

void HybridCodeSpec::validate(int sources, int inputs, int outputs, int reconstructions) const {
  const int k = aux_size();
  if (aux_kernel.inputs() != sources) {
    throw InputError("HybridCodeSpec: aux kernel has " + std::to_string(aux_kernel.inputs()) +
                     " rows, source alphabet has " + std::to_string(sources));
  }
  if (enc_map.rows() != k || enc_map.cols() != sources) {
    throw InputError("HybridCodeSpec: encoder table must be |U| x |S|");
  }
  if (dec_map.rows() != k || dec_map.cols() != outputs) {
    throw InputError("HybridCodeSpec: decoder table must be |U| x |Y|");
  }
  if (enc_map.size() > 0 && (enc_map.minCoeff() < 0 || enc_map.maxCoeff() >= inputs)) {
    throw InputError("HybridCodeSpec: encoder image outside the channel input alphabet");
  }
  if (dec_map.size() > 0 && (dec_map.minCoeff() < 0 || dec_map.maxCoeff() >= reconstructions)) {
    throw InputError("HybridCodeSpec: decoder image outside the reconstruction alphabet");
  }
  if (!std::isfinite(rate) || rate < 0.0) throw InputError("HybridCodeSpec: rate must be >= 0");
}

JointPmf thm1_joint(const Pmf& source, const ConditionalPmf& channel, const HybridCodeSpec& spec) {
  const int ns = source.size();
  const int k = spec.aux_size();
  if (spec.aux_kernel.inputs() != ns) throw InputError("thm1: aux kernel rows != |S|");
  // Rows of the encoder kernel run over (u, s) with s fastest.
  std::vector<int> enc(static_cast<std::size_t>(k * ns));
  for (int u = 0; u < k; ++u) {
    for (int s = 0; s < ns; ++s) enc[static_cast<std::size_t>(u * ns + s)] = spec.enc_map(u, s);
  }
  const std::array<KernelFactor, 3> factors{
      KernelFactor{spec.aux_kernel, {0}},
      KernelFactor{ConditionalPmf::deterministic(enc, channel.inputs()), {1, 0}},
      KernelFactor{channel, {2}},
  };
  return compose_joint(JointPmf(source), factors);
}

namespace {

constexpr int kS = 0, kU = 1, kY = 3;

double thm1_distortion(const JointPmf& joint, const DistortionMeasure& d,
                       const HybridCodeSpec& spec) {
  std::array<int, 4> idx{};
  double total = 0.0;
  for (Eigen::Index f = 0; f < joint.size(); ++f) {
    const double p = joint.probs()[f];
    if (p == 0.0) continue;
    joint.unflatten(f, idx);
    total += p * d(idx[kS], spec.dec_map(idx[kU], idx[kY]));
  }
  return total;
}

}  // namespace

BoundReport check_thm1(const Pmf& source, const ConditionalPmf& channel,
                       const DistortionMeasure& d, const HybridCodeSpec& spec, double margin) {
  if (d.sources() != source.size()) throw InputError("check_thm1: distortion rows != |S|");
  spec.validate(source.size(), channel.inputs(), channel.outputs(), d.reconstructions());
  const JointPmf joint = thm1_joint(source, channel, spec);
  const std::array<int, 1> s{kS}, u{kU}, y{kY};

  BoundReport r;
  const double i_su = mutual_information(joint, s, u);
  const double i_uy = mutual_information(joint, u, y);
  r.constraints.push_back({"I(S;U) < I(U;Y)", i_su, i_uy, false});
  r.values.push_back({"I(S;U)", i_su});
  r.values.push_back({"I(U;Y)", i_uy});
  r.values.push_back({"rate", spec.rate});
  r.expected_distortions.push_back(thm1_distortion(joint, d, spec));
  r.finalize(margin);
  if (spec.aux_size() == 1) {
    // Uncoded transmission: only E d matters (nonstrict condition 0 <= 0).
    r.constraints[0].satisfied = true;
    r.satisfied = true;
  }
  return r;
}

HybridCodeSpec separation_spec(const ConditionalPmf& test_channel, const Pmf& input,
                               int channel_outputs, double rate) {
  const int ns = test_channel.inputs();
  const int nr = test_channel.outputs();
  const int nx = input.size();
  const int k = nx * nr;
  Eigen::MatrixXd kernel(ns, k);
  Eigen::MatrixXi enc(k, ns);
  Eigen::MatrixXi dec(k, channel_outputs);
  for (int x = 0; x < nx; ++x) {
    for (int r = 0; r < nr; ++r) {
      const int u = x * nr + r;
      for (int s = 0; s < ns; ++s) {
        kernel(s, u) = input[x] * test_channel(s, r);
        enc(u, s) = x;
      }
      dec.row(u).setConstant(r);
    }
  }
  return HybridCodeSpec{ConditionalPmf(kernel), enc, dec, rate};
}

HybridCodeSpec uncoded_spec(std::span<const int> encoder, std::span<const int> decoder,
                            int sources) {
  if (static_cast<int>(encoder.size()) != sources) {
    throw InputError("uncoded_spec: encoder must map every source symbol");
  }
  Eigen::MatrixXi enc(1, sources);
  for (int s = 0; s < sources; ++s) enc(0, s) = encoder[static_cast<std::size_t>(s)];
  Eigen::MatrixXi dec(1, static_cast<Eigen::Index>(decoder.size()));
  for (std::size_t y = 0; y < decoder.size(); ++y) dec(0, static_cast<Eigen::Index>(y)) = decoder[y];
  return HybridCodeSpec{ConditionalPmf(Eigen::MatrixXd::Ones(sources, 1)), enc, dec, 0.0};
}

// ---------------------------------------------------------------------------
// Exhaustive search

namespace {

struct Problem {
  int ns, nx, ny, nr;
  std::vector<double> p;     // p(s)
  std::vector<double> W;     // W[x * ny + y]
  std::vector<double> D;     // D[s * nr + r]
  double capacity_bound;     // upper bound on any I(U;Y)
};

// Precomputed per-kernel quantities.
struct KernelState {
  int k = 0;
  std::vector<double> psu;  // p(s,u) at [s * k + u]
  std::vector<double> pu;
  double i_su = 0.0;
};

struct Candidate {
  double key = -std::numeric_limits<double>::infinity();  // larger is better
  double slack = 0.0;
  double distortion = 0.0;
  std::int64_t kernel = -1;
  std::int64_t encoder = -1;
  std::vector<int> dec;  // [u * ny + y]
  bool valid() const { return kernel >= 0; }
};

double xlog2(double num, double den) { return num > 0.0 ? num * std::log2(num / den) : 0.0; }

void load_kernel(const Problem& pr, const SimplexGrid& grid, std::int64_t index, KernelState& ks) {
  const int k = grid.dimension();
  ks.k = k;
  ks.psu.assign(static_cast<std::size_t>(pr.ns * k), 0.0);
  ks.pu.assign(static_cast<std::size_t>(k), 0.0);
  const std::int64_t g = grid.size();
  // Source symbol 0 is the most significant digit.
  std::vector<std::int64_t> digits(static_cast<std::size_t>(pr.ns));
  for (int s = pr.ns - 1; s >= 0; --s) {
    digits[static_cast<std::size_t>(s)] = index % g;
    index /= g;
  }
  for (int s = 0; s < pr.ns; ++s) {
    const Eigen::VectorXd& row = grid[digits[static_cast<std::size_t>(s)]];
    for (int u = 0; u < k; ++u) {
      const double v = pr.p[static_cast<std::size_t>(s)] * row[u];
      ks.psu[static_cast<std::size_t>(s * k + u)] = v;
      ks.pu[static_cast<std::size_t>(u)] += v;
    }
  }
  double i = 0.0;
  for (int s = 0; s < pr.ns; ++s) {
    for (int u = 0; u < k; ++u) {
      i += xlog2(ks.psu[static_cast<std::size_t>(s * k + u)],
                 pr.p[static_cast<std::size_t>(s)] * ks.pu[static_cast<std::size_t>(u)]);
    }
  }
  ks.i_su = std::max(0.0, i);
}

// Scratch for one (kernel, encoder) evaluation.
struct Scratch {
  std::vector<double> puy;
  std::vector<double> py;
  std::vector<double> cost;
  std::vector<int> dec;
};

// E d with the per-cell Bayes decoder; fills scratch.dec.
double bayes_distortion(const Problem& pr, const KernelState& ks, const std::vector<int>& enc,
                        Scratch& sc) {
  const int k = ks.k;
  sc.dec.assign(static_cast<std::size_t>(k * pr.ny), 0);
  sc.cost.assign(static_cast<std::size_t>(pr.nr), 0.0);
  double total = 0.0;
  for (int u = 0; u < k; ++u) {
    for (int y = 0; y < pr.ny; ++y) {
      std::fill(sc.cost.begin(), sc.cost.end(), 0.0);
      for (int s = 0; s < pr.ns; ++s) {
        const double w = ks.psu[static_cast<std::size_t>(s * k + u)] *
                         pr.W[static_cast<std::size_t>(enc[static_cast<std::size_t>(u * pr.ns + s)] * pr.ny + y)];
        if (w == 0.0) continue;
        for (int r = 0; r < pr.nr; ++r) sc.cost[static_cast<std::size_t>(r)] += w * pr.D[static_cast<std::size_t>(s * pr.nr + r)];
      }
      int best = 0;
      for (int r = 1; r < pr.nr; ++r) {
        if (sc.cost[static_cast<std::size_t>(r)] < sc.cost[static_cast<std::size_t>(best)]) best = r;
      }
      sc.dec[static_cast<std::size_t>(u * pr.ny + y)] = best;
      total += sc.cost[static_cast<std::size_t>(best)];
    }
  }
  return total;
}

double info_uy(const Problem& pr, const KernelState& ks, const std::vector<int>& enc, Scratch& sc) {
  const int k = ks.k;
  sc.puy.assign(static_cast<std::size_t>(k * pr.ny), 0.0);
  sc.py.assign(static_cast<std::size_t>(pr.ny), 0.0);
  for (int u = 0; u < k; ++u) {
    for (int s = 0; s < pr.ns; ++s) {
      const double w = ks.psu[static_cast<std::size_t>(s * k + u)];
      if (w == 0.0) continue;
      const int x = enc[static_cast<std::size_t>(u * pr.ns + s)];
      for (int y = 0; y < pr.ny; ++y) {
        sc.puy[static_cast<std::size_t>(u * pr.ny + y)] += w * pr.W[static_cast<std::size_t>(x * pr.ny + y)];
      }
    }
  }
  for (int u = 0; u < k; ++u) {
    for (int y = 0; y < pr.ny; ++y) sc.py[static_cast<std::size_t>(y)] += sc.puy[static_cast<std::size_t>(u * pr.ny + y)];
  }
  double i = 0.0;
  for (int u = 0; u < k; ++u) {
    for (int y = 0; y < pr.ny; ++y) {
      i += xlog2(sc.puy[static_cast<std::size_t>(u * pr.ny + y)],
                 ks.pu[static_cast<std::size_t>(u)] * sc.py[static_cast<std::size_t>(y)]);
    }
  }
  return std::max(0.0, i);
}

enum class Objective { kMaxSlack, kMinDistortion };

// Larger than any slack on desk-scale alphabets.
constexpr double kFailPenalty = 64.0;

struct SearchContext {
  const Problem& pr;
  Objective objective;
  double target_D;
  double margin;
};

// Scans kernels [begin, end) at one |U|; exact comparisons with the earliest
// index winning ties, so chunked scans merge to the serial result.
Candidate scan(const SearchContext& ctx, const SimplexGrid& grid, std::int64_t encoders,
               std::int64_t begin, std::int64_t end) {
  const Problem& pr = ctx.pr;
  const int k = grid.dimension();
  const int entries = k * pr.ns;
  Candidate best;
  KernelState ks;
  Scratch sc;
  std::vector<int> enc(static_cast<std::size_t>(entries));
  for (std::int64_t kernel = begin; kernel < end; ++kernel) {
    load_kernel(pr, grid, kernel, ks);
    const double slack_ub = pr.capacity_bound - ks.i_su;
    if (k > 1) {
      if (ctx.objective == Objective::kMaxSlack && best.valid() && slack_ub < best.key) continue;
      if (ctx.objective == Objective::kMinDistortion && !(slack_ub > ctx.margin)) continue;
    }
    std::fill(enc.begin(), enc.end(), 0);
    for (std::int64_t e = 0; e < encoders; ++e) {
      if (e > 0) {
        // Odometer increment, entry 0 most significant.
        for (int i = entries - 1; i >= 0; --i) {
          if (++enc[static_cast<std::size_t>(i)] < pr.nx) break;
          enc[static_cast<std::size_t>(i)] = 0;
        }
      }
      const double dist = bayes_distortion(pr, ks, enc, sc);
      if (ctx.objective == Objective::kMaxSlack) {
        if (dist > ctx.target_D + 1e-12) continue;
        const double slack = k == 1 ? 0.0 : info_uy(pr, ks, enc, sc) - ks.i_su;
        // Specs that fail the strict condition rank below every passing one.
        const double key = (k == 1 || slack > ctx.margin) ? slack : slack - kFailPenalty;
        if (!best.valid() || key > best.key) {
          best = {key, slack, dist, kernel, e, sc.dec};
        }
      } else {
        if (best.valid() && !(dist < best.distortion)) continue;
        const double slack = k == 1 ? 0.0 : info_uy(pr, ks, enc, sc) - ks.i_su;
        if (k > 1 && !(slack > ctx.margin)) continue;
        best = {-dist, slack, dist, kernel, e, sc.dec};
      }
    }
  }
  return best;
}

bool better(const Candidate& a, const Candidate& b) {
  if (!a.valid()) return false;
  if (!b.valid()) return true;
  return a.key > b.key;
}

Thm1SearchResult run_search(const Pmf& source, const ConditionalPmf& channel,
                            const DistortionMeasure& d, const Thm1SearchOptions& opts,
                            Objective objective, double target_D) {
  if (d.sources() != source.size()) throw InputError("thm1 search: distortion rows != |S|");
  if (opts.grid_resolution < 1) throw InputError("thm1 search: grid resolution must be >= 1");
  if (opts.aux_cap < 0) throw InputError("thm1 search: aux_cap must be >= 1");
  Problem pr{source.size(), channel.inputs(), channel.outputs(), d.reconstructions(), {}, {}, {}, 0.0};
  pr.p.assign(source.probs().data(), source.probs().data() + pr.ns);
  for (int x = 0; x < pr.nx; ++x) {
    for (int y = 0; y < pr.ny; ++y) pr.W.push_back(channel(x, y));
  }
  for (int s = 0; s < pr.ns; ++s) {
    for (int r = 0; r < pr.nr; ++r) pr.D.push_back(d(s, r));
  }
  // I(U;Y) <= I(X;Y) <= C; the slack absorbs the Blahut-Arimoto gap.
  const auto cap = capacity(channel);
  pr.capacity_bound = cap.value + cap.gap + 1e-6;

  Thm1SearchResult out;
  out.aux_cap = opts.aux_cap > 0 ? opts.aux_cap : pr.ns * pr.nx + 2;
  const SearchContext ctx{pr, objective, target_D, opts.margin};
  Candidate best;
  int best_k = 0;
  for (int k = 1; k <= out.aux_cap; ++k) {
    const SimplexGrid grid(k, opts.grid_resolution, opts.max_candidates);
    std::int64_t kernels = 1;
    for (int s = 0; s < pr.ns; ++s) {
      if (kernels > opts.max_candidates / grid.size()) {
        throw ResourceLimitError("thm1 search: kernel grid exceeds the candidate cap at |U| = " +
                                 std::to_string(k));
      }
      kernels *= grid.size();
    }
    const std::int64_t encoders = map_count(k * pr.ns, pr.nx, opts.max_candidates);
    if (encoders > opts.max_candidates / kernels ||
        out.candidates > opts.max_candidates - kernels * encoders) {
      throw ResourceLimitError("thm1 search: " + std::to_string(kernels) + " kernels x " +
                               std::to_string(encoders) + " encoders at |U| = " +
                               std::to_string(k) + " exceeds the candidate cap");
    }
    out.candidates += kernels * encoders;

    std::vector<Candidate> parts(static_cast<std::size_t>(chunk_count(kernels, opts.jobs)));
    parallel_chunks(kernels, opts.jobs, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
      parts[static_cast<std::size_t>(c)] = scan(ctx, grid, encoders, b, e);
    });
    for (auto& part : parts) {
      if (better(part, best)) {
        best = std::move(part);
        best_k = k;
      }
    }
  }
  if (!best.valid()) return out;

  // Rebuild the winning spec.
  const SimplexGrid grid(best_k, opts.grid_resolution, opts.max_candidates);
  Eigen::MatrixXd kernel(pr.ns, best_k);
  std::int64_t index = best.kernel;
  for (int s = pr.ns - 1; s >= 0; --s) {
    kernel.row(s) = grid[index % grid.size()].transpose();
    index /= grid.size();
  }
  std::vector<int> enc(static_cast<std::size_t>(best_k * pr.ns));
  map_from_index(best.encoder, pr.nx, enc);
  Eigen::MatrixXi enc_map(best_k, pr.ns);
  Eigen::MatrixXi dec_map(best_k, pr.ny);
  for (int u = 0; u < best_k; ++u) {
    for (int s = 0; s < pr.ns; ++s) enc_map(u, s) = enc[static_cast<std::size_t>(u * pr.ns + s)];
    for (int y = 0; y < pr.ny; ++y) dec_map(u, y) = best.dec[static_cast<std::size_t>(u * pr.ny + y)];
  }
  HybridCodeSpec spec{ConditionalPmf(kernel), enc_map, dec_map, 0.0};
  out.report = check_thm1(source, channel, d, spec, opts.margin);
  const double slack = best_k == 1 ? 0.0 : out.report.constraints[0].slack();
  if (std::abs(slack - best.slack) > 1e-9 ||
      std::abs(out.report.expected_distortions[0] - best.distortion) > 1e-9) {
    throw InvariantError("thm1 search: fast evaluation disagrees with check_thm1");
  }
  out.slack = slack;
  out.distortion = out.report.expected_distortions[0];
  out.feasible = out.report.satisfied &&
                 (objective == Objective::kMinDistortion || out.distortion <= target_D + 1e-12);
  // Midpoint rate between the covering and packing requirements.
  spec.rate = best_k == 1 ? 0.0
                          : 0.5 * (out.report.value("I(S;U)") + out.report.value("I(U;Y)"));
  out.spec = std::move(spec);
  return out;
}

}  // namespace

Thm1SearchResult thm1_optimize(const Pmf& source, const ConditionalPmf& channel,
                               const DistortionMeasure& d, double target_D,
                               const Thm1SearchOptions& opts) {
  if (!std::isfinite(target_D)) throw InputError("thm1_optimize: target distortion must be finite");
  return run_search(source, channel, d, opts, Objective::kMaxSlack, target_D);
}

Thm1SearchResult thm1_min_distortion(const Pmf& source, const ConditionalPmf& channel,
                                     const DistortionMeasure& d, const Thm1SearchOptions& opts) {
  return run_search(source, channel, d, opts, Objective::kMinDistortion, 0.0);
}

double separation_boundary(const Pmf& source, const ConditionalPmf& channel,
                           const DistortionMeasure& d, double tol) {
  const double c = capacity(channel).value;
  double lo = min_distortion(source, d);
  double hi = zero_rate_distortion(source, d);
  if (rd_function(source, d, lo).value <= c) return lo;
  // R(D) is nonincreasing: R(lo) > C >= R(hi) = 0.
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (rd_function(source, d, mid).value > c) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace hybridlab
