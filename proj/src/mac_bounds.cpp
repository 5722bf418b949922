#include "hybridlab/mac_bounds.hpp"

#include <array>
#include <cmath>
#include <string>

#include "hybridlab/parallel.hpp"
#include "hybridlab/search.hpp"

namespace hybridlab {

void MacChannel::validate() const {
  if (x1_size < 1 || x2_size < 1 || kernel.inputs() != x1_size * x2_size) {
    throw InputError("MacChannel: kernel rows must equal |X1| |X2|");
  }
}

MacChannel MacChannel::noiseless(int x1_size, int x2_size) {
  return {ConditionalPmf::identity(x1_size * x2_size), x1_size, x2_size};
}

namespace {

int flat_size(std::initializer_list<int> dims) {
  int n = 1;
  for (int d : dims) n *= d;
  return n;
}

void check_table(const std::vector<int>& table, int expected, int codomain, const char* what) {
  if (static_cast<int>(table.size()) != expected) {
    throw InputError(std::string(what) + ": expected " + std::to_string(expected) +
                     " entries, got " + std::to_string(table.size()));
  }
  for (int v : table) {
    if (v < 0 || v >= codomain) throw InputError(std::string(what) + ": entry out of range");
  }
}

void check_sources(const JointPmf& sources) {
  if (sources.rank() != 2) throw InputError("MAC scenario: source joint must have axes (S1, S2)");
}

// p(q) p(s1, s2) with axes (Q, S1, S2).
JointPmf with_time_sharing(const Pmf& q, const JointPmf& sources) {
  const Eigen::Index ns = sources.size();
  Eigen::VectorXd probs(q.size() * ns);
  for (int i = 0; i < q.size(); ++i) probs.segment(i * ns, ns) = q[i] * sources.probs();
  return JointPmf({q.size(), sources.dims()[0], sources.dims()[1]}, std::move(probs));
}

void validate_spec(const JointPmf& sources, const MacChannel& mac, const MacHybridSpec& spec,
                   int r1, int r2) {
  const int nq = spec.q_size();
  const int n1 = sources.dims()[0];
  const int n2 = sources.dims()[1];
  const int k1 = spec.u1_size();
  const int k2 = spec.u2_size();
  const int ny = mac.kernel.outputs();
  if (spec.aux1.inputs() != nq * n1) throw InputError("MacHybridSpec: aux1 rows must be |Q| |S1|");
  if (spec.aux2.inputs() != nq * n2) throw InputError("MacHybridSpec: aux2 rows must be |Q| |S2|");
  check_table(spec.enc1, flat_size({nq, k1, n1}), mac.x1_size, "MacHybridSpec enc1");
  check_table(spec.enc2, flat_size({nq, k2, n2}), mac.x2_size, "MacHybridSpec enc2");
  check_table(spec.dec1, flat_size({nq, k1, k2, ny}), r1, "MacHybridSpec dec1");
  check_table(spec.dec2, flat_size({nq, k1, k2, ny}), r2, "MacHybridSpec dec2");
}

using Axes = std::vector<int>;

double cmi(const JointPmf& j, const Axes& a, const Axes& b, const Axes& c) {
  return conditional_mutual_information(j, a, b, c);
}

}  // namespace

JointPmf thm2_joint(const JointPmf& sources, const MacChannel& mac, const MacHybridSpec& spec) {
  check_sources(sources);
  mac.validate();
  const std::array<KernelFactor, 5> factors{
      KernelFactor{spec.aux1, {kMacQ, kMacS1}},
      KernelFactor{spec.aux2, {kMacQ, kMacS2}},
      KernelFactor{ConditionalPmf::deterministic(spec.enc1, mac.x1_size), {kMacQ, kMacU1, kMacS1}},
      KernelFactor{ConditionalPmf::deterministic(spec.enc2, mac.x2_size), {kMacQ, kMacU2, kMacS2}},
      KernelFactor{mac.kernel, {kMacX1, kMacX2}},
  };
  return compose_joint(with_time_sharing(spec.time_sharing, sources), factors);
}

namespace {

// Expected distortion of decoder table dec (layout q, u1, u2, y) for source axis s_axis.
double mac_distortion(const JointPmf& joint, int s_axis, const std::vector<int>& dec,
                      const DistortionMeasure& d) {
  const auto& dims = joint.dims();
  const int k1 = dims[kMacU1], k2 = dims[kMacU2], ny = dims[kMacY];
  std::array<int, 8> idx{};
  double total = 0.0;
  for (Eigen::Index f = 0; f < joint.size(); ++f) {
    const double p = joint.probs()[f];
    if (p == 0.0) continue;
    joint.unflatten(f, idx);
    const int cell = ((idx[kMacQ] * k1 + idx[kMacU1]) * k2 + idx[kMacU2]) * ny + idx[kMacY];
    total += p * d(idx[s_axis], dec[static_cast<std::size_t>(cell)]);
  }
  return total;
}

void thm2_constraints(const JointPmf& joint, BoundReport& r) {
  const Axes q{kMacQ}, s1{kMacS1}, s2{kMacS2}, u1{kMacU1}, u2{kMacU2}, y{kMacY};
  const Axes u2q{kMacU2, kMacQ}, u1q{kMacU1, kMacQ};
  r.constraints.push_back({"I(U1;S1|U2,Q) < I(U1;Y|U2,Q)", cmi(joint, u1, s1, u2q),
                           cmi(joint, u1, y, u2q), false});
  r.constraints.push_back({"I(U2;S2|U1,Q) < I(U2;Y|U1,Q)", cmi(joint, u2, s2, u1q),
                           cmi(joint, u2, y, u1q), false});
  r.constraints.push_back({"I(U1,U2;S1,S2|Q) < I(U1,U2;Y|Q)",
                           cmi(joint, {kMacU1, kMacU2}, {kMacS1, kMacS2}, q),
                           cmi(joint, {kMacU1, kMacU2}, y, q), false});
}

}  // namespace

BoundReport thm2_region_check(const JointPmf& sources, const MacChannel& mac,
                              const DistortionMeasure& d1, const DistortionMeasure& d2,
                              const MacHybridSpec& spec, double margin) {
  check_sources(sources);
  mac.validate();
  if (d1.sources() != sources.dims()[0] || d2.sources() != sources.dims()[1]) {
    throw InputError("thm2_region_check: distortion rows do not match source alphabets");
  }
  validate_spec(sources, mac, spec, d1.reconstructions(), d2.reconstructions());
  const JointPmf joint = thm2_joint(sources, mac, spec);
  BoundReport r;
  thm2_constraints(joint, r);
  r.values.push_back({"R1", spec.rate1});
  r.values.push_back({"R2", spec.rate2});
  r.expected_distortions.push_back(mac_distortion(joint, kMacS1, spec.dec1, d1));
  r.expected_distortions.push_back(mac_distortion(joint, kMacS2, spec.dec2, d2));
  r.finalize(margin);
  return r;
}

// ---------------------------------------------------------------------------
// Lossless substitution U_j = (X_j, S_j)

MacHybridSpec lossless_substitution(const JointPmf& sources, const MacChannel& mac,
                                    const LosslessInputs& in) {
  check_sources(sources);
  mac.validate();
  const int nq = in.time_sharing.size();
  const int n1 = sources.dims()[0], n2 = sources.dims()[1];
  const int m1 = mac.x1_size, m2 = mac.x2_size;
  const int ny = mac.kernel.outputs();
  if (in.input1.inputs() != nq * n1 || in.input1.outputs() != m1 ||
      in.input2.inputs() != nq * n2 || in.input2.outputs() != m2) {
    throw InputError("lossless_substitution: input kernels must be (|Q||S_j|) x |X_j|");
  }
  const int k1 = m1 * n1, k2 = m2 * n2;
  auto aux = [&](const ConditionalPmf& input, int ns, int m) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nq * ns, m * ns);
    for (int q = 0; q < nq; ++q) {
      for (int s = 0; s < ns; ++s) {
        for (int x = 0; x < m; ++x) a(q * ns + s, x * ns + s) = input(q * ns + s, x);
      }
    }
    return ConditionalPmf(a);
  };
  auto enc = [&](int ns, int m) {
    std::vector<int> e;
    for (int q = 0; q < nq; ++q) {
      for (int u = 0; u < m * ns; ++u) {
        for (int s = 0; s < ns; ++s) e.push_back(u / ns);
      }
    }
    return e;
  };
  std::vector<int> dec1, dec2;
  for (int q = 0; q < nq; ++q) {
    for (int u1 = 0; u1 < k1; ++u1) {
      for (int u2 = 0; u2 < k2; ++u2) {
        for (int y = 0; y < ny; ++y) {
          dec1.push_back(u1 % n1);
          dec2.push_back(u2 % n2);
        }
      }
    }
  }
  return MacHybridSpec{in.time_sharing, aux(in.input1, n1, m1), aux(in.input2, n2, m2),
                       enc(n1, m1), enc(n2, m2), std::move(dec1), std::move(dec2), 0.0, 0.0};
}

BoundReport lossless_mac_check(const JointPmf& sources, const MacChannel& mac,
                               const LosslessInputs& in, double margin) {
  check_sources(sources);
  mac.validate();
  const int nq = in.time_sharing.size();
  if (in.input1.inputs() != nq * sources.dims()[0] || in.input1.outputs() != mac.x1_size ||
      in.input2.inputs() != nq * sources.dims()[1] || in.input2.outputs() != mac.x2_size) {
    throw InputError("lossless_mac_check: input kernels must be (|Q||S_j|) x |X_j|");
  }
  // Axes: Q, S1, S2, X1, X2, Y.
  const std::array<KernelFactor, 3> factors{
      KernelFactor{in.input1, {0, 1}},
      KernelFactor{in.input2, {0, 2}},
      KernelFactor{mac.kernel, {3, 4}},
  };
  const JointPmf j = compose_joint(with_time_sharing(in.time_sharing, sources), factors);
  BoundReport r;
  r.constraints.push_back({"H(S1|S2) < I(X1;Y|X2,S2,Q)", conditional_entropy(j, Axes{1}, Axes{2}),
                           cmi(j, {3}, {5}, {4, 2, 0}), false});
  r.constraints.push_back({"H(S2|S1) < I(X2;Y|X1,S1,Q)", conditional_entropy(j, Axes{2}, Axes{1}),
                           cmi(j, {4}, {5}, {3, 1, 0}), false});
  r.constraints.push_back({"H(S1,S2) < I(X1,X2;Y|Q)", entropy(j, Axes{1, 2}),
                           cmi(j, {3, 4}, {5}, {0}), false});
  r.finalize(margin);
  return r;
}

// ---------------------------------------------------------------------------
// Distributed lossy substitution U_j = (X_j, U~_j)

MacHybridSpec distributed_substitution(const JointPmf& sources, const DistributedCode& code,
                                       int x1_size, int x2_size) {
  check_sources(sources);
  const int nq = code.time_sharing.size();
  const int n1 = sources.dims()[0], n2 = sources.dims()[1];
  const int t1 = code.aux1.outputs(), t2 = code.aux2.outputs();
  if (code.aux1.inputs() != nq * n1 || code.aux2.inputs() != nq * n2) {
    throw InputError("distributed_substitution: aux kernels must have |Q||S_j| rows");
  }
  if (x1_size < 1 || x2_size < 1) throw InputError("distributed_substitution: empty input alphabet");
  check_table(code.dec1, flat_size({nq, t1, t2}), INT32_MAX, "DistributedCode dec1");
  check_table(code.dec2, flat_size({nq, t1, t2}), INT32_MAX, "DistributedCode dec2");
  const MacChannel mac = MacChannel::noiseless(x1_size, x2_size);
  const int ny = mac.kernel.outputs();

  auto aux = [&](const ConditionalPmf& a, int ns, int t, int m) {
    Eigen::MatrixXd out(nq * ns, m * t);
    for (int row = 0; row < nq * ns; ++row) {
      for (int x = 0; x < m; ++x) {
        for (int u = 0; u < t; ++u) out(row, x * t + u) = a(row, u) / m;
      }
    }
    return ConditionalPmf(out);
  };
  auto enc = [&](int ns, int t, int m) {
    std::vector<int> e;
    for (int q = 0; q < nq; ++q) {
      for (int u = 0; u < m * t; ++u) {
        for (int s = 0; s < ns; ++s) e.push_back(u / t);
      }
    }
    return e;
  };
  std::vector<int> dec1, dec2;
  for (int q = 0; q < nq; ++q) {
    for (int u1 = 0; u1 < x1_size * t1; ++u1) {
      for (int u2 = 0; u2 < x2_size * t2; ++u2) {
        const int cell = (q * t1 + u1 % t1) * t2 + u2 % t2;
        for (int y = 0; y < ny; ++y) {
          dec1.push_back(code.dec1[static_cast<std::size_t>(cell)]);
          dec2.push_back(code.dec2[static_cast<std::size_t>(cell)]);
        }
      }
    }
  }
  return MacHybridSpec{code.time_sharing,
                       aux(code.aux1, n1, t1, x1_size),
                       aux(code.aux2, n2, t2, x2_size),
                       enc(n1, t1, x1_size),
                       enc(n2, t2, x2_size),
                       std::move(dec1),
                       std::move(dec2),
                       std::log2(static_cast<double>(x1_size)),
                       std::log2(static_cast<double>(x2_size))};
}

BoundReport distributed_lossy_check(const JointPmf& sources, const DistributedCode& code,
                                    const DistortionMeasure& d1, const DistortionMeasure& d2,
                                    double rate1, double rate2, double margin) {
  check_sources(sources);
  const int nq = code.time_sharing.size();
  const int t1 = code.aux1.outputs(), t2 = code.aux2.outputs();
  if (code.aux1.inputs() != nq * sources.dims()[0] || code.aux2.inputs() != nq * sources.dims()[1]) {
    throw InputError("distributed_lossy_check: aux kernels must have |Q||S_j| rows");
  }
  check_table(code.dec1, flat_size({nq, t1, t2}), d1.reconstructions(), "DistributedCode dec1");
  check_table(code.dec2, flat_size({nq, t1, t2}), d2.reconstructions(), "DistributedCode dec2");
  // Axes: Q, S1, S2, U1, U2.
  const std::array<KernelFactor, 2> factors{
      KernelFactor{code.aux1, {0, 1}},
      KernelFactor{code.aux2, {0, 2}},
  };
  const JointPmf j = compose_joint(with_time_sharing(code.time_sharing, sources), factors);
  BoundReport r;
  r.constraints.push_back({"I(S1;U1|U2,Q) < R1", cmi(j, {1}, {3}, {4, 0}), rate1, false});
  r.constraints.push_back({"I(S2;U2|U1,Q) < R2", cmi(j, {2}, {4}, {3, 0}), rate2, false});
  r.constraints.push_back({"I(S1,S2;U1,U2|Q) < R1+R2", cmi(j, {1, 2}, {3, 4}, {0}),
                           rate1 + rate2, false});
  r.values.push_back({"R1", rate1});
  r.values.push_back({"R2", rate2});
  std::array<int, 5> idx{};
  double e1 = 0.0, e2 = 0.0;
  for (Eigen::Index f = 0; f < j.size(); ++f) {
    const double p = j.probs()[f];
    if (p == 0.0) continue;
    j.unflatten(f, idx);
    const auto cell = static_cast<std::size_t>((idx[0] * t1 + idx[3]) * t2 + idx[4]);
    e1 += p * d1(idx[1], code.dec1[cell]);
    e2 += p * d2(idx[2], code.dec2[cell]);
  }
  r.expected_distortions = {e1, e2};
  r.finalize(margin);
  return r;
}

// ---------------------------------------------------------------------------
// Search

namespace {

// Per-cell Bayes decoder for source axis s_axis; layout (q, u1, u2, y).
std::vector<int> bayes_decoder(const JointPmf& joint, int s_axis, const DistortionMeasure& d) {
  const Axes keep{kMacQ, kMacU1, kMacU2, kMacY, s_axis};
  const JointPmf m = joint.marginal(keep);
  const int ns = joint.dims()[static_cast<std::size_t>(s_axis)];
  const auto cells = static_cast<std::size_t>(m.size() / ns);
  std::vector<int> dec(cells, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    double best = 0.0;
    for (int r = 0; r < d.reconstructions(); ++r) {
      double cost = 0.0;
      for (int s = 0; s < ns; ++s) {
        cost += m.probs()[static_cast<Eigen::Index>(c * ns + s)] * d(s, r);
      }
      if (r == 0 || cost < best) {
        best = cost;
        dec[c] = r;
      }
    }
  }
  return dec;
}

struct SenderGrid {
  int k;
  SimplexGrid grid;
  std::int64_t kernels;
  std::int64_t encoders;

  std::int64_t size() const { return kernels * encoders; }
};

// The index-th (kernel, encoder) pair for one sender with |Q| = 1.
void sender_choice(const SenderGrid& g, int ns, int nx, std::int64_t index, ConditionalPmf& aux,
                   std::vector<int>& enc) {
  std::int64_t kernel = index / g.encoders;
  const std::int64_t e = index % g.encoders;
  Eigen::MatrixXd a(ns, g.k);
  for (int s = ns - 1; s >= 0; --s) {
    a.row(s) = g.grid[kernel % g.grid.size()].transpose();
    kernel /= g.grid.size();
  }
  aux = ConditionalPmf(a);
  enc.assign(static_cast<std::size_t>(g.k * ns), 0);
  map_from_index(e, nx, enc);
}

struct MacCandidate {
  double key = 0.0;
  std::int64_t index = -1;
};

}  // namespace

Thm2SearchResult thm2_optimize(const JointPmf& sources, const MacChannel& mac,
                               const DistortionMeasure& d1, const DistortionMeasure& d2,
                               double target1, double target2, const Thm2SearchOptions& opts) {
  check_sources(sources);
  mac.validate();
  if (opts.aux_cap < 1 || opts.grid_resolution < 1) {
    throw InputError("thm2_optimize: aux_cap and grid resolution must be >= 1");
  }
  const int n1 = sources.dims()[0], n2 = sources.dims()[1];
  auto make_grid = [&](int k, int ns, int nx) {
    SimplexGrid grid(k, opts.grid_resolution, opts.max_candidates);
    std::int64_t kernels = 1;
    for (int s = 0; s < ns; ++s) {
      if (kernels > opts.max_candidates / grid.size()) {
        throw ResourceLimitError("thm2_optimize: kernel grid exceeds the candidate cap");
      }
      kernels *= grid.size();
    }
    const std::int64_t encoders = map_count(k * ns, nx, opts.max_candidates);
    if (encoders > opts.max_candidates / kernels) {
      throw ResourceLimitError("thm2_optimize: sender search exceeds the candidate cap");
    }
    return SenderGrid{k, std::move(grid), kernels, encoders};
  };

  Thm2SearchResult out;
  out.aux_cap = opts.aux_cap;
  const Pmf q1{1.0};
  std::optional<MacHybridSpec> best_spec;
  double best_key = 0.0;
  for (int k1 = 1; k1 <= opts.aux_cap; ++k1) {
    const SenderGrid g1 = make_grid(k1, n1, mac.x1_size);
    for (int k2 = 1; k2 <= opts.aux_cap; ++k2) {
      const SenderGrid g2 = make_grid(k2, n2, mac.x2_size);
      if (g2.size() > 0 && g1.size() > opts.max_candidates / g2.size()) {
        throw ResourceLimitError("thm2_optimize: joint search exceeds the candidate cap");
      }
      const std::int64_t total = g1.size() * g2.size();
      if (out.candidates > opts.max_candidates - total) {
        throw ResourceLimitError("thm2_optimize: cumulative search exceeds the candidate cap");
      }
      out.candidates += total;

      auto evaluate = [&](std::int64_t index, MacHybridSpec* keep) -> std::optional<double> {
        ConditionalPmf a1(Eigen::MatrixXd::Ones(1, 1)), a2(Eigen::MatrixXd::Ones(1, 1));
        std::vector<int> e1, e2;
        sender_choice(g1, n1, mac.x1_size, index / g2.size(), a1, e1);
        sender_choice(g2, n2, mac.x2_size, index % g2.size(), a2, e2);
        const int ny = mac.kernel.outputs();
        MacHybridSpec spec{q1, a1, a2, e1, e2,
                           std::vector<int>(static_cast<std::size_t>(k1 * k2 * ny), 0),
                           std::vector<int>(static_cast<std::size_t>(k1 * k2 * ny), 0), 0.0, 0.0};
        const JointPmf joint = thm2_joint(sources, mac, spec);
        spec.dec1 = bayes_decoder(joint, kMacS1, d1);
        spec.dec2 = bayes_decoder(joint, kMacS2, d2);
        if (mac_distortion(joint, kMacS1, spec.dec1, d1) > target1 + 1e-12 ||
            mac_distortion(joint, kMacS2, spec.dec2, d2) > target2 + 1e-12) {
          return std::nullopt;
        }
        BoundReport r;
        thm2_constraints(joint, r);
        double key = r.constraints[0].slack();
        for (const auto& c : r.constraints) key = std::min(key, c.slack());
        if (keep) *keep = std::move(spec);
        return key;
      };

      std::vector<MacCandidate> parts(static_cast<std::size_t>(chunk_count(total, opts.jobs)));
      parallel_chunks(total, opts.jobs, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
        MacCandidate best;
        for (std::int64_t i = b; i < e; ++i) {
          const auto key = evaluate(i, nullptr);
          if (key && (best.index < 0 || *key > best.key)) best = {*key, i};
        }
        parts[static_cast<std::size_t>(c)] = best;
      });
      for (const auto& part : parts) {
        if (part.index < 0) continue;
        if (!best_spec || part.key > best_key) {
          MacHybridSpec spec{q1, ConditionalPmf(Eigen::MatrixXd::Ones(1, 1)),
                             ConditionalPmf(Eigen::MatrixXd::Ones(1, 1)), {}, {}, {}, {}, 0.0, 0.0};
          evaluate(part.index, &spec);
          best_spec = std::move(spec);
          best_key = part.key;
        }
      }
    }
  }
  if (!best_spec) return out;
  out.report = thm2_region_check(sources, mac, d1, d2, *best_spec, opts.margin);
  out.min_slack = best_key;
  out.feasible = out.report.satisfied;
  out.spec = std::move(best_spec);
  return out;
}

}  // namespace hybridlab
