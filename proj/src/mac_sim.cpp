#include "hybridlab/mac_sim.hpp"

#include <cmath>
#include <string>

#include "hybridlab/parallel.hpp"

namespace hybridlab {

namespace {

void check_decoder(const std::vector<int>& dec, std::size_t cells, int codomain, const char* what) {
  if (dec.size() != cells) throw InputError(std::string(what) + ": table size mismatch");
  for (int v : dec) {
    if (v < 0 || v >= codomain) throw InputError(std::string(what) + ": entry out of range");
  }
}

Eigen::MatrixXi encoder_table(const std::vector<int>& enc, int u_size, int s_size) {
  Eigen::MatrixXi t(u_size, s_size);
  for (int u = 0; u < u_size; ++u) {
    for (int s = 0; s < s_size; ++s) t(u, s) = enc[static_cast<std::size_t>(u * s_size + s)];
  }
  return t;
}

double mean_and_half_width(const std::vector<MacTrial>& trials, double MacTrial::*field,
                           double& half_width) {
  const double T = static_cast<double>(trials.size());
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& t : trials) {
    sum += t.*field;
    sum_sq += (t.*field) * (t.*field);
  }
  const double mean = sum / T;
  const double var = trials.size() > 1 ? std::max(0.0, (sum_sq - T * mean * mean) / (T - 1.0)) : 0.0;
  half_width = 1.96 * std::sqrt(var / T);
  return mean;
}

}  // namespace

MacReport run_mac(const JointPmf& sources, const MacChannel& mac, const DistortionMeasure& d1,
                  const DistortionMeasure& d2, const MacHybridSpec& spec, const SimConfig& cfg) {
  cfg.validate();
  if (spec.q_size() != 1) throw InputError("simulate: only |Q| = 1 is supported");
  const JointPmf joint = thm2_joint(sources, mac, spec);  // Q, S1, S2, U1, U2, X1, X2, Y
  const int ns1 = sources.dims()[0], ns2 = sources.dims()[1];
  const int k1 = spec.u1_size(), k2 = spec.u2_size(), ny = mac.kernel.outputs();
  if (d1.sources() != ns1 || d2.sources() != ns2) throw InputError("simulate: distortion rows != |S_j|");
  const auto cells = static_cast<std::size_t>(k1 * k2 * ny);
  check_decoder(spec.dec1, cells, d1.reconstructions(), "dec1");
  check_decoder(spec.dec2, cells, d2.reconstructions(), "dec2");

  const std::int64_t n1 = codeword_count(cfg.n, spec.rate1, cfg.max_codebook_symbols);
  const std::int64_t n2 = codeword_count(cfg.n, spec.rate2, cfg.max_codebook_symbols);
  if (n1 > cfg.max_codebook_symbols / n2 || n1 * n2 > cfg.max_codebook_symbols / cfg.n) {
    throw ResourceLimitError("simulate: the index-pair search exceeds the cap");
  }

  const std::vector<int> ax_su1{kMacS1, kMacU1}, ax_su2{kMacS2, kMacU2}, ax_uuy{kMacU1, kMacU2, kMacY},
      ax_all{kMacS1, kMacS2, kMacU1, kMacU2, kMacY}, ax_u1{kMacU1}, ax_u2{kMacU2};
  const TypicalityTester cover1(joint.marginal(ax_su1), cfg.epsilon_prime, cfg.n);
  const TypicalityTester cover2(joint.marginal(ax_su2), cfg.epsilon_prime, cfg.n);
  const TypicalityTester packing(joint.marginal(ax_uuy), cfg.epsilon, cfg.n);
  const TypicalityTester full(joint.marginal(ax_all), cfg.epsilon, cfg.n);
  const Pmf p_u1 = joint.marginal(ax_u1).to_pmf();
  const Pmf p_u2 = joint.marginal(ax_u2).to_pmf();
  const Eigen::MatrixXi enc1 = encoder_table(spec.enc1, k1, ns1);
  const Eigen::MatrixXi enc2 = encoder_table(spec.enc2, k2, ns2);

  std::vector<MacTrial> outcomes(static_cast<std::size_t>(cfg.trials));
  parallel_chunks(cfg.trials, cfg.jobs, [&](std::int64_t, std::int64_t b, std::int64_t e) {
    const auto n = static_cast<std::size_t>(cfg.n);
    std::vector<int> s1(n), s2(n), y(n);
    for (std::int64_t t = b; t < e; ++t) {
      const auto ut = static_cast<std::uint64_t>(t);
      MacTrial& out = outcomes[static_cast<std::size_t>(t)];
      out.trial = t;
      out.seed = derive_seed(cfg.seed, StreamPurpose::kSource, ut);
      Rng src(out.seed);
      for (std::size_t i = 0; i < n; ++i) {
        const int pair = src.categorical(sources.probs());
        s1[i] = pair / ns2;
        s2[i] = pair % ns2;
      }
      const Codebook cb1 = Codebook::generate(cfg.n, spec.rate1, p_u1,
                                              derive_seed(cfg.seed, StreamPurpose::kCodebook, ut),
                                              cfg.max_codebook_symbols);
      const Codebook cb2 = Codebook::generate(cfg.n, spec.rate2, p_u2,
                                              derive_seed(cfg.seed, StreamPurpose::kCodebook2, ut),
                                              cfg.max_codebook_symbols);
      Rng tie1(cfg.seed, StreamPurpose::kTieBreak, ut);
      Rng tie2(cfg.seed, StreamPurpose::kTieBreak2, ut);
      const EncodeResult a = encode_p2p(s1, cb1, cover1, enc1, tie1);
      const EncodeResult c = encode_p2p(s2, cb2, cover2, enc2, tie2);
      Rng noise(cfg.seed, StreamPurpose::kChannel, ut);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = noise.categorical(mac.kernel.matrix().row(a.x[i] * mac.x2_size + c.x[i]));
      }

      // Exhaustive pair search.
      std::int64_t found = 0, h1 = 0, h2 = 0;
      bool e4 = false, e5 = false, e6 = false;
      for (std::int64_t m1 = 0; m1 < cb1.size(); ++m1) {
        for (std::int64_t m2 = 0; m2 < cb2.size(); ++m2) {
          const std::array<std::span<const int>, 3> seqs{cb1[m1], cb2[m2], y};
          if (!packing.accepts(seqs)) continue;
          if (found++ == 0) {
            h1 = m1;
            h2 = m2;
          }
          const bool other1 = m1 != a.index, other2 = m2 != c.index;
          e4 = e4 || (other1 && other2);
          e5 = e5 || (other1 && !other2);
          e6 = e6 || (!other1 && other2);
        }
      }
      if (found != 1) h1 = h2 = 0;
      out.m1 = a.index;
      out.m2 = c.index;
      out.m1_hat = h1;
      out.m2_hat = h2;
      const std::array<std::span<const int>, 5> sent{s1, s2, cb1[a.index], cb2[c.index], y};
      const std::array<std::span<const int>, 5> decoded{s1, s2, cb1[h1], cb2[h2], y};
      out.events = {a.hits == 0, c.hits == 0, !full.accepts(sent), e4, e5, e6};
      out.error = !full.accepts(decoded);
      if (out.error && !(out.events[2] || e4 || e5 || e6)) {
        throw InvariantError("simulate: error event outside E3 u E4 u E5 u E6");
      }

      const auto u1 = cb1[h1];
      const auto u2 = cb2[h2];
      double dist1 = 0.0, dist2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto cell = static_cast<std::size_t>((u1[i] * k2 + u2[i]) * ny + y[i]);
        dist1 += d1(s1[i], spec.dec1[cell]);
        dist2 += d2(s2[i], spec.dec2[cell]);
      }
      out.distortion1 = dist1 / cfg.n;
      out.distortion2 = dist2 / cfg.n;
    }
  });

  MacReport r;
  r.n = cfg.n;
  r.trials = cfg.trials;
  r.codewords1 = n1;
  r.codewords2 = n2;
  std::array<std::int64_t, 6> counts{};
  std::int64_t clean = 0, err = 0, uni = 0;
  for (const auto& t : outcomes) {
    bool any = false;
    for (std::size_t k = 0; k < 6; ++k) {
      counts[k] += t.events[k];
      any = any || t.events[k];
    }
    clean += t.events[2] && !t.events[0] && !t.events[1];
    err += t.error;
    uni += any;
  }
  for (std::size_t k = 0; k < 6; ++k) r.events[k] = make_proportion(counts[k], cfg.trials);
  r.e3_clean = make_proportion(clean, cfg.trials);
  r.error = make_proportion(err, cfg.trials);
  r.union_events = make_proportion(uni, cfg.trials);
  r.mean_distortion1 = mean_and_half_width(outcomes, &MacTrial::distortion1, r.distortion1_half_width);
  r.mean_distortion2 = mean_and_half_width(outcomes, &MacTrial::distortion2, r.distortion2_half_width);
  if (cfg.keep_trials) r.per_trial = std::move(outcomes);
  return r;
}

}  // namespace hybridlab
