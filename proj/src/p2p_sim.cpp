#include "hybridlab/p2p_sim.hpp"

#include <array>
#include <cmath>

#include "hybridlab/parallel.hpp"

namespace hybridlab {

void SimConfig::validate() const {
  if (n < 1 || trials < 1) throw InputError("simulation: n and trials must be >= 1");
  if (!(epsilon_prime > 0.0) || !(epsilon > epsilon_prime)) {
    throw InputError("simulation: need epsilon > epsilon_prime > 0");
  }
  if (max_codebook_symbols < 1 || jobs < 1) throw InputError("simulation: caps must be positive");
}

Proportion make_proportion(std::int64_t count, std::int64_t trials) {
  Proportion p;
  p.count = count;
  p.p = trials > 0 ? static_cast<double>(count) / static_cast<double>(trials) : 0.0;
  p.half_width = trials > 0 ? 1.96 * std::sqrt(p.p * (1.0 - p.p) / static_cast<double>(trials)) : 0.0;
  return p;
}

EncodeResult encode_p2p(std::span<const int> s, const Codebook& cb,
                        const TypicalityTester& cover, const Eigen::MatrixXi& enc_map,
                        Rng& tie_break) {
  if (static_cast<int>(s.size()) != cb.n()) throw InputError("encode: length mismatch");
  std::vector<std::int64_t> hits;
  for (std::int64_t m = 0; m < cb.size(); ++m) {
    const std::array<std::span<const int>, 2> seqs{s, cb[m]};
    if (cover.accepts(seqs)) hits.push_back(m);
  }
  EncodeResult r;
  r.hits = static_cast<std::int64_t>(hits.size());
  r.index = hits.empty() ? static_cast<std::int64_t>(tie_break.below(static_cast<std::uint64_t>(cb.size())))
                         : hits[tie_break.below(hits.size())];
  const auto u = cb[r.index];
  r.x.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) r.x[i] = enc_map(u[i], s[i]);
  return r;
}

DecodeResult decode_p2p(std::span<const int> y, const Codebook& cb,
                        const TypicalityTester& packing, const Eigen::MatrixXi& dec_map) {
  if (static_cast<int>(y.size()) != cb.n()) throw InputError("decode: length mismatch");
  DecodeResult r;
  for (std::int64_t m = 0; m < cb.size(); ++m) {
    const std::array<std::span<const int>, 2> seqs{cb[m], y};
    if (packing.accepts(seqs)) r.candidates.push_back(m);
  }
  r.index = r.candidates.size() == 1 ? r.candidates.front() : 0;
  const auto u = cb[r.index];
  r.s_hat.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r.s_hat[i] = dec_map(u[i], y[i]);
  return r;
}

P2pReport run_p2p(const Pmf& source, const ConditionalPmf& channel, const DistortionMeasure& d,
                  const HybridCodeSpec& spec, const SimConfig& cfg) {
  cfg.validate();
  if (d.sources() != source.size()) throw InputError("simulate: distortion rows != |S|");
  spec.validate(source.size(), channel.inputs(), channel.outputs(), d.reconstructions());
  const std::int64_t codewords = codeword_count(cfg.n, spec.rate, cfg.max_codebook_symbols);

  const JointPmf joint = thm1_joint(source, channel, spec);  // S, U, X, Y
  const std::array<int, 2> su{0, 1}, uy{1, 3};
  const std::array<int, 1> u_axis{1};
  const std::array<int, 3> suy{0, 1, 3};
  const TypicalityTester cover(joint.marginal(su), cfg.epsilon_prime, cfg.n);
  const TypicalityTester packing(joint.marginal(uy), cfg.epsilon, cfg.n);
  const TypicalityTester full(joint.marginal(suy), cfg.epsilon, cfg.n);
  const Pmf p_u = joint.marginal(u_axis).to_pmf();

  std::vector<P2pTrial> outcomes(static_cast<std::size_t>(cfg.trials));
  parallel_chunks(cfg.trials, cfg.jobs, [&](std::int64_t, std::int64_t b, std::int64_t e) {
    std::vector<int> s(static_cast<std::size_t>(cfg.n)), y(static_cast<std::size_t>(cfg.n));
    for (std::int64_t t = b; t < e; ++t) {
      const auto ut = static_cast<std::uint64_t>(t);
      P2pTrial& out = outcomes[static_cast<std::size_t>(t)];
      out.trial = t;
      out.seed = derive_seed(cfg.seed, StreamPurpose::kSource, ut);
      Rng src(out.seed);
      for (int& v : s) v = src.categorical(source.probs());
      const Codebook cb = Codebook::generate(cfg.n, spec.rate, p_u,
                                             derive_seed(cfg.seed, StreamPurpose::kCodebook, ut),
                                             cfg.max_codebook_symbols);
      Rng tie(cfg.seed, StreamPurpose::kTieBreak, ut);
      const EncodeResult enc = encode_p2p(s, cb, cover, spec.enc_map, tie);
      Rng noise(cfg.seed, StreamPurpose::kChannel, ut);
      for (int i = 0; i < cfg.n; ++i) {
        y[static_cast<std::size_t>(i)] =
            noise.categorical(channel.matrix().row(enc.x[static_cast<std::size_t>(i)]));
      }
      const DecodeResult dec = decode_p2p(y, cb, packing, spec.dec_map);

      out.m = enc.index;
      out.m_hat = dec.index;
      out.e1 = enc.hits == 0;
      const std::array<std::span<const int>, 3> sent{s, cb[enc.index], y};
      out.e2 = !full.accepts(sent);
      for (std::int64_t c : dec.candidates) out.e3 = out.e3 || c != enc.index;
      const std::array<std::span<const int>, 3> decoded{s, cb[dec.index], y};
      out.error = !full.accepts(decoded);
      if (out.error && !(out.e1 || out.e2 || out.e3)) {
        throw InvariantError("simulate: error event outside E1 u E2 u E3");
      }
      double dist = 0.0;
      for (int i = 0; i < cfg.n; ++i) {
        dist += d(s[static_cast<std::size_t>(i)], dec.s_hat[static_cast<std::size_t>(i)]);
      }
      out.distortion = dist / cfg.n;
    }
  });

  P2pReport r;
  r.n = cfg.n;
  r.trials = cfg.trials;
  r.codewords = codewords;
  std::int64_t e1 = 0, e2n = 0, e3 = 0, err = 0, uni = 0;
  double sum = 0.0, sum_sq = 0.0, sum_ok = 0.0;
  for (const auto& t : outcomes) {
    e1 += t.e1;
    e2n += t.e2 && !t.e1;
    e3 += t.e3;
    err += t.error;
    uni += t.e1 || t.e2 || t.e3;
    sum += t.distortion;
    sum_sq += t.distortion * t.distortion;
    if (!t.error) {
      sum_ok += t.distortion;
      ++r.no_error_trials;
    }
  }
  const double T = cfg.trials;
  r.e1 = make_proportion(e1, cfg.trials);
  r.e2_not_e1 = make_proportion(e2n, cfg.trials);
  r.e3 = make_proportion(e3, cfg.trials);
  r.error = make_proportion(err, cfg.trials);
  r.union_events = make_proportion(uni, cfg.trials);
  r.mean_distortion = sum / T;
  const double var = cfg.trials > 1 ? std::max(0.0, (sum_sq - T * r.mean_distortion * r.mean_distortion) / (T - 1.0)) : 0.0;
  r.distortion_std_error = std::sqrt(var / T);
  r.distortion_half_width = 1.96 * r.distortion_std_error;
  r.mean_distortion_no_error = r.no_error_trials > 0 ? sum_ok / static_cast<double>(r.no_error_trials) : 0.0;
  if (cfg.keep_trials) r.per_trial = std::move(outcomes);
  return r;
}

}  // namespace hybridlab
