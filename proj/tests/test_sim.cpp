#include <doctest.h>

#include <cmath>
#include <set>
#include <string>

#include "hybridlab/codebook.hpp"
#include "hybridlab/lemma1.hpp"
#include "hybridlab/mac_sim.hpp"
#include "hybridlab/p2p_sim.hpp"
#include "hybridlab/rng.hpp"
#include "json_io.hpp"
#include "oracles.hpp"

using namespace hybridlab;
namespace cli = hybridlab::cli;

namespace {

std::string data(const char* name) { return std::string(HYBRIDLAB_DATA_DIR) + "/" + name; }

struct P2pScenario {
  Pmf source;
  ConditionalPmf channel;
  DistortionMeasure distortion;
  HybridCodeSpec spec;
};

P2pScenario load_p2p(const char* name) {
  const auto j = cli::load_json(data(name));
  const Pmf s = cli::pmf_from(j.at("source"));
  return {s, cli::kernel_from(j.at("channel")), cli::distortion_from(j.at("distortion"), s.size()),
          cli::p2p_spec_from(j.at("spec"))};
}

// p_su[s][u] = p(s) p(u|s).
std::vector<std::vector<double>> source_aux_joint(const P2pScenario& sc) {
  const Eigen::MatrixXd& k = sc.spec.aux_kernel.matrix();
  std::vector<std::vector<double>> p(static_cast<std::size_t>(k.rows()),
                                     std::vector<double>(static_cast<std::size_t>(k.cols())));
  for (Eigen::Index s = 0; s < k.rows(); ++s) {
    for (Eigen::Index u = 0; u < k.cols(); ++u) p[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] = sc.source[s] * k(s, u);
  }
  return p;
}

}  // namespace

TEST_CASE("codeword count and resource cap") {
  CHECK(codeword_count(10, 0.2) == 4);
  CHECK(codeword_count(8, 0.0) == 1);
  CHECK(codeword_count(20, 0.5) == 1024);
  CHECK_THROWS_AS(codeword_count(200, 0.2), ResourceLimitError);
  CHECK_THROWS_AS(codeword_count(10, 0.5, 100), ResourceLimitError);
}

TEST_CASE("codebooks are reproducible from their seed") {
  const Pmf p{0.2, 0.5, 0.3};
  const Codebook a = Codebook::generate(12, 0.3, p, 77);
  const Codebook b = Codebook::generate(12, 0.3, p, 77);
  const Codebook c = Codebook::generate(12, 0.3, p, 78);
  REQUIRE(a.size() == codeword_count(12, 0.3));
  bool differs = false;
  for (std::int64_t m = 0; m < a.size(); ++m) {
    for (int i = 0; i < a.n(); ++i) {
      CHECK(a[m][static_cast<std::size_t>(i)] == b[m][static_cast<std::size_t>(i)]);
      differs = differs || a[m][static_cast<std::size_t>(i)] != c[m][static_cast<std::size_t>(i)];
    }
  }
  CHECK(differs);
}

TEST_CASE("derived seeds are distinct across purposes and indices") {
  std::set<std::uint64_t> seen;
  for (auto purpose : {StreamPurpose::kCodebook, StreamPurpose::kSource, StreamPurpose::kChannel,
                       StreamPurpose::kTieBreak}) {
    for (std::uint64_t i = 0; i < 500; ++i) seen.insert(derive_seed(20130611, purpose, i));
  }
  CHECK(seen.size() == 2000);
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
  }
}

TEST_CASE("proportions carry a normal-approximation half width") {
  const Proportion p = make_proportion(25, 100);
  CHECK(p.p == doctest::Approx(0.25));
  CHECK(p.half_width == doctest::Approx(1.96 * std::sqrt(0.25 * 0.75 / 100.0)));
  CHECK(make_proportion(0, 0).p == 0.0);
}

TEST_CASE("simulation configuration is validated") {
  SimConfig cfg;
  cfg.epsilon_prime = 0.5;
  cfg.epsilon = 0.4;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.epsilon = 0.6;
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("point-to-point simulation: jobs invariance, event inclusion, covering failure") {
  const P2pScenario sc = load_p2p("hybrid_trend.json");
  SimConfig cfg;
  cfg.n = 8;
  cfg.trials = 4000;
  cfg.epsilon = 0.9;
  cfg.epsilon_prime = 0.5;
  cfg.keep_trials = true;
  const P2pReport r1 = run_p2p(sc.source, sc.channel, sc.distortion, sc.spec, cfg);
  cfg.jobs = 3;
  const P2pReport r3 = run_p2p(sc.source, sc.channel, sc.distortion, sc.spec, cfg);
  CHECK(r1.error.count == r3.error.count);
  CHECK(r1.e1.count == r3.e1.count);
  CHECK(r1.mean_distortion == r3.mean_distortion);
  REQUIRE(r1.per_trial.size() == r3.per_trial.size());
  for (std::size_t i = 0; i < r1.per_trial.size(); ++i) {
    CHECK(r1.per_trial[i].m_hat == r3.per_trial[i].m_hat);
    // The decoding error event is contained in the union of the analysed events.
    const auto& t = r1.per_trial[i];
    if (t.error) CHECK((t.e1 || t.e2 || t.e3));
  }
  CHECK(r1.error.count <= r1.union_events.count);

  const double exact = oracle::covering_failure(source_aux_joint(sc), cfg.n, r1.codewords, cfg.epsilon_prime);
  const double sd = std::sqrt(exact * (1.0 - exact) / cfg.trials);
  CHECK(std::abs(r1.e1.p - exact) <= 3.0 * sd + 1e-12);
}

TEST_CASE("uncoded simulation distortion concentrates at the crossover") {
  const P2pScenario sc = load_p2p("bsc_uncoded.json");
  SimConfig cfg;
  cfg.n = 200;
  cfg.trials = 50;
  const P2pReport r = run_p2p(sc.source, sc.channel, sc.distortion, sc.spec, cfg);
  CHECK(r.codewords == 1);
  CHECK(std::abs(r.mean_distortion - 0.1) <= 4.0 * std::sqrt(0.09 / (200.0 * 50.0)));
}

TEST_CASE("multiple access simulation is independent of jobs") {
  const auto j = cli::load_json(data("mac_noisy.json"));
  const JointPmf sources = cli::joint2_from(j.at("sources"));
  const MacChannel mac = cli::mac_channel_from(j.at("mac"));
  const MacHybridSpec spec = cli::mac_spec_from(j.at("spec"));
  const DistortionMeasure d = DistortionMeasure::hamming(2);
  SimConfig cfg;
  cfg.n = 10;
  cfg.trials = 300;
  cfg.epsilon = 0.9;
  cfg.epsilon_prime = 0.5;
  const MacReport a = run_mac(sources, mac, d, d, spec, cfg);
  cfg.jobs = 4;
  const MacReport b = run_mac(sources, mac, d, d, spec, cfg);
  CHECK(a.error.count == b.error.count);
  CHECK(a.mean_distortion1 == b.mean_distortion1);
  CHECK(a.mean_distortion2 == b.mean_distortion2);
  for (std::size_t e = 0; e < 6; ++e) CHECK(a.events[e].count == b.events[e].count);
  CHECK(a.error.count <= a.union_events.count);
}

TEST_CASE("conditional codeword law matches the exact computation at n = 2") {
  Eigen::Matrix2d m;
  m << 0.5, 0.0, 0.0, 0.5;
  const JointPmf joint({2, 2}, Eigen::Map<const Eigen::VectorXd>(m.data(), 4));
  Lemma1Config cfg;
  cfg.n = 2;
  cfg.rate = 0.5;
  cfg.epsilon_prime = 0.25;
  cfg.outer_trials = 200'000;
  cfg.min_count = 500;
  const Lemma1Report r = lemma1_check(joint, cfg);
  cfg.jobs = 3;
  const Lemma1Report r3 = lemma1_check(joint, cfg);
  CHECK(r.accepted == r3.accepted);
  CHECK(r.max_ratio == r3.max_ratio);
  CHECK(r.codewords == 2);

  const std::vector<std::vector<double>> p_su{{0.5, 0.0}, {0.0, 0.5}};
  const auto exact = oracle::conditional_second_codeword(p_su, 2, 2, 0.25);
  REQUIRE(!r.cells.empty());
  for (const auto& cell : r.cells) {
    const auto& ref = exact[static_cast<std::size_t>(cell.u_tilde * 4 + cell.s)];
    REQUIRE(ref.size() == cell.counts.size());
    for (std::size_t u = 0; u < ref.size(); ++u) {
      const double phat = static_cast<double>(cell.counts[u]) / static_cast<double>(cell.total);
      const double sd = std::sqrt(ref[u] * (1.0 - ref[u]) / static_cast<double>(cell.total));
      CHECK(std::abs(phat - ref[u]) <= 4.0 * sd + 1e-12);
    }
  }
}

TEST_CASE("lemma check rejects rates with a single codeword") {
  const JointPmf joint({2, 2}, Eigen::Vector4d(0.25, 0.25, 0.25, 0.25));
  Lemma1Config cfg;
  cfg.n = 2;
  cfg.rate = 0.2;
  CHECK_THROWS_AS(lemma1_check(joint, cfg), InputError);
}
