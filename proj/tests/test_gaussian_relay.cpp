#include <doctest.h>

#include <random>

#include "hybridlab/gaussian_relay.hpp"
#include "oracles.hpp"

using namespace hybridlab;

namespace {

GaussianTwrcParams random_snr(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> logu(-1.0, 2.0);
  return GaussianTwrcParams{std::pow(10.0, logu(gen)), std::pow(10.0, logu(gen)), std::pow(10.0, logu(gen)),
                            std::pow(10.0, logu(gen))};
}

oracle::Snr as_oracle(const GaussianTwrcParams& p) { return {p.s13, p.s23, p.s31, p.s32}; }

SearchConfig fast_config() {
  SearchConfig cfg;
  cfg.sigma_grid_points = 60;
  cfg.ab_step = 0.05;
  return cfg;
}

}  // namespace

TEST_CASE("gauss_c and channel construction") {
  CHECK(gauss_c(0.0) == 0.0);
  CHECK(gauss_c(3.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(gauss_c(-0.5), InputError);
  const auto p = GaussianTwrcParams::line_network(10.0, 0.25, 3.0);
  CHECK(p.s31 == doctest::Approx(10.0 * std::pow(0.25, -3.0)));
  CHECK(p.s13 == doctest::Approx(p.s31));
  CHECK(p.s23 == doctest::Approx(10.0 * std::pow(0.75, -3.0)));
  CHECK_THROWS_AS(GaussianTwrcParams::line_network(10.0, 1.2), InputError);
  CHECK_THROWS_AS(GaussianTwrcParams::line_network(10.0, 0.0), InputError);
  const auto g = GaussianTwrcParams::from_gains(2.0, 1.0, 0.5, 2.0, 3.0);
  CHECK(g.s23 == doctest::Approx(0.5));
  CHECK(g.s32 == doctest::Approx(18.0));
}

TEST_CASE("scheme parameter validation") {
  const auto ch = GaussianTwrcParams::line_network(10.0, 0.3);
  CHECK_THROWS_AS(hc_general_rates(ch, {0.7, 0.4, 1.0}), InputError);
  CHECK_THROWS_AS(hc_general_rates(ch, {-0.1, 0.4, 1.0}), InputError);
  CHECK_THROWS_AS(hc_general_rates(ch, {0.2, 0.4, 0.0}), InputError);
  CHECK_THROWS_AS(parse_scheme("df"), InputError);
  for (Scheme s : {Scheme::kNnc, Scheme::kAf, Scheme::kHcSpecial, Scheme::kHcGeneral, Scheme::kCutset}) {
    CHECK(parse_scheme(scheme_name(s)) == s);
  }
}

TEST_CASE("closed-form rates match the transcribed formulas on random SNRs") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const auto ch = random_snr(gen);
    const auto o = as_oracle(ch);
    const double a = unif(gen), b = (1.0 - a) * unif(gen);
    const double sig2 = std::pow(10.0, 4.0 * unif(gen) - 2.0);
    for (bool beta_num : {false, true}) {
      const RatePoint r = hc_general_rates(ch, {a, b, sig2}, {beta_num});
      const auto [o1, o2] = oracle::hc_general(o, a, b, sig2, beta_num);
      CHECK(r.r1 == doctest::Approx(o1).epsilon(1e-10));
      CHECK(r.r2 == doctest::Approx(o2).epsilon(1e-10));
    }
    const auto [n1, n2] = oracle::nnc(o, sig2);
    CHECK(nnc_rates(ch, sig2).r1 == doctest::Approx(n1).epsilon(1e-10));
    CHECK(nnc_rates(ch, sig2).r2 == doctest::Approx(n2).epsilon(1e-10));
    const auto [h1, h2] = oracle::hc_special(o, sig2);
    CHECK(hc_special_rates(ch, sig2).r1 == doctest::Approx(h1).epsilon(1e-10));
    CHECK(hc_special_rates(ch, sig2).r2 == doctest::Approx(h2).epsilon(1e-10));
    const auto [a1, a2] = oracle::af(o);
    CHECK(af_rates(ch).r1 == doctest::Approx(a1).epsilon(1e-12));
    CHECK(af_rates(ch).r2 == doctest::Approx(a2).epsilon(1e-12));
    const RatePoint cs = cutset_rates(ch);
    CHECK(cs.r1 == doctest::Approx(std::min(oracle::gC(o.s31), oracle::gC(o.s23))));
    CHECK(cs.r2 == doctest::Approx(std::min(oracle::gC(o.s32), oracle::gC(o.s13))));
  }
}

TEST_CASE("infinite quantizer variance is the limit of large variances") {
  const auto ch = GaussianTwrcParams::line_network(10.0, 0.35);
  const double inf = std::numeric_limits<double>::infinity();
  const RatePoint lim = hc_general_rates(ch, {1.0, 0.0, inf});
  const RatePoint big = hc_general_rates(ch, {1.0, 0.0, 1e12});
  CHECK(lim.r1 == doctest::Approx(big.r1).epsilon(1e-6));
  CHECK(lim.r1 == doctest::Approx(af_rates(ch).r1).epsilon(1e-12));
  CHECK(nnc_rates(ch, inf).r1 == doctest::Approx(0.0));
}

TEST_CASE("special cases of the general rates") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(-2.0, 4.0);
  for (int t = 0; t < 50; ++t) {
    const auto ch = random_snr(gen);
    const double sig2 = std::pow(10.0, unif(gen));
    CHECK(hc_general_rates(ch, {0.0, 0.0, sig2}).r1 == doctest::Approx(nnc_rates(ch, sig2).r1).epsilon(1e-12));
    CHECK(hc_general_rates(ch, {0.0, 1.0, sig2}).r2 ==
          doctest::Approx(hc_special_rates(ch, sig2).r2).epsilon(1e-12));
  }
}

TEST_CASE("optimized schemes at the symmetric relay position give equal rates") {
  const auto ch = GaussianTwrcParams::line_network(10.0, 0.5);
  for (Scheme s : {Scheme::kNnc, Scheme::kAf, Scheme::kHcSpecial, Scheme::kHcGeneral, Scheme::kCutset}) {
    const OptimizedScheme o = optimize_scheme(ch, s, fast_config());
    CHECK(o.rates.r1 == doctest::Approx(o.rates.r2).epsilon(1e-9));
    CHECK(o.sum_rate == doctest::Approx(o.rates.sum()));
  }
}

TEST_CASE("optimization dominates grid evaluations and is independent of jobs") {
  const auto ch = GaussianTwrcParams::line_network(10.0, 0.2);
  SearchConfig cfg = fast_config();
  const OptimizedScheme hc = optimize_scheme(ch, Scheme::kHcSpecial, cfg);
  for (double s2 : {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
    CHECK(hc.sum_rate >= hc_special_rates(ch, s2).sum() - 1e-12);
  }
  const OptimizedScheme gen = optimize_scheme(ch, Scheme::kHcGeneral, cfg);
  CHECK(gen.sum_rate >= hc.sum_rate - 1e-12);
  CHECK(gen.sum_rate >= optimize_scheme(ch, Scheme::kNnc, cfg).sum_rate - 1e-12);
  CHECK(gen.sum_rate >= af_rates(ch).sum() - 1e-12);
  cfg.jobs = 3;
  const OptimizedScheme gen3 = optimize_scheme(ch, Scheme::kHcGeneral, cfg);
  CHECK(gen3.sum_rate == gen.sum_rate);
  CHECK(gen3.params.alpha == gen.params.alpha);
  CHECK(gen3.params.sigma2 == gen.params.sigma2);
}

TEST_CASE("relay-position sweep table") {
  const std::vector<double> grid{0.1, 0.5, 0.9};
  const auto rows = fig8_sweep(10.0, grid, 3.0, fast_config());
  REQUIRE(rows.size() == 3);
  // Mirror symmetry of the line network.
  CHECK(rows[0].hc == doctest::Approx(rows[2].hc).epsilon(1e-9));
  CHECK(rows[0].nnc == doctest::Approx(rows[2].nnc).epsilon(1e-9));
  for (const auto& r : rows) {
    CHECK(r.cutset >= r.hc - 1e-12);
    CHECK(r.cutset >= r.af - 1e-12);
    CHECK(r.cutset >= r.nnc - 1e-12);
  }
  const std::string csv = fig8_csv(rows);
  CHECK(csv.rfind("r,R_CS,R_AF,R_NNC,R_HC\n", 0) == 0);
  CHECK(csv.find("0.100000,") != std::string::npos);
  CHECK_THROWS_AS(fig8_sweep(10.0, {1.5}, 3.0, fast_config()), InputError);
}
