#include <doctest.h>

#include <cmath>
#include <string>

#include "hybridlab/blahut_arimoto.hpp"
#include "hybridlab/mac_bounds.hpp"
#include "hybridlab/p2p_bounds.hpp"
#include "hybridlab/relay_bounds.hpp"
#include "json_io.hpp"
#include "oracles.hpp"

using namespace hybridlab;
namespace cli = hybridlab::cli;

namespace {

std::string data(const char* name) { return std::string(HYBRIDLAB_DATA_DIR) + "/" + name; }

HybridCodeSpec uncoded_binary() {
  const std::vector<int> identity{0, 1};
  return uncoded_spec(identity, identity, 2);
}

}  // namespace

TEST_CASE("uncoded transmission is reported satisfied with distortion equal to the crossover") {
  const BoundReport r = check_thm1(Pmf::uniform(2), ConditionalPmf::bsc(0.1), DistortionMeasure::hamming(2),
                                   uncoded_binary());
  CHECK(r.satisfied);
  REQUIRE(r.expected_distortions.size() == 1);
  CHECK(r.expected_distortions[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.binding_constraint == "I(S;U) < I(U;Y)");
}

TEST_CASE("separation spec reproduces R(D) and the mutual information of the channel input") {
  const Pmf s = Pmf::uniform(2);
  const DistortionMeasure d = DistortionMeasure::hamming(2);
  const ConditionalPmf channel = ConditionalPmf::bsc(0.1);
  const auto rd = rd_function(s, d, 0.2);
  const auto cap = capacity(channel);
  const HybridCodeSpec spec =
      separation_spec(ConditionalPmf(rd.test_channel), Pmf(cap.distribution), channel.outputs());
  const BoundReport r = check_thm1(s, channel, d, spec);
  CHECK(r.value("I(S;U)") == doctest::Approx(oracle::binary_rd(0.2)).epsilon(1e-6));
  CHECK(r.value("I(U;Y)") == doctest::Approx(oracle::bsc_capacity(0.1)).epsilon(1e-6));
  CHECK(r.satisfied);
  CHECK(r.expected_distortions[0] == doctest::Approx(0.2).epsilon(1e-5));
}

TEST_CASE("point-to-point evaluator matches the dictionary oracle on a random spec") {
  const Pmf s{0.3, 0.7};
  Eigen::MatrixXd w(2, 3);
  w << 0.7, 0.2, 0.1, 0.1, 0.3, 0.6;
  const ConditionalPmf channel(w);
  Eigen::MatrixXd aux(2, 3);
  aux << 0.5, 0.3, 0.2, 0.1, 0.1, 0.8;
  Eigen::MatrixXi enc(3, 2), dec(3, 3);
  enc << 0, 1, 1, 0, 1, 1;
  dec << 0, 0, 1, 1, 0, 1, 0, 1, 1;
  const HybridCodeSpec spec{ConditionalPmf(aux), enc, dec, 0.4};
  // Axes: s, u, x, y.
  oracle::Dist p;
  double ed = 0.0;
  for (int si = 0; si < 2; ++si) {
    for (int u = 0; u < 3; ++u) {
      const int x = enc(u, si);
      for (int y = 0; y < 3; ++y) {
        const double v = s[si] * aux(si, u) * w(x, y);
        p[{si, u, x, y}] += v;
        ed += v * (dec(u, y) != si ? 1.0 : 0.0);
      }
    }
  }
  const BoundReport r = check_thm1(s, channel, DistortionMeasure::hamming(2), spec);
  CHECK(r.value("I(S;U)") == doctest::Approx(oracle::cmi(p, {0}, {1})).epsilon(1e-12));
  CHECK(r.value("I(U;Y)") == doctest::Approx(oracle::cmi(p, {1}, {3})).epsilon(1e-12));
  CHECK(r.expected_distortions[0] == doctest::Approx(ed).epsilon(1e-12));
}

TEST_CASE("spec validation rejects out-of-range tables") {
  HybridCodeSpec bad = uncoded_binary();
  bad.enc_map(0, 1) = 5;
  CHECK_THROWS_AS(check_thm1(Pmf::uniform(2), ConditionalPmf::bsc(0.1), DistortionMeasure::hamming(2), bad),
                  InputError);
}

TEST_CASE("point-to-point search is deterministic and independent of the worker count") {
  Thm1SearchOptions opts;
  opts.aux_cap = 2;
  opts.grid_resolution = 8;
  const Pmf s = Pmf::uniform(2);
  const auto a = thm1_optimize(s, ConditionalPmf::bsc(0.1), DistortionMeasure::hamming(2), 0.15, opts);
  opts.jobs = 3;
  const auto b = thm1_optimize(s, ConditionalPmf::bsc(0.1), DistortionMeasure::hamming(2), 0.15, opts);
  REQUIRE(a.spec.has_value());
  REQUIRE(b.spec.has_value());
  CHECK(a.feasible);
  CHECK(a.slack == b.slack);
  CHECK(a.spec->aux_kernel.matrix() == b.spec->aux_kernel.matrix());
  CHECK(a.spec->enc_map == b.spec->enc_map);
  CHECK(a.distortion <= 0.15 + 1e-12);
}

TEST_CASE("separation boundary for the binary symmetric case") {
  const double d = separation_boundary(Pmf::uniform(2), ConditionalPmf::bsc(0.1), DistortionMeasure::hamming(2));
  CHECK(d == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("MAC condition evaluator matches the dictionary oracle") {
  const cli::json sc = cli::load_json(data("mac_correlated.json"));
  const JointPmf sources = cli::joint2_from(sc.at("sources"));
  const MacChannel mac = cli::mac_channel_from(sc.at("mac"));
  const MacHybridSpec spec = cli::mac_spec_from(sc.at("spec"));
  const DistortionMeasure h = DistortionMeasure::hamming(2);
  const BoundReport r = thm2_region_check(sources, mac, h, h, spec);

  // Axes: s1, s2, u1, u2, x1, x2, y.
  oracle::Dist p;
  double d1 = 0.0, d2 = 0.0;
  const int ny = mac.kernel.outputs();
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int s2 = 0; s2 < 2; ++s2) {
      const std::array<int, 2> idx{s1, s2};
      for (int u1 = 0; u1 < 2; ++u1) {
        for (int u2 = 0; u2 < 2; ++u2) {
          const int x1 = spec.enc1[static_cast<std::size_t>(u1 * 2 + s1)];
          const int x2 = spec.enc2[static_cast<std::size_t>(u2 * 2 + s2)];
          for (int y = 0; y < ny; ++y) {
            const double v = sources.at(idx) * spec.aux1(s1, u1) * spec.aux2(s2, u2) * mac.kernel(x1 * 2 + x2, y);
            if (v == 0.0) continue;
            p[{s1, s2, u1, u2, x1, x2, y}] += v;
            const auto cell = static_cast<std::size_t>((u1 * 2 + u2) * ny + y);
            d1 += v * (spec.dec1[cell] != s1);
            d2 += v * (spec.dec2[cell] != s2);
          }
        }
      }
    }
  }
  REQUIRE(r.constraints.size() == 3);
  CHECK(r.constraints[0].lhs == doctest::Approx(oracle::cmi(p, {2}, {0}, {3})).epsilon(1e-12));
  CHECK(r.constraints[0].rhs == doctest::Approx(oracle::cmi(p, {2}, {6}, {3})).epsilon(1e-12));
  CHECK(r.constraints[1].lhs == doctest::Approx(oracle::cmi(p, {3}, {1}, {2})).epsilon(1e-12));
  CHECK(r.constraints[1].rhs == doctest::Approx(oracle::cmi(p, {3}, {6}, {2})).epsilon(1e-12));
  CHECK(r.constraints[2].lhs == doctest::Approx(oracle::cmi(p, {2, 3}, {0, 1})).epsilon(1e-12));
  CHECK(r.constraints[2].rhs == doctest::Approx(oracle::cmi(p, {2, 3}, {6})).epsilon(1e-12));
  CHECK(r.expected_distortions[0] == doctest::Approx(d1).epsilon(1e-12));
  CHECK(r.expected_distortions[1] == doctest::Approx(d2).epsilon(1e-12));
}

TEST_CASE("lossless and distributed substitutions reproduce the reduced forms") {
  for (const char* name : {"mac_correlated.json", "mac_noisy.json", "mac_independent.json"}) {
    CAPTURE(name);
    const cli::json sc = cli::load_json(data(name));
    const JointPmf sources = cli::joint2_from(sc.at("sources"));
    const MacChannel mac = cli::mac_channel_from(sc.at("mac"));
    const DistortionMeasure h = DistortionMeasure::hamming(2);

    const LosslessInputs in = cli::lossless_inputs_from(sc.at("cor1"));
    const BoundReport general = thm2_region_check(sources, mac, h, h, lossless_substitution(sources, mac, in));
    const BoundReport reduced = lossless_mac_check(sources, mac, in);
    REQUIRE(general.constraints.size() == reduced.constraints.size());
    for (std::size_t k = 0; k < reduced.constraints.size(); ++k) {
      CHECK(std::abs(general.constraints[k].lhs - reduced.constraints[k].lhs) <= 1e-12);
      CHECK(std::abs(general.constraints[k].rhs - reduced.constraints[k].rhs) <= 1e-12);
    }
    // Lossless decoding returns the source symbol itself.
    CHECK(general.expected_distortions[0] == doctest::Approx(0.0));

    const cli::json& c2 = sc.at("cor2");
    const DistributedCode code = cli::distributed_code_from(c2);
    const int x1 = c2.at("x1_size").get<int>(), x2 = c2.at("x2_size").get<int>();
    const BoundReport g2 = thm2_region_check(sources, MacChannel::noiseless(x1, x2), h, h,
                                             distributed_substitution(sources, code, x1, x2));
    const BoundReport r2 = distributed_lossy_check(sources, code, h, h, std::log2(x1), std::log2(x2));
    for (std::size_t k = 0; k < r2.constraints.size(); ++k) {
      CHECK(std::abs(g2.constraints[k].lhs - r2.constraints[k].lhs) <= 1e-12);
      CHECK(std::abs(g2.constraints[k].rhs - r2.constraints[k].rhs) <= 1e-12);
    }
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::abs(g2.expected_distortions[k] - r2.expected_distortions[k]) <= 1e-12);
    }
  }
}

TEST_CASE("MAC search returns a spec that passes its own check") {
  const cli::json sc = cli::load_json(data("mac_independent.json"));
  const JointPmf sources = cli::joint2_from(sc.at("sources"));
  const MacChannel mac = cli::mac_channel_from(sc.at("mac"));
  const DistortionMeasure h = DistortionMeasure::hamming(2);
  Thm2SearchOptions opts;
  opts.aux_cap = 2;
  opts.grid_resolution = 2;
  const auto r = thm2_optimize(sources, mac, h, h, 0.5, 0.5, opts);
  REQUIRE(r.spec.has_value());
  const BoundReport again = thm2_region_check(sources, mac, h, h, *r.spec);
  CHECK(again.satisfied == r.feasible);
  CHECK(again.expected_distortions[0] <= 0.5 + 1e-12);
}

namespace {

struct TwrcFixture {
  TwrcChannel ch;
  TwrcRelaySpec spec;
};

TwrcFixture twrc_fixture() {
  const cli::json sc = cli::load_json(data("twrc_discrete.json"));
  return {cli::twrc_channel_from(sc), cli::twrc_spec_from(sc.at("spec"))};
}

}  // namespace

TEST_CASE("two-way relay terms match the dictionary oracle") {
  const auto [ch, spec] = twrc_fixture();
  // Axes: x1, x2, y3, u3, x3, y1, y2.
  oracle::Dist p;
  const int ny3 = ch.y3_size(), nu = spec.u3_size();
  for (int x1 = 0; x1 < ch.x1_size; ++x1) {
    for (int x2 = 0; x2 < ch.x2_size; ++x2) {
      for (int y3 = 0; y3 < ny3; ++y3) {
        for (int u = 0; u < nu; ++u) {
          const int x3 = spec.relay_map[static_cast<std::size_t>(u * ny3 + y3)];
          for (int y1 = 0; y1 < ch.y1_size; ++y1) {
            for (int y2 = 0; y2 < ch.y2_size; ++y2) {
              const double v = spec.input1[x1] * spec.input2[x2] * ch.uplink(x1 * ch.x2_size + x2, y3) *
                               spec.relay_aux(y3, u) * ch.downlink(x3, y1 * ch.y2_size + y2);
              if (v > 0.0) p[{x1, x2, y3, u, x3, y1, y2}] += v;
            }
          }
        }
      }
    }
  }
  const BoundReport r = thm3_region_check(ch, spec);
  REQUIRE(r.constraints.size() == 4);
  CHECK(r.constraints[0].rhs == doctest::Approx(oracle::cmi(p, {0}, {6, 3}, {1})).epsilon(1e-12));
  CHECK(r.constraints[1].rhs ==
        doctest::Approx(oracle::cmi(p, {0, 3}, {1, 6}) - oracle::cmi(p, {2}, {3}, {0})).epsilon(1e-12));
  CHECK(r.constraints[2].rhs == doctest::Approx(oracle::cmi(p, {1}, {5, 3}, {0})).epsilon(1e-12));
  CHECK(r.constraints[3].rhs ==
        doctest::Approx(oracle::cmi(p, {1, 3}, {0, 5}) - oracle::cmi(p, {2}, {3}, {0})).epsilon(1e-12));

  Thm3Options alt;
  alt.r2_conditions_on_x2 = true;
  const BoundReport r2 = thm3_region_check(ch, spec, alt);
  CHECK(r2.constraints[3].rhs ==
        doctest::Approx(oracle::cmi(p, {1, 3}, {0, 5}) - oracle::cmi(p, {2}, {3}, {1})).epsilon(1e-12));
}

TEST_CASE("two-way relay rates respect the two-cut bound") {
  const auto [ch, spec] = twrc_fixture();
  const BoundReport r = thm3_region_check(ch, spec);
  const double r1 = r.value("R1"), r2 = r.value("R2");
  CHECK(r1 >= 0.0);
  CHECK(r2 >= 0.0);
  // Each rate is at most one uplink bit here.
  CHECK(r1 <= 1.0 + 1e-12);
  CHECK(r2 <= 1.0 + 1e-12);
  Thm3SearchOptions opts;
  opts.aux_cap = 2;
  opts.grid_resolution = 2;
  const auto best = thm3_optimize(ch, opts);
  REQUIRE(best.spec.has_value());
  const BoundReport again = thm3_region_check(ch, *best.spec);
  CHECK(again.value("R1") + again.value("R2") == doctest::Approx(best.sum_rate).epsilon(1e-12));
}

TEST_CASE("deterministic diamond bounds on the bundled instances") {
  const DiamondChannel ex1 = cli::diamond_channel_from(cli::load_json(data("example1.json")));
  const DetDiamondResult r = det_diamond_bounds(ex1);
  CHECK(std::abs(r.hybrid.value - std::log2(3.0)) <= 1e-9);
  CHECK(std::abs(r.adt.value - 1.5) <= 1e-6);
  CHECK(r.cutset.value >= r.hybrid.value - 1e-12);
  CHECK(r.hybrid.value >= r.adt.value - 1e-12);

  // Only relay 2 carries information: every cut is at most one bit and the
  // cut through relay 2 is exactly H(X1) = 1 at the uniform input.
  const DiamondChannel single = cli::diamond_channel_from(cli::load_json(data("diamond_single_relay.json")));
  const DetDiamondResult s = det_diamond_bounds(single);
  CHECK(s.hybrid.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.adt.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deterministic diamond rejects noisy stages") {
  DiamondChannel ch = cli::diamond_channel_from(cli::load_json(data("example1.json")));
  Eigen::MatrixXd noisy = ch.broadcast.matrix();
  noisy.row(0) << 0.9, 0.1, 0.0, 0.0;
  ch.broadcast = ConditionalPmf(noisy);
  CHECK_THROWS_AS(det_diamond_bounds(ch), InputError);
}

TEST_CASE("hybrid diamond rate with forwarding relays matches the deterministic objective") {
  const DiamondChannel ch = cli::diamond_channel_from(cli::load_json(data("example1.json")));
  const DetDiamondResult r = det_diamond_bounds(ch);
  // Rebuild the hybrid maximizer as relay kernels p(x_j | y_j) and evaluate
  // the general four-term bound with U_j = (Y_j, X_j).
  const Pmf in1(r.hybrid.input1);
  const Eigen::MatrixXd& joint_relay = r.hybrid.relay_inputs;  // rows (y2,y3), cols (x2,x3)
  Eigen::MatrixXd k2 = Eigen::MatrixXd::Zero(2, 2), k3 = Eigen::MatrixXd::Zero(2, 2);
  for (int y2 = 0; y2 < 2; ++y2) {
    for (int x2 = 0; x2 < 2; ++x2) k2(y2, x2) = joint_relay(y2 * 2, x2 * 2) + joint_relay(y2 * 2, x2 * 2 + 1);
  }
  for (int y3 = 0; y3 < 2; ++y3) {
    for (int x3 = 0; x3 < 2; ++x3) k3(y3, x3) = joint_relay(y3, x3) + joint_relay(y3, 2 + x3);
  }
  const DiamondRelaySpec spec = diamond_forward_spec(in1, ConditionalPmf(k2), ConditionalPmf(k3), 2, 2);
  const BoundReport b = thm4_bound(ch, spec);
  CHECK(b.value("R") == doctest::Approx(r.hybrid.value).epsilon(1e-9));
}
