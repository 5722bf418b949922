// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "hybridlab/gaussian_relay.hpp"
#include "hybridlab/lemma1.hpp"
#include "hybridlab/mac_bounds.hpp"
#include "hybridlab/p2p_bounds.hpp"
#include "hybridlab/p2p_sim.hpp"
#include "json_io.hpp"
#include "oracles.hpp"

using namespace hybridlab;
namespace cli = hybridlab::cli;
namespace fs = std::filesystem;

namespace {

std::string data(const char* name) { return std::string(HYBRIDLAB_DATA_DIR) + "/" + name; }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

int run_cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "  command failed (%d): %s\n", code, e.str().c_str());
  return code;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hybridlab_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

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

// Diamond network bounds on the bundled example through the command line.
Outcome criterion1() {
  const fs::path dir = scratch("c1");
  const auto t0 = std::chrono::steady_clock::now();
  if (run_cli({"bounds-diamond", data("example1.json"), "-o", (dir / "d.json").string()}) != 0) {
    return {false, "command failed"};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto j = cli::load_json((dir / "d.json").string());
  const double hybrid = j.at("hybrid").at("value").get<double>();
  const double adt = j.at("adt").at("value").get<double>();
  const double cutset = j.at("cutset").at("value").get<double>();
  const bool ok = std::abs(hybrid - std::log2(3.0)) <= 1e-9 && std::abs(adt - 1.5) <= 1e-6 &&
                  cutset >= hybrid - 1e-12 && secs < 5.0;
  return {ok, fmt("hybrid=%.9f adt=%.9f cutset=%.9f (%.2fs)", hybrid, adt, cutset, secs)};
}

// Hybrid coding beats both AF and NNC on the near half of the line network.
Outcome criterion2() {
  std::vector<double> grid;
  for (int k = 1; k <= 9; ++k) grid.push_back(0.05 * k);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = fig8_sweep(10.0, grid, 3.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double min_gap = 1e300;
  bool cutset_dominates = true;
  for (const auto& r : rows) {
    min_gap = std::min(min_gap, r.hc - std::max(r.nnc, r.af));
    cutset_dominates = cutset_dominates && r.cutset >= std::max({r.hc, r.nnc, r.af}) - 1e-12;
  }
  const bool ok = min_gap >= 1e-3 && cutset_dominates && secs < 30.0;
  return {ok, fmt("min(HC - max(NNC, AF))=%.4f cutset dominates=%g (%.2fs)", min_gap, cutset_dominates ? 1.0 : 0.0,
                  secs)};
}

// The general Gaussian rates reduce to NNC, the special hybrid scheme and AF.
Outcome criterion3() {
  std::mt19937_64 gen(20130611);
  std::uniform_real_distribution<double> logu(-1.0, 2.0), logs(-2.0, 3.0);
  double d_nnc = 0.0, d_hc = 0.0, d_af = 0.0;
  for (int t = 0; t < 100; ++t) {
    const GaussianTwrcParams ch{std::pow(10.0, logu(gen)), std::pow(10.0, logu(gen)), std::pow(10.0, logu(gen)),
                                std::pow(10.0, logu(gen))};
    const double sig2 = std::pow(10.0, logs(gen));
    const RatePoint g0 = hc_general_rates(ch, {0.0, 0.0, sig2});
    const RatePoint n0 = nnc_rates(ch, sig2);
    d_nnc = std::max({d_nnc, std::abs(g0.r1 - n0.r1), std::abs(g0.r2 - n0.r2)});
    const RatePoint g1 = hc_general_rates(ch, {0.0, 1.0, sig2});
    const RatePoint h1 = hc_special_rates(ch, sig2);
    d_hc = std::max({d_hc, std::abs(g1.r1 - h1.r1), std::abs(g1.r2 - h1.r2)});
    const RatePoint ga = hc_general_rates(ch, {1.0, 0.0, 1e8});
    const RatePoint a = af_rates(ch);
    d_af = std::max({d_af, std::abs(ga.r1 - a.r1), std::abs(ga.r2 - a.r2)});
  }
  const bool ok = d_nnc <= 1e-9 && d_hc <= 1e-9 && d_af <= 1e-3;
  return {ok, fmt("max |diff| nnc=%.2e hc_special=%.2e af=%.2e", d_nnc, d_hc, d_af)};
}

// Search over hybrid codes on BSC(0.1) with a uniform bit meets the separation boundary.
Outcome criterion4() {
  const P2pScenario sc = load_p2p("bsc_uncoded.json");
  const auto t0 = std::chrono::steady_clock::now();
  const double d_sep = separation_boundary(sc.source, sc.channel, sc.distortion);
  // Closed form: 1 - h(D) = 1 - h(p) gives D = p.
  const bool boundary_ok = std::abs(d_sep - 0.1) <= 1e-6;
  Thm1SearchOptions opts;
  opts.aux_cap = 4;
  opts.grid_resolution = 12;
  const Thm1SearchResult best = thm1_min_distortion(sc.source, sc.channel, sc.distortion, opts);
  const Thm1SearchResult below = thm1_optimize(sc.source, sc.channel, sc.distortion, d_sep - 0.02, opts);
  const Thm1SearchResult above = thm1_optimize(sc.source, sc.channel, sc.distortion, d_sep + 0.02, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = boundary_ok && best.feasible && std::abs(best.distortion - d_sep) <= 0.02 && !below.feasible &&
                  above.feasible && secs < 60.0;
  return {ok, fmt("D_sep=%.6f D_min=%.6f feasible at D_sep-0.02=%g at D_sep+0.02=%g", d_sep, best.distortion,
                  below.feasible ? 1.0 : 0.0, above.feasible ? 1.0 : 0.0) +
                  fmt(" (%.2fs)", secs)};
}

double max_report_difference(const BoundReport& a, const BoundReport& b) {
  if (a.constraints.size() != b.constraints.size()) return 1e300;
  double d = 0.0;
  for (std::size_t k = 0; k < a.constraints.size(); ++k) {
    d = std::max({d, std::abs(a.constraints[k].lhs - b.constraints[k].lhs),
                  std::abs(a.constraints[k].rhs - b.constraints[k].rhs)});
  }
  for (std::size_t k = 0; k < std::min(a.expected_distortions.size(), b.expected_distortions.size()); ++k) {
    d = std::max(d, std::abs(a.expected_distortions[k] - b.expected_distortions[k]));
  }
  return d;
}

// The lossless and distributed-lossy special cases agree with the general MAC condition.
Outcome criterion5() {
  double worst = 0.0;
  for (const char* name : {"mac_correlated.json", "mac_noisy.json", "mac_independent.json"}) {
    const auto j = cli::load_json(data(name));
    const JointPmf sources = cli::joint2_from(j.at("sources"));
    const MacChannel mac = cli::mac_channel_from(j.at("mac"));
    const int n1 = sources.dims()[0], n2 = sources.dims()[1];
    const DistortionMeasure d1 = DistortionMeasure::hamming(n1), d2 = DistortionMeasure::hamming(n2);

    const LosslessInputs in = cli::lossless_inputs_from(j.at("cor1"));
    const BoundReport lossless = lossless_mac_check(sources, mac, in);
    const BoundReport via_general = thm2_region_check(sources, mac, d1, d2, lossless_substitution(sources, mac, in));
    worst = std::max(worst, max_report_difference(lossless, via_general));

    const auto& c2 = j.at("cor2");
    const DistributedCode code = cli::distributed_code_from(c2);
    const int x1 = c2.at("x1_size").get<int>(), x2 = c2.at("x2_size").get<int>();
    const BoundReport general = thm2_region_check(sources, MacChannel::noiseless(x1, x2), d1, d2,
                                                  distributed_substitution(sources, code, x1, x2));
    const BoundReport reduced =
        distributed_lossy_check(sources, code, d1, d2, std::log2(static_cast<double>(x1)), std::log2(static_cast<double>(x2)));
    worst = std::max(worst, max_report_difference(reduced, general));
  }
  return {worst <= 1e-12, fmt("max |difference| over 3 scenarios = %.2e", worst)};
}

// Uncoded transmission over BSC(0.1) reaches distortion 0.1.
Outcome criterion6() {
  const P2pScenario sc = load_p2p("bsc_uncoded.json");
  SimConfig cfg;
  cfg.n = 1000;
  cfg.trials = 100;
  cfg.epsilon = 0.3;
  cfg.epsilon_prime = 0.2;
  const P2pReport r = run_p2p(sc.source, sc.channel, sc.distortion, sc.spec, cfg);
  const double tol = 3.0 * std::sqrt(0.09 / (1000.0 * 100.0));
  return {std::abs(r.mean_distortion - 0.1) <= tol, fmt("mean distortion %.5f, tolerance %.5f", r.mean_distortion, tol)};
}

std::vector<P2pReport> sweep(const P2pScenario& sc, const std::vector<int>& ns, int trials) {
  std::vector<P2pReport> out;
  for (int n : ns) {
    SimConfig cfg;
    cfg.n = n;
    cfg.trials = trials;
    cfg.epsilon = 0.9;
    cfg.epsilon_prime = 0.5;
    out.push_back(run_p2p(sc.source, sc.channel, sc.distortion, sc.spec, cfg));
  }
  return out;
}

// Error probability falls with n when the condition holds with margin; covering
// fails with growing n when the codebook rate is below I(U;S).
Outcome criterion7() {
  const P2pScenario good = load_p2p("hybrid_trend.json");
  const BoundReport rep = check_thm1(good.source, good.channel, good.distortion, good.spec);
  const double margin = rep.value("I(U;Y)") - rep.value("I(S;U)");
  const auto trend = sweep(good, {8, 12, 16, 20}, 4000);
  bool decreasing = true;
  std::string ps;
  for (std::size_t k = 0; k < trend.size(); ++k) {
    ps += fmt("%.4f ", trend[k].error.p);
    if (k + 1 < trend.size()) {
      decreasing = decreasing && trend[k + 1].error.p <=
                                     trend[k].error.p + trend[k].error.half_width + trend[k + 1].error.half_width;
    }
  }
  const P2pScenario bad = load_p2p("under_rate.json");
  const auto under = sweep(bad, {16, 24, 32, 40}, 2000);
  bool increasing = true;
  for (std::size_t k = 0; k + 1 < under.size(); ++k) {
    increasing = increasing && under[k + 1].e1.p >= under[k].e1.p - under[k].e1.half_width - under[k + 1].e1.half_width;
  }
  const double last = under.back().e1.p;
  const bool ok = margin >= 0.15 && decreasing && increasing && last >= 0.95;
  return {ok, fmt("margin %.3f; P(E) ", margin) + ps + fmt("; under-rate P(E1) at n=40 %.4f", last)};
}

// Conditional law of a non-selected codeword: exact at n = 2, ratio bound at n = 4.
Outcome criterion8() {
  Eigen::VectorXd diag(4);
  diag << 0.5, 0.0, 0.0, 0.5;
  const JointPmf joint({2, 2}, diag);
  const std::vector<std::vector<double>> p_su{{0.5, 0.0}, {0.0, 0.5}};
  const auto t0 = std::chrono::steady_clock::now();

  const auto exact = oracle::conditional_second_codeword(p_su, 2, 2, 0.25);
  double threshold = 0.0;
  for (const auto& row : exact) {
    for (double v : row) threshold = std::max(threshold, v / 0.25);  // p_U(u^2) = 1/4
  }
  Lemma1Config small;
  small.n = 2;
  small.rate = 0.5;
  small.epsilon_prime = 0.25;
  small.outer_trials = 2'000'000;
  small.min_count = 1;
  const Lemma1Report r2 = lemma1_check(joint, small);
  int checked = 0, outside = 0;
  for (const auto& cell : r2.cells) {
    const auto& ref = exact[static_cast<std::size_t>(cell.u_tilde * 4 + cell.s)];
    if (ref.size() != cell.counts.size()) return {false, "cell with zero exact probability was sampled"};
    for (std::size_t u = 0; u < ref.size(); ++u) {
      const double phat = static_cast<double>(cell.counts[u]) / static_cast<double>(cell.total);
      const double sd = std::sqrt(ref[u] * (1.0 - ref[u]) / static_cast<double>(cell.total));
      ++checked;
      if (std::abs(phat - ref[u]) > 3.0 * sd + 1e-12) ++outside;
    }
  }

  Lemma1Config big = small;
  big.n = 4;
  big.outer_trials = 20'000'000;
  big.min_count = 10'000;
  const Lemma1Report r4 = lemma1_check(joint, big);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = checked > 0 && outside == 0 && r4.conclusive && r4.max_ratio < threshold && secs < 120.0;
  return {ok, fmt("n=2: %g of %g outside 3 sigma; threshold %.4f; n=4 max ratio %.4f", outside, checked, threshold,
                  r4.max_ratio) +
                  fmt(" (%.2fs)", secs)};
}

// Every subcommand replays byte-identically with a different worker count.
Outcome criterion9() {
  const fs::path dir = scratch("c9");
  auto o = [&](const char* name) { return (dir / name).string(); };
  const std::vector<std::vector<std::string>> runs{
      {"bounds-twrc", data("fig8.json"), "--sweep", "-o", o("sweep.json")},
      {"bounds-twrc", data("fig8.json"), "--r", "0.3", "-o", o("single.json")},
      {"bounds-diamond", data("example1.json"), "-o", o("diamond.json")},
      {"region-mac", data("mac_noisy.json"), "--cor1", "--cor2", "-o", o("mac.json")},
      {"check-thm1", data("bsc_uncoded.json"), "-o", o("thm1.json")},
      {"check-thm1", data("bsc_uncoded.json"), "--optimize", "--target-d", "0.12", "--aux-cap", "2", "--grid", "6",
       "-o", o("thm1opt.json")},
      {"check-thm3", data("twrc_discrete.json"), "-o", o("thm3.json")},
      {"check-thm3", data("twrc_discrete.json"), "--optimize", "-o", o("thm3opt.json")},
      {"simulate", data("hybrid_trend.json"), "--trials", "500", "--trials-csv", o("trials.csv"), "-o",
       o("sim.json")},
      {"simulate", data("mac_noisy.json"), "--n", "8", "--trials", "200", "-o", o("macsim.json")},
      {"simulate", data("lemma1.json"), "--lemma1", "--trials", "200000", "-o", o("lemma1.json")},
  };
  int identical = 0, different = 0, failed = 0;
  auto replay = [&](const std::string& manifest) {
    std::string out;
    if (run_cli({"replay", manifest, "--jobs", "3"}, &out) != 0) ++failed;
    for (auto p = out.find("identical"); p != std::string::npos; p = out.find("identical", p + 1)) ++identical;
    for (auto p = out.find("DIFFERENT"); p != std::string::npos; p = out.find("DIFFERENT", p + 1)) ++different;
  };
  for (auto args : runs) {
    args.push_back("--jobs");
    args.push_back("1");
    if (run_cli(args) != 0) {
      ++failed;
      continue;
    }
    const auto it = std::find(args.begin(), args.end(), "-o");
    replay(*(it + 1) + ".manifest.json");
  }
  // plot consumes the sweep CSV written above.
  if (run_cli({"plot", o("sweep.csv"), "-o", o("sweep.svg"), "--title", "sum rate"}) != 0) {
    ++failed;
  } else {
    replay(o("sweep.svg") + ".manifest.json");
  }
  const bool ok = failed == 0 && different == 0 && identical >= static_cast<int>(runs.size()) + 1;
  return {ok, fmt("%g outputs identical, %g different, %g failed commands", identical, different, failed)};
}

}  // namespace

int main() {
  ::unsetenv("HYBRIDLAB_SEED");
  struct Criterion {
    int id;
    std::function<Outcome()> fn;
    double limit_seconds;  // whole-criterion wall clock budget
  };
  const double none = 1e300;
  const std::vector<Criterion> criteria{
      {1, criterion1, 5.0},  {2, criterion2, 30.0}, {3, criterion3, 5.0},  {4, criterion4, 60.0}, {5, criterion5, 10.0},
      {6, criterion6, 10.0}, {7, criterion7, 300.0}, {8, criterion8, 120.0}, {9, criterion9, none}};
  int failures = 0;
  for (const auto& [id, fn, limit] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= limit) {
      r.pass = false;
      r.detail += fmt(" over time budget %.0fs", limit);
    }
    std::printf("criterion %d: %s  %s  [%.1fs]\n", id, r.pass ? "PASS" : "FAIL", r.detail.c_str(), secs);
    std::fflush(stdout);
    if (!r.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
