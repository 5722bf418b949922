#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "hybridlab/blahut_arimoto.hpp"
#include "hybridlab/codebook.hpp"
#include "json_io.hpp"
#include "svg_plot.hpp"

namespace hybridlab::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw InvariantError("sha256: digest computation failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

namespace {

// Option names whose values are files read or written by a subcommand.
const std::set<std::string> kInputOptions{"scenario", "spec", "csv_input", "manifest_file"};
const std::set<std::string> kOutputOptions{"output", "csv", "trials-csv"};
// Options resolved separately and re-supplied on replay.
const std::set<std::string> kRuntimeOptions{"seed", "jobs", "manifest", "help", "out-dir"};

struct OutputFile {
  std::string option;
  std::string path;
};

struct RunContext {
  std::uint64_t seed = kDefaultSeed;
  std::string seed_source = "default";
  int jobs = 1;
  std::vector<OutputFile> outputs;
  std::ostream* out = nullptr;

  void write(const std::string& option, const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot write " + path);
    f << content;
    if (!f) throw InputError("write failed for " + path);
    outputs.push_back({option, path});
  }
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string fmt6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Scenario-file value with a command-line override and a default.
template <typename T>
T pick(const CLI::Option* flag, const T& flag_value, const json& block, const char* key, T fallback) {
  if (flag != nullptr && flag->count() > 0) return flag_value;
  if (block.is_object() && block.contains(key)) return block.at(key).get<T>();
  return fallback;
}

const json& block_or_empty(const json& j, const char* key) {
  static const json empty = json::object();
  return j.is_object() && j.contains(key) ? j.at(key) : empty;
}

std::string with_extension(const std::string& path, const char* ext) {
  fs::path p(path);
  p.replace_extension(ext);
  return p.string();
}

// ---------------------------------------------------------------------------
// bounds-twrc

struct TwrcOptions {
  std::string scenario;
  std::string output;
  std::string csv;
  bool sweep = false;
  bool beta_in_numerator = false;
  std::vector<double> r;
  std::vector<std::string> schemes;
  CLI::Option* r_opt = nullptr;
};

SearchConfig search_config_from(const json& scenario, const RunContext& ctx) {
  const json& s = block_or_empty(scenario, "search");
  SearchConfig cfg;
  cfg.sigma_grid_points = pick<int>(nullptr, 0, s, "sigma_grid_points", cfg.sigma_grid_points);
  cfg.sigma_min = pick<double>(nullptr, 0, s, "sigma_min", cfg.sigma_min);
  cfg.sigma_max = pick<double>(nullptr, 0, s, "sigma_max", cfg.sigma_max);
  cfg.ab_step = pick<double>(nullptr, 0, s, "ab_step", cfg.ab_step);
  cfg.restarts = pick<int>(nullptr, 0, s, "restarts", cfg.restarts);
  cfg.descent_rounds = pick<int>(nullptr, 0, s, "descent_rounds", cfg.descent_rounds);
  cfg.seed = ctx.seed;
  cfg.jobs = ctx.jobs;
  cfg.validate();
  return cfg;
}

void check_relay_position(double r) {
  if (!(r > 0.0 && r < 1.0)) {
    throw InputError("relay position r must lie in (0, 1), got " + fmt6(r));
  }
}

std::vector<double> sweep_grid(const TwrcOptions& o, const json& sweep) {
  std::vector<double> grid;
  if (!o.r.empty()) {
    grid = o.r;
  } else if (sweep.contains("r")) {
    grid = sweep.at("r").get<std::vector<double>>();
  } else {
    const double start = pick<double>(nullptr, 0, sweep, "r_start", 0.05);
    const double stop = pick<double>(nullptr, 0, sweep, "r_stop", 0.95);
    const double step = pick<double>(nullptr, 0, sweep, "r_step", 0.05);
    if (!(step > 0.0) || stop < start) throw InputError("sweep: need r_step > 0 and r_stop >= r_start");
    const auto count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
    // Rounded to 1e-9 so that the CSV shows clean grid values.
    for (int k = 0; k < count; ++k) grid.push_back(std::round((start + k * step) * 1e9) / 1e9);
  }
  if (grid.empty()) throw InputError("sweep: empty r grid");
  for (double r : grid) check_relay_position(r);
  return grid;
}

void cmd_bounds_twrc(const TwrcOptions& o, RunContext& ctx) {
  const json sc = load_json(o.scenario);
  require_kind(sc, "twrc_gaussian");
  const SearchConfig cfg = search_config_from(sc, ctx);
  const std::string csv_path = o.csv.empty() ? with_extension(o.output, ".csv") : o.csv;
  const double power = pick<double>(nullptr, 0, sc, "power", 10.0);
  const double exponent = pick<double>(nullptr, 0, sc, "path_loss_exponent", 3.0);

  if (o.sweep) {
    const json& sw = block_or_empty(sc, "sweep");
    const double p = pick<double>(nullptr, 0, sw, "power", power);
    const double e = pick<double>(nullptr, 0, sw, "path_loss_exponent", exponent);
    const std::vector<double> grid = sweep_grid(o, sw);
    const std::vector<Fig8Row> rows = fig8_sweep(p, grid, e, cfg);
    json jrows = json::array();
    for (const auto& row : rows) {
      jrows.push_back({{"r", row.r},
                       {"R_CS", number(row.cutset)},
                       {"R_AF", number(row.af)},
                       {"R_NNC", number(row.nnc)},
                       {"R_HC", number(row.hc)}});
    }
    ctx.write("csv", csv_path, fig8_csv(rows));
    ctx.write("output", o.output,
              dump({{"kind", "twrc_gaussian_sweep"}, {"power", p}, {"path_loss_exponent", e}, {"rows", jrows}}));
    *ctx.out << "sweep: " << rows.size() << " rows -> " << csv_path << "\n";
    return;
  }

  std::vector<Scheme> schemes;
  std::vector<std::string> names = o.schemes;
  if (names.empty() && sc.contains("schemes")) names = sc.at("schemes").get<std::vector<std::string>>();
  if (names.empty()) names = {"cutset", "af", "nnc", "hc_special", "hc_general"};
  for (const auto& n : names) schemes.push_back(parse_scheme(n));
  HcGeneralOptions hopt;
  hopt.beta_in_numerator = o.beta_in_numerator || pick<bool>(nullptr, false, sc, "beta_in_numerator", false);

  struct Channel {
    std::optional<double> r;
    GaussianTwrcParams params;
  };
  std::vector<Channel> channels;
  if (!o.r.empty()) {
    for (double r : o.r) {
      check_relay_position(r);
      channels.push_back({r, GaussianTwrcParams::line_network(power, r, exponent)});
    }
  } else {
    std::optional<double> r;
    if (sc.contains("relay_position")) {
      r = sc.at("relay_position").get<double>();
      check_relay_position(*r);
    }
    channels.push_back({r, gaussian_params_from(sc)});
  }

  json points = json::array();
  std::string csv = "r,scheme,R1,R2,sum,alpha,beta,sigma2\n";
  for (const auto& ch : channels) {
    json results = json::array();
    for (Scheme s : schemes) {
      const OptimizedScheme best = optimize_scheme(ch.params, s, cfg, hopt);
      results.push_back(to_json(best));
      csv += (ch.r ? fmt6(*ch.r) : std::string()) + "," + scheme_name(s) + "," + fmt6(best.rates.r1) + "," +
             fmt6(best.rates.r2) + "," + fmt6(best.sum_rate) + "," + fmt6(best.params.alpha) + "," +
             fmt6(best.params.beta) + "," + fmt6(best.params.sigma2) + "\n";
      *ctx.out << scheme_name(s) << ": R1=" << fmt6(best.rates.r1) << " R2=" << fmt6(best.rates.r2) << "\n";
    }
    const GaussianTwrcParams& p = ch.params;
    points.push_back({{"r", ch.r ? json(*ch.r) : json(nullptr)},
                      {"snr", {{"s13", p.s13}, {"s23", p.s23}, {"s31", p.s31}, {"s32", p.s32}}},
                      {"schemes", results}});
  }
  ctx.write("csv", csv_path, csv);
  ctx.write("output", o.output,
            dump({{"kind", "twrc_gaussian"}, {"beta_in_numerator", hopt.beta_in_numerator}, {"points", points}}));
}

// ---------------------------------------------------------------------------
// bounds-diamond

struct DiamondOptions {
  std::string scenario;
  std::string output;
  int grid = 0;
  CLI::Option* grid_opt = nullptr;
};

void cmd_bounds_diamond(const DiamondOptions& o, RunContext& ctx) {
  const json sc = load_json(o.scenario);
  require_kind(sc, "diamond");
  const DiamondChannel ch = diamond_channel_from(sc);
  DetDiamondOptions opts;
  opts.grid_resolution = pick<int>(o.grid_opt, o.grid, sc, "grid_resolution", 12);
  opts.jobs = ctx.jobs;
  const DetDiamondResult r = det_diamond_bounds(ch, opts);
  ctx.write("output", o.output,
            dump({{"kind", "diamond"},
                  {"grid_resolution", opts.grid_resolution},
                  {"hybrid", to_json(r.hybrid)},
                  {"adt", to_json(r.adt)},
                  {"cutset", to_json(r.cutset)}}));
  char buf[160];
  std::snprintf(buf, sizeof buf, "hybrid=%.9f adt=%.9f cutset=%.9f\n", r.hybrid.value, r.adt.value,
                r.cutset.value);
  *ctx.out << buf;
}

// ---------------------------------------------------------------------------
// region-mac

struct MacOptions {
  std::string scenario;
  std::string spec;
  std::string output;
  bool cor1 = false;
  bool cor2 = false;
  bool optimize = false;
  double target1 = 0.0, target2 = 0.0;
  int aux_cap = 2, grid = 4;
  CLI::Option *target1_opt = nullptr, *target2_opt = nullptr, *aux_opt = nullptr, *grid_opt = nullptr;
};

// Constraint-by-constraint differences between a reduced-form report and the
// general evaluator applied to the substituted scheme.
json compare_reports(const BoundReport& reduced, const BoundReport& general) {
  if (reduced.constraints.size() != general.constraints.size()) {
    throw InvariantError("report comparison: constraint counts differ");
  }
  double max_diff = 0.0;
  json rows = json::array();
  for (std::size_t k = 0; k < reduced.constraints.size(); ++k) {
    const auto& a = reduced.constraints[k];
    const auto& b = general.constraints[k];
    const double d = std::max(std::abs(a.lhs - b.lhs), std::abs(a.rhs - b.rhs));
    max_diff = std::max(max_diff, d);
    rows.push_back({{"reduced", a.name}, {"general", b.name}, {"difference", d}});
  }
  for (std::size_t k = 0; k < reduced.expected_distortions.size() && k < general.expected_distortions.size(); ++k) {
    max_diff = std::max(max_diff, std::abs(reduced.expected_distortions[k] - general.expected_distortions[k]));
  }
  return {{"pairs", rows}, {"max_abs_difference", max_diff}};
}

struct MacScenario {
  JointPmf sources;
  MacChannel mac;
  DistortionMeasure d1;
  DistortionMeasure d2;
};

MacScenario mac_scenario_from(const json& sc) {
  require_kind(sc, "mac");
  JointPmf sources = joint2_from(require(sc, "sources"));
  MacChannel mac = mac_channel_from(require(sc, "mac"));
  const json hamming = "hamming";
  DistortionMeasure d1 = distortion_from(sc.contains("distortion1") ? sc.at("distortion1") : hamming,
                                         sources.dims()[0]);
  DistortionMeasure d2 = distortion_from(sc.contains("distortion2") ? sc.at("distortion2") : hamming,
                                         sources.dims()[1]);
  return {std::move(sources), std::move(mac), std::move(d1), std::move(d2)};
}

void cmd_region_mac(const MacOptions& o, RunContext& ctx) {
  const json sc = load_json(o.scenario);
  const MacScenario m = mac_scenario_from(sc);
  json out = {{"kind", "mac"}};
  bool did_something = false;

  if (!o.optimize && (!o.spec.empty() || sc.contains("spec"))) {
    const MacHybridSpec spec = mac_spec_from(o.spec.empty() ? sc.at("spec") : load_json(o.spec));
    const BoundReport r = thm2_region_check(m.sources, m.mac, m.d1, m.d2, spec);
    out["hybrid"] = to_json(r);
    *ctx.out << "hybrid conditions " << (r.satisfied ? "hold" : "fail") << ", binding " << r.binding_constraint
             << "\n";
    did_something = true;
  }
  if (o.cor1) {
    const LosslessInputs in = lossless_inputs_from(require(sc, "cor1"));
    const MacHybridSpec sub = lossless_substitution(m.sources, m.mac, in);
    const BoundReport general =
        thm2_region_check(m.sources, m.mac, DistortionMeasure::hamming(m.sources.dims()[0]),
                          DistortionMeasure::hamming(m.sources.dims()[1]), sub);
    const BoundReport reduced = lossless_mac_check(m.sources, m.mac, in);
    const json cmp = compare_reports(reduced, general);
    out["lossless"] = {{"reduced", to_json(reduced)}, {"general", to_json(general)}, {"comparison", cmp}};
    *ctx.out << "lossless substitution: max difference " << cmp.at("max_abs_difference").get<double>() << "\n";
    did_something = true;
  }
  if (o.cor2) {
    const json& block = require(sc, "cor2");
    const DistributedCode code = distributed_code_from(block);
    const int x1 = require(block, "x1_size").get<int>(), x2 = require(block, "x2_size").get<int>();
    const MacHybridSpec sub = distributed_substitution(m.sources, code, x1, x2);
    const BoundReport general =
        thm2_region_check(m.sources, MacChannel::noiseless(x1, x2), m.d1, m.d2, sub);
    const BoundReport reduced =
        distributed_lossy_check(m.sources, code, m.d1, m.d2, std::log2(x1), std::log2(x2));
    const json cmp = compare_reports(reduced, general);
    out["distributed"] = {{"reduced", to_json(reduced)}, {"general", to_json(general)}, {"comparison", cmp}};
    *ctx.out << "distributed substitution: max difference " << cmp.at("max_abs_difference").get<double>()
             << "\n";
    did_something = true;
  }
  if (o.optimize) {
    const json& s = block_or_empty(sc, "search");
    Thm2SearchOptions opts;
    opts.aux_cap = pick<int>(o.aux_opt, o.aux_cap, s, "aux_cap", 2);
    opts.grid_resolution = pick<int>(o.grid_opt, o.grid, s, "grid_resolution", 4);
    opts.jobs = ctx.jobs;
    const double t1 = pick<double>(o.target1_opt, o.target1, s, "target1", 1.0);
    const double t2 = pick<double>(o.target2_opt, o.target2, s, "target2", 1.0);
    const Thm2SearchResult r = thm2_optimize(m.sources, m.mac, m.d1, m.d2, t1, t2, opts);
    out["optimize"] = {{"feasible", r.feasible},
                       {"min_slack", number(r.min_slack)},
                       {"candidates", r.candidates},
                       {"aux_cap", r.aux_cap},
                       {"targets", {t1, t2}},
                       {"spec", r.spec ? to_json(*r.spec) : json(nullptr)},
                       {"report", to_json(r.report)}};
    *ctx.out << "optimize: " << (r.feasible ? "feasible" : "infeasible") << "\n";
    did_something = true;
  }
  if (!did_something) throw InputError("region-mac: give a spec, --cor1, --cor2 or --optimize");
  ctx.write("output", o.output, dump(out));
}

// ---------------------------------------------------------------------------
// check-thm1

struct Thm1Options {
  std::string scenario;
  std::string spec;
  std::string output;
  bool optimize = false;
  bool min_distortion = false;
  bool separation = false;
  double target = 0.0;
  int aux_cap = 0, grid = 12;
  CLI::Option *target_opt = nullptr, *aux_opt = nullptr, *grid_opt = nullptr;
};

struct P2pScenario {
  Pmf source;
  ConditionalPmf channel;
  DistortionMeasure d;
};

P2pScenario p2p_scenario_from(const json& sc) {
  require_kind(sc, "p2p");
  Pmf source = pmf_from(require(sc, "source"));
  ConditionalPmf channel = kernel_from(require(sc, "channel"));
  DistortionMeasure d = distortion_from(sc.contains("distortion") ? sc.at("distortion") : json("hamming"),
                                        source.size());
  return {std::move(source), std::move(channel), std::move(d)};
}

json thm1_result_json(const Thm1SearchResult& r) {
  return {{"feasible", r.feasible},
          {"slack", number(r.slack)},
          {"distortion", number(r.distortion)},
          {"aux_cap", r.aux_cap},
          {"candidates", r.candidates},
          {"spec", r.spec ? to_json(*r.spec) : json(nullptr)},
          {"report", to_json(r.report)}};
}

void cmd_check_thm1(const Thm1Options& o, RunContext& ctx) {
  const json sc = load_json(o.scenario);
  const P2pScenario p = p2p_scenario_from(sc);
  const json& s = block_or_empty(sc, "search");
  Thm1SearchOptions opts;
  opts.aux_cap = pick<int>(o.aux_opt, o.aux_cap, s, "aux_cap", 0);
  opts.grid_resolution = pick<int>(o.grid_opt, o.grid, s, "grid_resolution", 12);
  opts.jobs = ctx.jobs;
  json out = {{"kind", "p2p"}};

  if (o.optimize) {
    if ((o.target_opt == nullptr || o.target_opt->count() == 0) && !s.contains("target_distortion")) {
      throw InputError("check-thm1 --optimize needs --target-d or search.target_distortion");
    }
    const double target = pick<double>(o.target_opt, o.target, s, "target_distortion", 0.0);
    const Thm1SearchResult r = thm1_optimize(p.source, p.channel, p.d, target, opts);
    out["optimize"] = thm1_result_json(r);
    out["optimize"]["target_distortion"] = target;
    *ctx.out << "optimize: " << (r.feasible ? "feasible" : "infeasible") << " slack=" << fmt6(r.slack) << "\n";
  } else if (o.min_distortion) {
    const Thm1SearchResult r = thm1_min_distortion(p.source, p.channel, p.d, opts);
    out["min_distortion"] = thm1_result_json(r);
    *ctx.out << "min distortion " << fmt6(r.distortion) << "\n";
  } else {
    if (o.spec.empty() && !sc.contains("spec")) throw InputError("check-thm1: no spec given");
    const HybridCodeSpec spec = p2p_spec_from(o.spec.empty() ? sc.at("spec") : load_json(o.spec));
    const BoundReport r = check_thm1(p.source, p.channel, p.d, spec);
    out["report"] = to_json(r);
    *ctx.out << "condition " << (r.satisfied ? "holds" : "fails") << ", E d = "
             << fmt6(r.expected_distortions.empty() ? 0.0 : r.expected_distortions.front()) << "\n";
  }
  if (o.separation) {
    const double cap = capacity(p.channel).value;
    out["separation"] = {{"capacity", cap}, {"boundary_distortion", separation_boundary(p.source, p.channel, p.d)}};
  }
  ctx.write("output", o.output, dump(out));
}

// ---------------------------------------------------------------------------
// check-thm3

struct Thm3CliOptions {
  std::string scenario;
  std::string spec;
  std::string output;
  bool optimize = false;
  bool r2_on_x2 = false;
  double rate1 = 0.0, rate2 = 0.0;
  int aux_cap = 2, grid = 4;
  CLI::Option *aux_opt = nullptr, *grid_opt = nullptr;
};

void cmd_check_thm3(const Thm3CliOptions& o, RunContext& ctx) {
  const json sc = load_json(o.scenario);
  require_kind(sc, "twrc_discrete");
  const TwrcChannel ch = twrc_channel_from(sc);
  json out = {{"kind", "twrc_discrete"}, {"r2_conditions_on_x2", o.r2_on_x2}};
  if (o.optimize) {
    const json& s = block_or_empty(sc, "search");
    Thm3SearchOptions opts;
    opts.aux_cap = pick<int>(o.aux_opt, o.aux_cap, s, "aux_cap", 2);
    opts.grid_resolution = pick<int>(o.grid_opt, o.grid, s, "grid_resolution", 4);
    opts.r2_conditions_on_x2 = o.r2_on_x2;
    opts.jobs = ctx.jobs;
    const Thm3SearchResult r = thm3_optimize(ch, opts);
    out["optimize"] = {{"sum_rate", number(r.sum_rate)},
                       {"candidates", r.candidates},
                       {"spec", r.spec ? to_json(*r.spec) : json(nullptr)},
                       {"report", to_json(r.report)}};
    *ctx.out << "optimize: sum rate " << fmt6(r.sum_rate) << "\n";
  } else {
    if (o.spec.empty() && !sc.contains("spec")) throw InputError("check-thm3: no spec given");
    const TwrcRelaySpec spec = twrc_spec_from(o.spec.empty() ? sc.at("spec") : load_json(o.spec));
    Thm3Options opts;
    opts.rate1 = o.rate1;
    opts.rate2 = o.rate2;
    opts.r2_conditions_on_x2 = o.r2_on_x2;
    const BoundReport r = thm3_region_check(ch, spec, opts);
    out["report"] = to_json(r);
    *ctx.out << "R1=" << fmt6(r.value("R1")) << " R2=" << fmt6(r.value("R2")) << "\n";
  }
  if (sc.contains("nnc")) {
    const json& b = sc.at("nnc");
    out["nnc"] = to_json(twrc_nnc_check(ch, pmf_from(require(b, "input1")), pmf_from(require(b, "input2")),
                                        kernel_from(require(b, "quantizer")), pmf_from(require(b, "relay_input"))));
  }
  ctx.write("output", o.output, dump(out));
}

// ---------------------------------------------------------------------------
// simulate

struct SimOptions {
  std::string scenario;
  std::string spec;
  std::string output;
  std::string trials_csv;
  std::vector<int> n;
  int trials = 0;
  double epsilon = 0.0, epsilon_prime = 0.0;
  std::int64_t max_symbols = kDefaultCodebookCap;
  bool lemma1 = false;
  CLI::Option *trials_opt = nullptr, *eps_opt = nullptr, *epsp_opt = nullptr, *cap_opt = nullptr;
};

SimConfig sim_config_from(const SimOptions& o, const json& sim, const RunContext& ctx) {
  SimConfig cfg;
  cfg.trials = pick<int>(o.trials_opt, o.trials, sim, "trials", cfg.trials);
  cfg.epsilon = pick<double>(o.eps_opt, o.epsilon, sim, "epsilon", cfg.epsilon);
  cfg.epsilon_prime = pick<double>(o.epsp_opt, o.epsilon_prime, sim, "epsilon_prime", cfg.epsilon_prime);
  cfg.max_codebook_symbols = pick<std::int64_t>(o.cap_opt, o.max_symbols, sim, "max_codebook_symbols",
                                                cfg.max_codebook_symbols);
  cfg.seed = ctx.seed;
  cfg.jobs = ctx.jobs;
  cfg.keep_trials = !o.trials_csv.empty();
  return cfg;
}

std::vector<int> block_lengths(const SimOptions& o, const json& sim) {
  std::vector<int> ns = o.n;
  if (ns.empty() && sim.contains("n")) {
    const json& n = sim.at("n");
    ns = n.is_array() ? n.get<std::vector<int>>() : std::vector<int>{n.get<int>()};
  }
  if (ns.empty()) ns = {SimConfig{}.n};
  return ns;
}

void cmd_simulate_lemma1(const SimOptions& o, const json& sc, RunContext& ctx) {
  const json& b = require(sc, "lemma1");
  JointPmf joint = b.contains("joint") ? joint2_from(b.at("joint")) : [&] {
    // p(u, s) = p(s) p(u|s) from the scenario source and spec kernel.
    const Pmf source = pmf_from(require(sc, "source"));
    const HybridCodeSpec spec = p2p_spec_from(o.spec.empty() ? require(sc, "spec") : load_json(o.spec));
    const int nu = spec.aux_size(), ns = source.size();
    Eigen::VectorXd flat(nu * ns);
    for (int u = 0; u < nu; ++u) {
      for (int s = 0; s < ns; ++s) flat[u * ns + s] = source[s] * spec.aux_kernel(s, u);
    }
    return JointPmf({nu, ns}, flat);
  }();
  Lemma1Config cfg;
  cfg.n = pick<int>(nullptr, 0, b, "n", cfg.n);
  if (!o.n.empty()) cfg.n = o.n.front();
  cfg.rate = pick<double>(nullptr, 0, b, "rate", cfg.rate);
  cfg.epsilon_prime = pick<double>(o.epsp_opt, o.epsilon_prime, b, "epsilon_prime", cfg.epsilon_prime);
  cfg.outer_trials = pick<std::int64_t>(o.trials_opt, o.trials, b, "outer_trials", cfg.outer_trials);
  cfg.min_count = pick<std::int64_t>(nullptr, 0, b, "min_count", cfg.min_count);
  cfg.seed = ctx.seed;
  cfg.jobs = ctx.jobs;
  const Lemma1Report r = lemma1_check(joint, cfg);
  json out = to_json(r);
  out["kind"] = "lemma1";
  out["rate"] = cfg.rate;
  out["epsilon_prime"] = cfg.epsilon_prime;
  out["min_count"] = cfg.min_count;
  ctx.write("output", o.output, dump(out));
  *ctx.out << "lemma1: accepted " << r.accepted << ", scored cells " << r.scored_cells << ", max ratio "
           << fmt6(r.max_ratio) << "\n";
}

void cmd_simulate(const SimOptions& o, RunContext& ctx) {
  const json sc = load_json(o.scenario);
  if (o.lemma1) {
    require_kind(sc, "p2p");
    cmd_simulate_lemma1(o, sc, ctx);
    return;
  }
  const json& sim = block_or_empty(sc, "simulation");
  SimConfig cfg = sim_config_from(o, sim, ctx);
  const std::vector<int> ns = block_lengths(o, sim);
  const std::string kind = require(sc, "kind").get<std::string>();
  const json spec_json = o.spec.empty() ? require(sc, "spec") : load_json(o.spec);
  json rows = json::array();
  std::string csv;

  if (kind == "p2p") {
    const P2pScenario p = p2p_scenario_from(sc);
    const HybridCodeSpec spec = p2p_spec_from(spec_json);
    // Memory caps are checked for every block length before any trial runs.
    for (int n : ns) codeword_count(n, spec.rate, cfg.max_codebook_symbols);
    csv = "n,trial,seed,e1,e2,e3,error,m,m_hat,distortion\n";
    for (int n : ns) {
      cfg.n = n;
      const P2pReport r = run_p2p(p.source, p.channel, p.d, spec, cfg);
      rows.push_back(to_json(r));
      for (const auto& t : r.per_trial) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%d,%lld,%llu,%d,%d,%d,%d,%lld,%lld,%.6f\n", n,
                      static_cast<long long>(t.trial), static_cast<unsigned long long>(t.seed), t.e1, t.e2,
                      t.e3, t.error, static_cast<long long>(t.m), static_cast<long long>(t.m_hat),
                      t.distortion);
        csv += buf;
      }
      *ctx.out << "n=" << n << " P(E)=" << fmt6(r.error.p) << " +- " << fmt6(r.error.half_width)
               << " D=" << fmt6(r.mean_distortion) << "\n";
    }
  } else if (kind == "mac") {
    const MacScenario m = mac_scenario_from(sc);
    const MacHybridSpec spec = mac_spec_from(spec_json);
    for (int n : ns) {
      codeword_count(n, spec.rate1, cfg.max_codebook_symbols);
      codeword_count(n, spec.rate2, cfg.max_codebook_symbols);
    }
    csv = "n,trial,seed,e1,e2,e3,e4,e5,e6,error,m1,m2,m1_hat,m2_hat,distortion1,distortion2\n";
    for (int n : ns) {
      cfg.n = n;
      const MacReport r = run_mac(m.sources, m.mac, m.d1, m.d2, spec, cfg);
      rows.push_back(to_json(r));
      for (const auto& t : r.per_trial) {
        char buf[320];
        std::snprintf(buf, sizeof buf, "%d,%lld,%llu,%d,%d,%d,%d,%d,%d,%d,%lld,%lld,%lld,%lld,%.6f,%.6f\n", n,
                      static_cast<long long>(t.trial), static_cast<unsigned long long>(t.seed), t.events[0],
                      t.events[1], t.events[2], t.events[3], t.events[4], t.events[5], t.error,
                      static_cast<long long>(t.m1), static_cast<long long>(t.m2), static_cast<long long>(t.m1_hat),
                      static_cast<long long>(t.m2_hat), t.distortion1, t.distortion2);
        csv += buf;
      }
      *ctx.out << "n=" << n << " P(E)=" << fmt6(r.error.p) << " +- " << fmt6(r.error.half_width) << "\n";
    }
  } else {
    throw InputError("simulate: scenario kind must be p2p or mac, got " + kind);
  }
  if (!o.trials_csv.empty()) ctx.write("trials-csv", o.trials_csv, csv);
  ctx.write("output", o.output,
            dump({{"kind", kind},
                  {"trials", cfg.trials},
                  {"epsilon", cfg.epsilon},
                  {"epsilon_prime", cfg.epsilon_prime},
                  {"rows", rows}}));
}

// ---------------------------------------------------------------------------
// plot

struct PlotOptions {
  std::string csv_input;
  std::string output;
  std::string title;
};

void cmd_plot(const PlotOptions& o, RunContext& ctx) {
  const CsvTable t = parse_csv(read_file(o.csv_input));
  ctx.write("output", o.output, render_svg(t, o.title));
  *ctx.out << "plot: " << t.header.size() - 1 << " series, " << t.rows.size() << " rows\n";
}

// ---------------------------------------------------------------------------
// manifest and replay

std::uint64_t parse_seed(const std::string& text, const char* origin) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    throw InputError(std::string(origin) + ": seed must be an unsigned 64-bit integer, got \"" + text + "\"");
  }
  return v;
}

std::string absolute(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

// Options of the selected subcommand in replayable form: positional values,
// then named options. Input paths are made absolute; outputs and runtime
// options are left out (the manifest records them separately).
json recorded_arguments(const CLI::App* sub) {
  json positional = json::array();
  json named = json::array();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->count() == 0) continue;
    const std::string name = opt->get_single_name();
    if (kRuntimeOptions.count(name) || kOutputOptions.count(name)) continue;
    const bool is_input = kInputOptions.count(name) > 0;
    if (opt->get_positional() && opt->get_lnames().empty() && opt->get_snames().empty()) {
      for (const auto& v : opt->results()) positional.push_back(is_input ? absolute(v) : v);
      continue;
    }
    if (opt->get_expected_max() == 0) {
      for (std::size_t k = 0; k < opt->count(); ++k) named.push_back(json::array({"--" + name}));
      continue;
    }
    for (const auto& v : opt->results()) named.push_back(json::array({"--" + name, is_input ? absolute(v) : v}));
  }
  return {{"positional", positional}, {"named", named}};
}

struct ReplayOptions {
  std::string manifest_file;
  std::string out_dir;
};

int replay(const ReplayOptions& o, const CLI::Option* jobs_opt, int jobs, std::ostream& out,
           std::ostream& err) {
  const json m = load_json(o.manifest_file);
  const std::string sub = require(m, "subcommand").get<std::string>();
  const json& args = require(m, "arguments");
  const fs::path dir = o.out_dir.empty() ? fs::path(o.manifest_file).parent_path() / "replay" : fs::path(o.out_dir);

  std::vector<std::string> argv{sub};
  for (const auto& v : require(args, "positional")) argv.push_back(v.get<std::string>());
  for (const auto& pair : require(args, "named")) {
    for (const auto& v : pair) argv.push_back(v.get<std::string>());
  }
  argv.push_back("--seed");
  argv.push_back(std::to_string(require(m, "seed").get<std::uint64_t>()));
  argv.push_back("--jobs");
  argv.push_back(std::to_string(jobs_opt->count() ? jobs : require(m, "jobs").get<int>()));

  struct Expected {
    std::string path;
    std::string sha256;
  };
  std::vector<Expected> expected;
  std::set<std::string> names;
  for (const auto& f : require(m, "outputs")) {
    const std::string name = fs::path(f.at("path").get<std::string>()).filename().string();
    if (!names.insert(name).second) throw InputError("replay: two outputs share the file name " + name);
    const std::string target = (dir / name).string();
    argv.push_back("--" + f.at("option").get<std::string>());
    argv.push_back(target);
    expected.push_back({target, f.at("sha256").get<std::string>()});
  }

  std::ostringstream sub_out;
  const int code = run(argv, sub_out, err);
  if (code != kExitOk) {
    err << "replay: subcommand exited with " << code << "\n";
    return code;
  }
  bool all = true;
  for (const auto& e : expected) {
    const std::string got = sha256_file(e.path);
    const bool same = got == e.sha256;
    all = all && same;
    out << (same ? "identical " : "DIFFERENT ") << e.path << "\n";
  }
  if (!all) {
    err << "replay: outputs differ from the manifest\n";
    return kExitInvariant;
  }
  return kExitOk;
}

void add_common(CLI::App* sub, std::string& output, std::string& manifest, bool output_required = true) {
  auto* o = sub->add_option("-o,--output", output, "Primary output file");
  if (output_required) o->required();
  sub->add_option("--manifest", manifest, "Manifest path (default: <output>.manifest.json)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hybridlab: hybrid coding bounds, Gaussian relay rates and Monte Carlo simulation"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string seed_text;
  int jobs = 1;
  std::string manifest;
  std::vector<CLI::Option*> seed_opts, jobs_opts;
  const auto add_runtime = [&](CLI::App* sub) {
    seed_opts.push_back(sub->add_option("--seed", seed_text, "Root seed (HYBRIDLAB_SEED overrides)"));
    jobs_opts.push_back(sub->add_option("--jobs", jobs, "Worker threads; results do not depend on it")
                            ->check(CLI::Range(1, 1024)));
  };

  TwrcOptions twrc;
  auto* s_twrc = app.add_subcommand("bounds-twrc", "Gaussian two-way relay rates and the relay-position sweep");
  s_twrc->add_option("scenario", twrc.scenario, "twrc_gaussian scenario")->required()->check(CLI::ExistingFile);
  add_common(s_twrc, twrc.output, manifest);
  s_twrc->add_option("--csv", twrc.csv, "CSV output (default: output with .csv extension)");
  s_twrc->add_flag("--sweep", twrc.sweep, "Sum rates over relay positions on the line network");
  twrc.r_opt = s_twrc->add_option("--r", twrc.r, "Relay position(s) in (0,1) on the line network");
  s_twrc->add_option("--scheme", twrc.schemes, "nnc, af, hc_special, hc_general or cutset");
  s_twrc->add_flag("--beta-in-numerator", twrc.beta_in_numerator,
                   "Use beta instead of 1-alpha in the second numerators of the general rates");
  add_runtime(s_twrc);

  DiamondOptions diamond;
  auto* s_dia = app.add_subcommand("bounds-diamond", "Deterministic diamond network bounds");
  s_dia->add_option("scenario", diamond.scenario, "diamond scenario")->required()->check(CLI::ExistingFile);
  add_common(s_dia, diamond.output, manifest);
  diamond.grid_opt = s_dia->add_option("--grid", diamond.grid, "Simplex grid resolution m (step 1/m)");
  add_runtime(s_dia);

  MacOptions mac;
  auto* s_mac = app.add_subcommand("region-mac", "Hybrid coding conditions over a multiple access channel");
  s_mac->add_option("scenario", mac.scenario, "mac scenario")->required()->check(CLI::ExistingFile);
  add_common(s_mac, mac.output, manifest);
  s_mac->add_option("--spec", mac.spec, "Spec file (default: the scenario's spec block)")->check(CLI::ExistingFile);
  s_mac->add_flag("--cor1", mac.cor1, "Evaluate the lossless substitution from the cor1 block");
  s_mac->add_flag("--cor2", mac.cor2, "Evaluate the distributed lossy substitution from the cor2 block");
  s_mac->add_flag("--optimize", mac.optimize, "Search for a spec meeting the distortion targets");
  mac.target1_opt = s_mac->add_option("--target1", mac.target1, "Distortion target for source 1");
  mac.target2_opt = s_mac->add_option("--target2", mac.target2, "Distortion target for source 2");
  mac.aux_opt = s_mac->add_option("--aux-cap", mac.aux_cap, "Largest auxiliary alphabet");
  mac.grid_opt = s_mac->add_option("--grid", mac.grid, "Simplex grid resolution m");
  add_runtime(s_mac);

  Thm1Options thm1;
  auto* s_t1 = app.add_subcommand("check-thm1", "Point-to-point hybrid coding condition");
  s_t1->add_option("scenario", thm1.scenario, "p2p scenario")->required()->check(CLI::ExistingFile);
  add_common(s_t1, thm1.output, manifest);
  s_t1->add_option("--spec", thm1.spec, "Spec file (default: the scenario's spec block)")->check(CLI::ExistingFile);
  s_t1->add_flag("--optimize", thm1.optimize, "Search for the largest slack at a distortion target");
  s_t1->add_flag("--min-distortion", thm1.min_distortion, "Search for the smallest achievable distortion");
  s_t1->add_flag("--separation", thm1.separation, "Also report capacity and the separation boundary");
  thm1.target_opt = s_t1->add_option("--target-d", thm1.target, "Distortion target for --optimize");
  thm1.aux_opt = s_t1->add_option("--aux-cap", thm1.aux_cap, "Largest auxiliary alphabet (0: |S||X|+2)");
  thm1.grid_opt = s_t1->add_option("--grid", thm1.grid, "Simplex grid resolution m");
  add_runtime(s_t1);

  Thm3CliOptions thm3;
  auto* s_t3 = app.add_subcommand("check-thm3", "Discrete two-way relay rates");
  s_t3->add_option("scenario", thm3.scenario, "twrc_discrete scenario")->required()->check(CLI::ExistingFile);
  add_common(s_t3, thm3.output, manifest);
  s_t3->add_option("--spec", thm3.spec, "Spec file (default: the scenario's spec block)")->check(CLI::ExistingFile);
  s_t3->add_flag("--optimize", thm3.optimize, "Maximize the sum rate");
  s_t3->add_flag("--r2-conditions-on-x2", thm3.r2_on_x2, "Condition the R2 penalty term on X2 instead of X1");
  s_t3->add_option("--rate1", thm3.rate1, "Rate tested against the R1 terms");
  s_t3->add_option("--rate2", thm3.rate2, "Rate tested against the R2 terms");
  thm3.aux_opt = s_t3->add_option("--aux-cap", thm3.aux_cap, "Largest relay auxiliary alphabet");
  thm3.grid_opt = s_t3->add_option("--grid", thm3.grid, "Simplex grid resolution m");
  add_runtime(s_t3);

  SimOptions sim;
  auto* s_sim = app.add_subcommand("simulate", "Monte Carlo simulation of random hybrid codes");
  s_sim->add_option("scenario", sim.scenario, "p2p or mac scenario")->required()->check(CLI::ExistingFile);
  add_common(s_sim, sim.output, manifest);
  s_sim->add_option("--spec", sim.spec, "Spec file (default: the scenario's spec block)")->check(CLI::ExistingFile);
  s_sim->add_option("--trials-csv", sim.trials_csv, "Per-trial outcomes CSV");
  s_sim->add_option("--n", sim.n, "Block length(s); one report row per value");
  sim.trials_opt = s_sim->add_option("--trials", sim.trials, "Trials per block length");
  sim.eps_opt = s_sim->add_option("--epsilon", sim.epsilon, "Decoding typicality slack");
  sim.epsp_opt = s_sim->add_option("--epsilon-prime", sim.epsilon_prime, "Encoding typicality slack");
  sim.cap_opt = s_sim->add_option("--max-codebook-symbols", sim.max_symbols, "Codebook memory cap in symbols");
  s_sim->add_flag("--lemma1", sim.lemma1, "Run the conditional codeword distribution check");
  add_runtime(s_sim);

  PlotOptions plot;
  auto* s_plot = app.add_subcommand("plot", "Render a CSV table as an SVG line chart");
  s_plot->add_option("csv_input", plot.csv_input, "CSV with a numeric first column")->required();
  add_common(s_plot, plot.output, manifest);
  s_plot->add_option("--title", plot.title, "Chart title");
  add_runtime(s_plot);

  ReplayOptions rep;
  auto* s_rep = app.add_subcommand("replay", "Re-run a manifest and compare output digests");
  s_rep->add_option("manifest_file", rep.manifest_file, "Manifest written by an earlier run")
      ->required()
      ->check(CLI::ExistingFile);
  s_rep->add_option("--out-dir", rep.out_dir, "Where to write the replayed outputs (default: <manifest dir>/replay)");
  CLI::Option* rep_jobs = s_rep->add_option("--jobs", jobs, "Worker threads for the replay")->check(CLI::Range(1, 1024));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (s_rep->parsed()) return replay(rep, rep_jobs, jobs, out, err);

    const auto start = std::chrono::steady_clock::now();
    RunContext ctx;
    ctx.out = &out;
    ctx.jobs = jobs;
    if (const char* env = std::getenv("HYBRIDLAB_SEED"); env != nullptr && *env != '\0') {
      ctx.seed = parse_seed(env, "HYBRIDLAB_SEED");
      ctx.seed_source = "environment";
    } else if (std::any_of(seed_opts.begin(), seed_opts.end(), [](CLI::Option* o) { return o->count() > 0; })) {
      ctx.seed = parse_seed(seed_text, "--seed");
      ctx.seed_source = "flag";
    }

    CLI::App* selected = app.get_subcommands().front();
    std::string primary;
    std::vector<std::string> inputs;
    if (selected == s_twrc) {
      cmd_bounds_twrc(twrc, ctx);
      primary = twrc.output;
      inputs = {twrc.scenario};
    } else if (selected == s_dia) {
      cmd_bounds_diamond(diamond, ctx);
      primary = diamond.output;
      inputs = {diamond.scenario};
    } else if (selected == s_mac) {
      cmd_region_mac(mac, ctx);
      primary = mac.output;
      inputs = {mac.scenario, mac.spec};
    } else if (selected == s_t1) {
      cmd_check_thm1(thm1, ctx);
      primary = thm1.output;
      inputs = {thm1.scenario, thm1.spec};
    } else if (selected == s_t3) {
      cmd_check_thm3(thm3, ctx);
      primary = thm3.output;
      inputs = {thm3.scenario, thm3.spec};
    } else if (selected == s_sim) {
      cmd_simulate(sim, ctx);
      primary = sim.output;
      inputs = {sim.scenario, sim.spec};
    } else {
      cmd_plot(plot, ctx);
      primary = plot.output;
      inputs = {plot.csv_input};
    }

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json jin = json::array();
    for (const auto& p : inputs) {
      if (!p.empty()) jin.push_back({{"path", absolute(p)}, {"sha256", sha256_file(p)}});
    }
    json jout = json::array();
    for (const auto& f : ctx.outputs) {
      jout.push_back({{"option", f.option}, {"path", absolute(f.path)}, {"sha256", sha256_file(f.path)}});
    }
    const json m = {{"tool", "hybridlab"},
                    {"version", kToolVersion},
                    {"subcommand", selected->get_name()},
                    {"arguments", recorded_arguments(selected)},
                    {"seed", ctx.seed},
                    {"seed_source", ctx.seed_source},
                    {"jobs", ctx.jobs},
                    {"wall_clock_seconds", seconds},
                    {"inputs", jin},
                    {"outputs", jout}};
    const std::string manifest_path = manifest.empty() ? primary + ".manifest.json" : manifest;
    std::ofstream mf(manifest_path, std::ios::binary);
    if (!mf) throw InputError("cannot write " + manifest_path);
    mf << dump(m);
    return kExitOk;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ResourceLimitError& e) {
    err << "resource limit: " << e.what() << "\n";
    return kExitResource;
  } catch (const InvariantError& e) {
    err << "internal invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
}

}  // namespace hybridlab::cli
