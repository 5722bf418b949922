#include "hybridlab/relay_bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "hybridlab/parallel.hpp"
#include "hybridlab/search.hpp"

namespace hybridlab {

namespace {

using Axes = std::vector<int>;

double cmi(const JointPmf& j, const Axes& a, const Axes& b, const Axes& c = {}) {
  return conditional_mutual_information(j, a, b, c);
}

void check_map(const std::vector<int>& map, int expected, int codomain, const char* what) {
  if (static_cast<int>(map.size()) != expected) {
    throw InputError(std::string(what) + ": expected " + std::to_string(expected) + " entries");
  }
  for (int v : map) {
    if (v < 0 || v >= codomain) throw InputError(std::string(what) + ": entry out of range");
  }
}

// Adds "R < term" constraints and returns the clamped minimum.
double add_min_terms(BoundReport& r, const std::string& label, double rate,
                     std::initializer_list<std::pair<const char*, double>> terms) {
  double m = 0.0;
  bool first = true;
  for (const auto& [name, value] : terms) {
    r.constraints.push_back({label + " < " + name, rate, value, false});
    m = first ? value : std::min(m, value);
    first = false;
  }
  if (m < 0.0) r.clamped = true;
  return std::max(0.0, m);
}

}  // namespace

// ---------------------------------------------------------------------------
// Two-way relay channel

void TwrcChannel::validate() const {
  if (x1_size < 1 || x2_size < 1 || uplink.inputs() != x1_size * x2_size) {
    throw InputError("TwrcChannel: uplink rows must equal |X1| |X2|");
  }
  if (y1_size < 1 || y2_size < 1 || downlink.outputs() != y1_size * y2_size) {
    throw InputError("TwrcChannel: downlink columns must equal |Y1| |Y2|");
  }
}

JointPmf thm3_joint(const TwrcChannel& ch, const TwrcRelaySpec& spec) {
  ch.validate();
  if (spec.input1.size() != ch.x1_size || spec.input2.size() != ch.x2_size) {
    throw InputError("thm3: input pmfs do not match the uplink alphabets");
  }
  if (spec.relay_aux.inputs() != ch.y3_size()) throw InputError("thm3: relay kernel rows != |Y3|");
  check_map(spec.relay_map, spec.u3_size() * ch.y3_size(), ch.x3_size(), "thm3 relay map");
  const std::array<Pmf, 2> inputs{spec.input1, spec.input2};
  const std::array<KernelFactor, 4> factors{
      KernelFactor{ch.uplink, {kTwX1, kTwX2}},
      KernelFactor{spec.relay_aux, {kTwY3}},
      KernelFactor{ConditionalPmf::deterministic(spec.relay_map, ch.x3_size()), {kTwU3, kTwY3}},
      KernelFactor{ch.downlink, {kTwX3}},
  };
  JointPmf j = compose_joint(JointPmf::product(inputs), factors);
  std::vector<int> dims = j.dims();
  dims.back() = ch.y1_size;
  dims.push_back(ch.y2_size);
  return reshape(j, dims);
}

BoundReport thm3_region_check(const TwrcChannel& ch, const TwrcRelaySpec& spec,
                              const Thm3Options& opts) {
  const JointPmf j = thm3_joint(ch, spec);
  const double penalty1 = cmi(j, {kTwY3}, {kTwU3}, {kTwX1});
  const double penalty2 = opts.r2_conditions_on_x2 ? cmi(j, {kTwY3}, {kTwU3}, {kTwX2}) : penalty1;
  BoundReport r;
  const double r1 = add_min_terms(
      r, "R1", opts.rate1,
      {{"I(X1;Y2,U3|X2)", cmi(j, {kTwX1}, {kTwY2, kTwU3}, {kTwX2})},
       {"I(X1,U3;X2,Y2) - I(Y3;U3|X1)", cmi(j, {kTwX1, kTwU3}, {kTwX2, kTwY2}) - penalty1}});
  const char* second = opts.r2_conditions_on_x2 ? "I(X2,U3;X1,Y1) - I(Y3;U3|X2)"
                                                : "I(X2,U3;X1,Y1) - I(Y3;U3|X1)";
  const double r2 = add_min_terms(
      r, "R2", opts.rate2,
      {{"I(X2;Y1,U3|X1)", cmi(j, {kTwX2}, {kTwY1, kTwU3}, {kTwX1})},
       {second, cmi(j, {kTwX2, kTwU3}, {kTwX1, kTwY1}) - penalty2}});
  r.values = {{"R1", r1}, {"R2", r2}};
  r.finalize(opts.margin);
  return r;
}

TwrcRelaySpec twrc_compress_spec(const Pmf& input1, const Pmf& input2,
                                 const ConditionalPmf& quantizer, const Pmf& relay_input) {
  const int ny3 = quantizer.inputs();
  const int nq = quantizer.outputs();
  const int nx3 = relay_input.size();
  Eigen::MatrixXd aux(ny3, nq * nx3);
  for (int y = 0; y < ny3; ++y) {
    for (int h = 0; h < nq; ++h) {
      for (int x = 0; x < nx3; ++x) aux(y, h * nx3 + x) = quantizer(y, h) * relay_input[x];
    }
  }
  std::vector<int> map;
  for (int u = 0; u < nq * nx3; ++u) {
    for (int y = 0; y < ny3; ++y) map.push_back(u % nx3);
  }
  return TwrcRelaySpec{input1, input2, ConditionalPmf(aux), std::move(map)};
}

BoundReport twrc_nnc_check(const TwrcChannel& ch, const Pmf& input1, const Pmf& input2,
                           const ConditionalPmf& quantizer, const Pmf& relay_input, double margin) {
  ch.validate();
  if (quantizer.inputs() != ch.y3_size() || relay_input.size() != ch.x3_size()) {
    throw InputError("twrc_nnc_check: quantizer or relay input does not match the channel");
  }
  // Axes: X1, X2, X3, Y3, Yq, Y1, Y2.
  enum { X1, X2, X3, Y3, YQ, Y1, Y2 };
  const std::array<Pmf, 3> inputs{input1, input2, relay_input};
  const std::array<KernelFactor, 3> factors{
      KernelFactor{ch.uplink, {X1, X2}},
      KernelFactor{quantizer, {Y3}},
      KernelFactor{ch.downlink, {X3}},
  };
  JointPmf j = compose_joint(JointPmf::product(inputs), factors);
  std::vector<int> dims = j.dims();
  dims.back() = ch.y1_size;
  dims.push_back(ch.y2_size);
  j = reshape(j, dims);
  BoundReport r;
  const double r1 = add_min_terms(
      r, "R1", 0.0,
      {{"I(X1;Y^3,Y2|X2,X3)", cmi(j, {X1}, {YQ, Y2}, {X2, X3})},
       {"I(X1,X3;Y2|X2) - I(Y3;Y^3|X1,X2,X3,Y2)",
        cmi(j, {X1, X3}, {Y2}, {X2}) - cmi(j, {Y3}, {YQ}, {X1, X2, X3, Y2})}});
  const double r2 = add_min_terms(
      r, "R2", 0.0,
      {{"I(X2;Y^3,Y1|X1,X3)", cmi(j, {X2}, {YQ, Y1}, {X1, X3})},
       {"I(X2,X3;Y1|X1) - I(Y3;Y^3|X1,X2,X3,Y1)",
        cmi(j, {X2, X3}, {Y1}, {X1}) - cmi(j, {Y3}, {YQ}, {X1, X2, X3, Y1})}});
  r.values = {{"R1", r1}, {"R2", r2}};
  r.finalize(margin);
  return r;
}

namespace {

// Row-major enumeration of conditional kernels on a simplex grid.
Eigen::MatrixXd grid_kernel(const SimplexGrid& grid, int rows, std::int64_t index) {
  Eigen::MatrixXd k(rows, grid.dimension());
  for (int r = rows - 1; r >= 0; --r) {
    k.row(r) = grid[index % grid.size()].transpose();
    index /= grid.size();
  }
  return k;
}

std::int64_t checked_pow(std::int64_t base, int exp, std::int64_t cap, const char* what) {
  std::int64_t n = 1;
  for (int i = 0; i < exp; ++i) {
    if (n > cap / base) throw ResourceLimitError(std::string(what) + ": search exceeds the cap");
    n *= base;
  }
  return n;
}

}  // namespace

Thm3SearchResult thm3_optimize(const TwrcChannel& ch, const Thm3SearchOptions& opts) {
  ch.validate();
  if (opts.aux_cap < 1 || opts.grid_resolution < 1) {
    throw InputError("thm3_optimize: aux_cap and grid resolution must be >= 1");
  }
  const int m = opts.grid_resolution;
  const SimplexGrid g1(ch.x1_size, m, opts.max_candidates);
  const SimplexGrid g2(ch.x2_size, m, opts.max_candidates);
  const int ny3 = ch.y3_size();
  Thm3SearchResult out;
  Thm3Options eval_opts;
  eval_opts.r2_conditions_on_x2 = opts.r2_conditions_on_x2;

  struct Best {
    double sum = 0.0;
    std::int64_t index = -1;
  };
  Best best;
  int best_k = 0;
  for (int k = 1; k <= opts.aux_cap; ++k) {
    const SimplexGrid gu(k, m, opts.max_candidates);
    const std::int64_t kernels = checked_pow(gu.size(), ny3, opts.max_candidates, "thm3_optimize");
    const std::int64_t maps = map_count(k * ny3, ch.x3_size(), opts.max_candidates);
    const std::int64_t per_input = kernels * maps;
    const std::int64_t inputs = g1.size() * g2.size();
    if (per_input > opts.max_candidates / inputs ||
        out.candidates > opts.max_candidates - per_input * inputs) {
      throw ResourceLimitError("thm3_optimize: search exceeds the candidate cap");
    }
    const std::int64_t total = per_input * inputs;
    out.candidates += total;

    auto spec_at = [&](std::int64_t i) {
      const std::int64_t map_index = i % maps;
      i /= maps;
      const std::int64_t kernel_index = i % kernels;
      i /= kernels;
      std::vector<int> map(static_cast<std::size_t>(k * ny3));
      map_from_index(map_index, ch.x3_size(), map);
      return TwrcRelaySpec{Pmf(g1[i / g2.size()]), Pmf(g2[i % g2.size()]),
                           ConditionalPmf(grid_kernel(gu, ny3, kernel_index)), std::move(map)};
    };
    std::vector<Best> parts(static_cast<std::size_t>(chunk_count(total, opts.jobs)));
    parallel_chunks(total, opts.jobs, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
      Best local;
      for (std::int64_t i = b; i < e; ++i) {
        const BoundReport r = thm3_region_check(ch, spec_at(i), eval_opts);
        const double sum = r.value("R1") + r.value("R2");
        if (local.index < 0 || sum > local.sum) local = {sum, i};
      }
      parts[static_cast<std::size_t>(c)] = local;
    });
    for (const auto& p : parts) {
      if (p.index >= 0 && (best.index < 0 || p.sum > best.sum)) {
        best = p;
        best_k = k;
        out.spec = spec_at(p.index);
      }
    }
  }
  if (out.spec) {
    out.report = thm3_region_check(ch, *out.spec, eval_opts);
    out.sum_rate = best.sum;
  }
  (void)best_k;
  return out;
}

// ---------------------------------------------------------------------------
// Diamond network

void DiamondChannel::validate() const {
  if (y2_size < 1 || y3_size < 1 || broadcast.outputs() != y2_size * y3_size) {
    throw InputError("DiamondChannel: broadcast columns must equal |Y2| |Y3|");
  }
  if (x2_size < 1 || x3_size < 1 || mac.inputs() != x2_size * x3_size) {
    throw InputError("DiamondChannel: MAC rows must equal |X2| |X3|");
  }
}

JointPmf thm4_joint(const DiamondChannel& ch, const DiamondRelaySpec& spec) {
  ch.validate();
  if (spec.input1.size() != ch.x1_size()) throw InputError("thm4: p(x1) does not match |X1|");
  if (spec.aux2.inputs() != ch.y2_size || spec.aux3.inputs() != ch.y3_size) {
    throw InputError("thm4: relay kernels must have |Y_j| rows");
  }
  check_map(spec.map2, spec.aux2.outputs() * ch.y2_size, ch.x2_size, "thm4 relay map 2");
  check_map(spec.map3, spec.aux3.outputs() * ch.y3_size, ch.x3_size, "thm4 relay map 3");
  const std::array<KernelFactor, 1> bc{KernelFactor{ch.broadcast, {kDmX1}}};
  const JointPmf front =
      reshape(compose_joint(JointPmf(spec.input1), bc), {ch.x1_size(), ch.y2_size, ch.y3_size});
  const std::array<KernelFactor, 5> factors{
      KernelFactor{spec.aux2, {kDmY2}},
      KernelFactor{spec.aux3, {kDmY3}},
      KernelFactor{ConditionalPmf::deterministic(spec.map2, ch.x2_size), {kDmU2, kDmY2}},
      KernelFactor{ConditionalPmf::deterministic(spec.map3, ch.x3_size), {kDmU3, kDmY3}},
      KernelFactor{ch.mac, {kDmX2, kDmX3}},
  };
  return compose_joint(front, factors);
}

BoundReport thm4_bound(const DiamondChannel& ch, const DiamondRelaySpec& spec, double rate,
                       double margin) {
  const JointPmf j = thm4_joint(ch, spec);
  BoundReport r;
  const double v = add_min_terms(
      r, "R", rate,
      {{"I(X1;U2,U3,Y4)", cmi(j, {kDmX1}, {kDmU2, kDmU3, kDmY4})},
       {"I(X1,U2;U3,Y4) - I(U2;Y2|X1)",
        cmi(j, {kDmX1, kDmU2}, {kDmU3, kDmY4}) - cmi(j, {kDmU2}, {kDmY2}, {kDmX1})},
       {"I(X1,U3;U2,Y4) - I(U3;Y3|X1)",
        cmi(j, {kDmX1, kDmU3}, {kDmU2, kDmY4}) - cmi(j, {kDmU3}, {kDmY3}, {kDmX1})},
       {"I(X1,U2,U3;Y4) - I(U2,U3;Y2,Y3|X1)",
        cmi(j, {kDmX1, kDmU2, kDmU3}, {kDmY4}) - cmi(j, {kDmU2, kDmU3}, {kDmY2, kDmY3}, {kDmX1})}});
  r.values = {{"R", v}};
  r.finalize(margin);
  return r;
}

DiamondRelaySpec diamond_compress_spec(const Pmf& input1, const Pmf& input2, const Pmf& input3,
                                       const ConditionalPmf& quantizer2,
                                       const ConditionalPmf& quantizer3) {
  auto relay = [](const Pmf& x, const ConditionalPmf& q, ConditionalPmf& aux, std::vector<int>& map) {
    const int ny = q.inputs(), nh = q.outputs(), nx = x.size();
    Eigen::MatrixXd a(ny, nx * nh);
    for (int y = 0; y < ny; ++y) {
      for (int xi = 0; xi < nx; ++xi) {
        for (int h = 0; h < nh; ++h) a(y, xi * nh + h) = x[xi] * q(y, h);
      }
    }
    aux = ConditionalPmf(a);
    map.clear();
    for (int u = 0; u < nx * nh; ++u) {
      for (int y = 0; y < ny; ++y) map.push_back(u / nh);
    }
  };
  DiamondRelaySpec spec{input1, ConditionalPmf(Eigen::MatrixXd::Ones(1, 1)),
                        ConditionalPmf(Eigen::MatrixXd::Ones(1, 1)), {}, {}};
  relay(input2, quantizer2, spec.aux2, spec.map2);
  relay(input3, quantizer3, spec.aux3, spec.map3);
  return spec;
}

BoundReport diamond_nnc_check(const DiamondChannel& ch, const Pmf& input1, const Pmf& input2,
                              const Pmf& input3, const ConditionalPmf& quantizer2,
                              const ConditionalPmf& quantizer3, double rate, double margin) {
  ch.validate();
  if (input1.size() != ch.x1_size() || input2.size() != ch.x2_size ||
      input3.size() != ch.x3_size || quantizer2.inputs() != ch.y2_size ||
      quantizer3.inputs() != ch.y3_size) {
    throw InputError("diamond_nnc_check: pmfs do not match the channel alphabets");
  }
  // Axes: X1, X2, X3, Y2, Y3, Yq2, Yq3, Y4.
  enum { X1, X2, X3, Y2, Y3, Q2, Q3, Y4 };
  const std::array<Pmf, 3> inputs{input1, input2, input3};
  const std::array<KernelFactor, 1> bc{KernelFactor{ch.broadcast, {X1}}};
  JointPmf j = compose_joint(JointPmf::product(inputs), bc);
  j = reshape(j, {ch.x1_size(), ch.x2_size, ch.x3_size, ch.y2_size, ch.y3_size});
  const std::array<KernelFactor, 3> rest{
      KernelFactor{quantizer2, {Y2}},
      KernelFactor{quantizer3, {Y3}},
      KernelFactor{ch.mac, {X2, X3}},
  };
  j = compose_joint(j, rest);
  BoundReport r;
  const double v = add_min_terms(
      r, "R", rate,
      {{"I(X1;Y^2,Y^3,Y4|X2,X3)", cmi(j, {X1}, {Q2, Q3, Y4}, {X2, X3})},
       {"I(X1,X2;Y^3,Y4|X3) - I(Y2;Y^2|X1,X2,X3,Y^3,Y4)",
        cmi(j, {X1, X2}, {Q3, Y4}, {X3}) - cmi(j, {Y2}, {Q2}, {X1, X2, X3, Q3, Y4})},
       {"I(X1,X3;Y^2,Y4|X2) - I(Y3;Y^3|X1,X2,X3,Y^2,Y4)",
        cmi(j, {X1, X3}, {Q2, Y4}, {X2}) - cmi(j, {Y3}, {Q3}, {X1, X2, X3, Q2, Y4})},
       {"I(X1,X2,X3;Y4) - I(Y2,Y3;Y^2,Y^3|X1,X2,X3,Y4)",
        cmi(j, {X1, X2, X3}, {Y4}) - cmi(j, {Y2, Y3}, {Q2, Q3}, {X1, X2, X3, Y4})}});
  r.values = {{"R", v}};
  r.finalize(margin);
  return r;
}

DiamondRelaySpec diamond_forward_spec(const Pmf& input1, const ConditionalPmf& relay2,
                                      const ConditionalPmf& relay3, int y2_size, int y3_size) {
  auto relay = [](const ConditionalPmf& k, int ny, ConditionalPmf& aux, std::vector<int>& map) {
    if (k.inputs() != ny) throw InputError("diamond_forward_spec: relay kernel rows != |Y_j|");
    const int nx = k.outputs();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(ny, ny * nx);
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) a(y, y * nx + x) = k(y, x);
    }
    aux = ConditionalPmf(a);
    map.clear();
    for (int u = 0; u < ny * nx; ++u) {
      for (int y = 0; y < ny; ++y) map.push_back(u % nx);
    }
  };
  DiamondRelaySpec spec{input1, ConditionalPmf(Eigen::MatrixXd::Ones(1, 1)),
                        ConditionalPmf(Eigen::MatrixXd::Ones(1, 1)), {}, {}};
  relay(relay2, y2_size, spec.aux2, spec.map2);
  relay(relay3, y3_size, spec.aux3, spec.map3);
  return spec;
}

// ---------------------------------------------------------------------------
// Deterministic diamond

namespace {

constexpr std::array<const char*, 4> kDetTerms{"H(Y2,Y3)", "H(Y2)+H(Y4|X2,Y2)",
                                               "H(Y3)+H(Y4|X3,Y3)", "H(Y4)"};

void require_deterministic(const DiamondChannel& ch) {
  ch.validate();
  if (!ch.broadcast.is_deterministic() || !ch.mac.is_deterministic()) {
    throw InputError("deterministic diamond: both stages must be deterministic maps");
  }
}

}  // namespace

BoundReport det_diamond_value(const DiamondChannel& ch, const Pmf& input1,
                              const ConditionalPmf& relay_inputs) {
  require_deterministic(ch);
  if (input1.size() != ch.x1_size() || relay_inputs.inputs() != ch.y2_size * ch.y3_size ||
      relay_inputs.outputs() != ch.x2_size * ch.x3_size) {
    throw InputError("det_diamond_value: pmfs do not match the channel alphabets");
  }
  // Axes: X1, Y2Y3, X2X3, Y4, then split to X1, Y2, Y3, X2, X3, Y4.
  const std::array<KernelFactor, 3> factors{
      KernelFactor{ch.broadcast, {0}},
      KernelFactor{relay_inputs, {1}},
      KernelFactor{ch.mac, {2}},
  };
  const JointPmf j = reshape(compose_joint(JointPmf(input1), factors),
                             {ch.x1_size(), ch.y2_size, ch.y3_size, ch.x2_size, ch.x3_size,
                              ch.y4_size()});
  enum { X1, Y2, Y3, X2, X3, Y4 };
  BoundReport r;
  const double v = add_min_terms(
      r, "R", 0.0,
      {{kDetTerms[0], entropy(j, Axes{Y2, Y3})},
       {kDetTerms[1], entropy(j, Axes{Y2}) + conditional_entropy(j, Axes{Y4}, Axes{X2, Y2})},
       {kDetTerms[2], entropy(j, Axes{Y3}) + conditional_entropy(j, Axes{Y4}, Axes{X3, Y3})},
       {kDetTerms[3], entropy(j, Axes{Y4})}});
  r.values = {{"R", v}};
  r.finalize(0.0);
  return r;
}

namespace {

enum class Family { kHybrid, kAdt, kCutset };

// Fixed alphabet data plus scratch for the fast objective.
struct DetEvaluator {
  int n2, n3, m2, m3, n4;
  std::vector<int> bc;   // x1 -> y2 * n3 + y3
  std::vector<int> out;  // x2 * m3 + x3 -> y4
  // Scratch.
  std::vector<double> p2x2y4, p3x3y4, p2x2, p3x3, p4;

  static double h(const std::vector<double>& v) {
    double s = 0.0;
    for (double p : v) {
      if (p > 0.0) s -= p * std::log2(p);
    }
    return s;
  }

  // The four terms given p(y2, y3) and the relay kernel K[(y2 n3 + y3)][(x2 m3 + x3)].
  std::array<double, 4> terms(const std::vector<double>& pyy, const std::array<double, 3>& hy,
                              const double* K) {
    p2x2y4.assign(static_cast<std::size_t>(n2 * m2 * n4), 0.0);
    p3x3y4.assign(static_cast<std::size_t>(n3 * m3 * n4), 0.0);
    p2x2.assign(static_cast<std::size_t>(n2 * m2), 0.0);
    p3x3.assign(static_cast<std::size_t>(n3 * m3), 0.0);
    p4.assign(static_cast<std::size_t>(n4), 0.0);
    const int mm = m2 * m3;
    for (int y2 = 0; y2 < n2; ++y2) {
      for (int y3 = 0; y3 < n3; ++y3) {
        const double py = pyy[static_cast<std::size_t>(y2 * n3 + y3)];
        if (py == 0.0) continue;
        const double* row = K + static_cast<std::ptrdiff_t>((y2 * n3 + y3) * mm);
        for (int x2 = 0; x2 < m2; ++x2) {
          for (int x3 = 0; x3 < m3; ++x3) {
            const double p = py * row[x2 * m3 + x3];
            if (p == 0.0) continue;
            const int y4 = out[static_cast<std::size_t>(x2 * m3 + x3)];
            p2x2y4[static_cast<std::size_t>((y2 * m2 + x2) * n4 + y4)] += p;
            p3x3y4[static_cast<std::size_t>((y3 * m3 + x3) * n4 + y4)] += p;
            p2x2[static_cast<std::size_t>(y2 * m2 + x2)] += p;
            p3x3[static_cast<std::size_t>(y3 * m3 + x3)] += p;
            p4[static_cast<std::size_t>(y4)] += p;
          }
        }
      }
    }
    return {hy[0], hy[1] + std::max(0.0, h(p2x2y4) - h(p2x2)),
            hy[2] + std::max(0.0, h(p3x3y4) - h(p3x3)), h(p4)};
  }
};

struct FamilyBest {
  double value = 0.0;
  std::int64_t index = -1;
};

DetDiamondFamilyResult search_family(const DiamondChannel& ch, Family family,
                                     const DetDiamondOptions& opts) {
  const int m = opts.grid_resolution;
  const int n2 = ch.y2_size, n3 = ch.y3_size, m2 = ch.x2_size, m3 = ch.x3_size;
  const SimplexGrid g1(ch.x1_size(), m, opts.max_candidates);

  // Relay-input grids: two conditional kernels, two marginals, or one joint.
  std::vector<SimplexGrid> grids;
  std::vector<int> rows;
  switch (family) {
    case Family::kHybrid:
      grids.emplace_back(m2, m, opts.max_candidates);
      grids.emplace_back(m3, m, opts.max_candidates);
      rows = {n2, n3};
      break;
    case Family::kAdt:
      grids.emplace_back(m2, m, opts.max_candidates);
      grids.emplace_back(m3, m, opts.max_candidates);
      rows = {1, 1};
      break;
    case Family::kCutset:
      grids.emplace_back(m2 * m3, m, opts.max_candidates);
      rows = {1};
      break;
  }
  std::vector<std::int64_t> counts;
  std::int64_t relay_total = 1;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    counts.push_back(checked_pow(grids[i].size(), rows[i], opts.max_candidates, "det_diamond"));
    if (relay_total > opts.max_candidates / counts.back()) {
      throw ResourceLimitError("det_diamond: relay grid exceeds the candidate cap");
    }
    relay_total *= counts.back();
  }
  if (relay_total > opts.max_candidates / g1.size()) {
    throw ResourceLimitError("det_diamond: search exceeds the candidate cap");
  }

  // Relay kernel K[(y2,y3)][(x2,x3)] for a relay index.
  const int cells_in = n2 * n3, cells_out = m2 * m3;
  auto relay_kernel = [&](std::int64_t index, std::vector<double>& K) {
    K.assign(static_cast<std::size_t>(cells_in * cells_out), 0.0);
    std::vector<std::int64_t> part(grids.size());
    for (std::size_t i = grids.size(); i-- > 0;) {
      part[i] = index % counts[i];
      index /= counts[i];
    }
    if (family == Family::kCutset) {
      const Eigen::VectorXd& p = grids[0][part[0]];
      for (int c = 0; c < cells_in; ++c) {
        for (int o = 0; o < cells_out; ++o) K[static_cast<std::size_t>(c * cells_out + o)] = p[o];
      }
      return;
    }
    const Eigen::MatrixXd A = grid_kernel(grids[0], rows[0], part[0]);
    const Eigen::MatrixXd B = grid_kernel(grids[1], rows[1], part[1]);
    for (int y2 = 0; y2 < n2; ++y2) {
      for (int y3 = 0; y3 < n3; ++y3) {
        const int ra = rows[0] == 1 ? 0 : y2;
        const int rb = rows[1] == 1 ? 0 : y3;
        for (int x2 = 0; x2 < m2; ++x2) {
          for (int x3 = 0; x3 < m3; ++x3) {
            K[static_cast<std::size_t>((y2 * n3 + y3) * cells_out + x2 * m3 + x3)] =
                A(ra, x2) * B(rb, x3);
          }
        }
      }
    }
  };
  // Precompute every relay kernel once; they are shared across p(x1).
  std::vector<double> kernels(static_cast<std::size_t>(relay_total * cells_in * cells_out));
  {
    std::vector<double> K;
    for (std::int64_t r = 0; r < relay_total; ++r) {
      relay_kernel(r, K);
      std::copy(K.begin(), K.end(),
                kernels.begin() + static_cast<std::ptrdiff_t>(r * cells_in * cells_out));
    }
  }

  const DetEvaluator proto{n2, n3, m2, m3, ch.y4_size(), ch.broadcast.as_map(), ch.mac.as_map(),
                           {}, {}, {}, {}, {}};
  const double log_y4 = std::log2(static_cast<double>(ch.y4_size()));

  std::vector<FamilyBest> parts(static_cast<std::size_t>(chunk_count(g1.size(), opts.jobs)));
  parallel_chunks(g1.size(), opts.jobs, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
    DetEvaluator ev = proto;
    FamilyBest best;
    std::vector<double> pyy(static_cast<std::size_t>(cells_in));
    for (std::int64_t i1 = b; i1 < e; ++i1) {
      std::fill(pyy.begin(), pyy.end(), 0.0);
      const Eigen::VectorXd& p1 = g1[i1];
      for (int x1 = 0; x1 < ch.x1_size(); ++x1) pyy[static_cast<std::size_t>(ev.bc[static_cast<std::size_t>(x1)])] += p1[x1];
      std::vector<double> py2(static_cast<std::size_t>(n2), 0.0), py3(static_cast<std::size_t>(n3), 0.0);
      for (int y2 = 0; y2 < n2; ++y2) {
        for (int y3 = 0; y3 < n3; ++y3) {
          py2[static_cast<std::size_t>(y2)] += pyy[static_cast<std::size_t>(y2 * n3 + y3)];
          py3[static_cast<std::size_t>(y3)] += pyy[static_cast<std::size_t>(y2 * n3 + y3)];
        }
      }
      const std::array<double, 3> hy{DetEvaluator::h(pyy), DetEvaluator::h(py2), DetEvaluator::h(py3)};
      // No relay choice can beat this bound for the current p(x1).
      const double ub = std::min({hy[0], hy[1] + log_y4, hy[2] + log_y4, log_y4});
      if (best.index >= 0 && ub < best.value) continue;
      for (std::int64_t r = 0; r < relay_total; ++r) {
        const auto t = ev.terms(pyy, hy, kernels.data() + r * cells_in * cells_out);
        const double v = std::min({t[0], t[1], t[2], t[3]});
        if (best.index < 0 || v > best.value) best = {v, i1 * relay_total + r};
      }
    }
    parts[static_cast<std::size_t>(c)] = best;
  });
  FamilyBest best;
  for (const auto& p : parts) {
    if (p.index >= 0 && (best.index < 0 || p.value > best.value)) best = p;
  }

  DetDiamondFamilyResult res;
  res.evaluated = g1.size() * relay_total;
  res.input1 = g1[best.index / relay_total];
  std::vector<double> K;
  relay_kernel(best.index % relay_total, K);
  res.relay_inputs = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      K.data(), cells_in, cells_out);
  // Re-evaluate the winner on the generic joint.
  const BoundReport check = det_diamond_value(ch, Pmf(res.input1), ConditionalPmf(res.relay_inputs));
  if (std::abs(check.value("R") - best.value) > 1e-9) {
    throw InvariantError("det_diamond: fast objective disagrees with the joint evaluation");
  }
  res.value = best.value;
  res.binding = check.binding_constraint;
  return res;
}

}  // namespace

DetDiamondResult det_diamond_bounds(const DiamondChannel& ch, const DetDiamondOptions& opts) {
  require_deterministic(ch);
  if (opts.grid_resolution < 1) throw InputError("det_diamond: grid resolution must be >= 1");
  DetDiamondResult r;
  r.hybrid = search_family(ch, Family::kHybrid, opts);
  r.adt = search_family(ch, Family::kAdt, opts);
  r.cutset = search_family(ch, Family::kCutset, opts);
  return r;
}

}  // namespace hybridlab
