#include "json_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hybridlab::cli {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InputError(std::string("missing field \"") + key + "\"");
  }
  return j.at(key);
}

void require_kind(const json& scenario, const char* kind) {
  const json& k = require(scenario, "kind");
  if (!k.is_string() || k.get<std::string>() != kind) {
    throw InputError(std::string("scenario kind must be \"") + kind + "\", got " + k.dump());
  }
}

namespace {

double to_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  throw InputError("expected a number, got " + j.dump());
}

int to_int(const json& j) {
  if (!j.is_number_integer()) throw InputError("expected an integer, got " + j.dump());
  return j.get<int>();
}

Eigen::VectorXd vector_from(const json& j) {
  if (!j.is_array() || j.empty()) throw InputError("expected a nonempty array, got " + j.dump());
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_double(j[i]);
  return v;
}

Eigen::MatrixXd matrix_from(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    throw InputError("expected a nonempty matrix, got " + j.dump());
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InputError("ragged matrix row " + std::to_string(r));
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = to_double(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

// Strict variant of the library's renormalization: scenario rows must sum to
// one within 1e-9 before anything is rescaled.
void check_rows_sum(const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (std::abs(m.row(r).sum() - 1.0) > kRenormalizeTolerance) {
      throw InputError("pmf row " + std::to_string(r) + " sums to " +
                       std::to_string(m.row(r).sum()));
    }
  }
}

}  // namespace

Pmf pmf_from(const json& j) {
  const Eigen::VectorXd v = vector_from(j);
  check_rows_sum(v.transpose());
  return Pmf(v);
}

ConditionalPmf kernel_from(const json& j, int default_outputs) {
  if (j.is_array()) {
    const Eigen::MatrixXd m = matrix_from(j);
    check_rows_sum(m);
    return ConditionalPmf(m);
  }
  if (j.is_object()) {
    if (j.contains("map")) {
      const std::vector<int> map = int_vector_from(j.at("map"));
      const int outputs = j.contains("outputs") ? to_int(j.at("outputs")) : default_outputs;
      if (outputs < 1) throw InputError("deterministic kernel needs \"outputs\"");
      return ConditionalPmf::deterministic(map, outputs);
    }
    if (j.contains("bsc")) return ConditionalPmf::bsc(to_double(j.at("bsc")));
    if (j.contains("bec")) {
      const double e = to_double(j.at("bec"));
      if (!(e >= 0.0 && e <= 1.0)) throw InputError("erasure probability must be in [0,1]");
      Eigen::MatrixXd m(2, 3);
      m << 1.0 - e, e, 0.0, 0.0, e, 1.0 - e;
      return ConditionalPmf(m);
    }
    if (j.contains("identity")) return ConditionalPmf::identity(to_int(j.at("identity")));
  }
  throw InputError("unrecognized kernel " + j.dump());
}

JointPmf joint2_from(const json& j) {
  const Eigen::MatrixXd m = matrix_from(j);
  if (std::abs(m.sum() - 1.0) > kRenormalizeTolerance) {
    throw InputError("joint pmf sums to " + std::to_string(m.sum()));
  }
  Eigen::VectorXd flat(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat[r * m.cols() + c] = m(r, c);
  }
  return JointPmf({static_cast<int>(m.rows()), static_cast<int>(m.cols())}, flat);
}

DistortionMeasure distortion_from(const json& j, int symbols) {
  if (j.is_string()) {
    if (j.get<std::string>() != "hamming") throw InputError("unknown distortion " + j.dump());
    return DistortionMeasure::hamming(symbols);
  }
  return DistortionMeasure(matrix_from(j));
}

Eigen::MatrixXi int_matrix_from(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw InputError("expected an integer matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXi m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InputError("ragged integer matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = to_int(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

std::vector<int> int_vector_from(const json& j) {
  if (!j.is_array()) throw InputError("expected an integer array, got " + j.dump());
  std::vector<int> v;
  v.reserve(j.size());
  for (const json& e : j) v.push_back(to_int(e));
  return v;
}

HybridCodeSpec p2p_spec_from(const json& j) {
  return HybridCodeSpec{kernel_from(require(j, "aux_kernel")), int_matrix_from(require(j, "enc_map")),
                        int_matrix_from(require(j, "dec_map")),
                        j.contains("rate") ? to_double(j.at("rate")) : 0.0};
}

MacChannel mac_channel_from(const json& j) {
  if (j.is_object() && j.contains("noiseless")) {
    const std::vector<int> sizes = int_vector_from(j.at("noiseless"));
    if (sizes.size() != 2) throw InputError("noiseless MAC needs [x1_size, x2_size]");
    return MacChannel::noiseless(sizes[0], sizes[1]);
  }
  MacChannel mac{kernel_from(require(j, "kernel")), to_int(require(j, "x1_size")),
                 to_int(require(j, "x2_size"))};
  mac.validate();
  return mac;
}

namespace {

Pmf time_sharing_from(const json& j) {
  return j.contains("time_sharing") ? pmf_from(j.at("time_sharing")) : Pmf{1.0};
}

}  // namespace

MacHybridSpec mac_spec_from(const json& j) {
  MacHybridSpec s{time_sharing_from(j),
                  kernel_from(require(j, "aux1")),
                  kernel_from(require(j, "aux2")),
                  int_vector_from(require(j, "enc1")),
                  int_vector_from(require(j, "enc2")),
                  int_vector_from(require(j, "dec1")),
                  int_vector_from(require(j, "dec2")),
                  j.contains("rate1") ? to_double(j.at("rate1")) : 0.0,
                  j.contains("rate2") ? to_double(j.at("rate2")) : 0.0};
  return s;
}

LosslessInputs lossless_inputs_from(const json& j) {
  return LosslessInputs{time_sharing_from(j), kernel_from(require(j, "input1")),
                        kernel_from(require(j, "input2"))};
}

DistributedCode distributed_code_from(const json& j) {
  return DistributedCode{time_sharing_from(j), kernel_from(require(j, "aux1")),
                         kernel_from(require(j, "aux2")), int_vector_from(require(j, "dec1")),
                         int_vector_from(require(j, "dec2"))};
}

TwrcChannel twrc_channel_from(const json& scenario) {
  TwrcChannel ch{kernel_from(require(scenario, "uplink")), kernel_from(require(scenario, "downlink")),
                 to_int(require(scenario, "x1_size")), to_int(require(scenario, "x2_size")),
                 to_int(require(scenario, "y1_size")), to_int(require(scenario, "y2_size"))};
  ch.validate();
  return ch;
}

TwrcRelaySpec twrc_spec_from(const json& j) {
  return TwrcRelaySpec{pmf_from(require(j, "input1")), pmf_from(require(j, "input2")),
                       kernel_from(require(j, "relay_aux")), int_vector_from(require(j, "relay_map"))};
}

DiamondChannel diamond_channel_from(const json& scenario) {
  const int y2 = to_int(require(scenario, "y2_size"));
  const int y3 = to_int(require(scenario, "y3_size"));
  const int y4 = scenario.contains("y4_size") ? to_int(scenario.at("y4_size")) : 0;
  DiamondChannel ch{kernel_from(require(scenario, "broadcast"), y2 * y3),
                    kernel_from(require(scenario, "mac"), y4),
                    y2,
                    y3,
                    to_int(require(scenario, "x2_size")),
                    to_int(require(scenario, "x3_size"))};
  ch.validate();
  return ch;
}

GaussianTwrcParams gaussian_params_from(const json& scenario) {
  GaussianTwrcParams p;
  if (scenario.contains("snr")) {
    const json& s = scenario.at("snr");
    p = GaussianTwrcParams{to_double(require(s, "s13")), to_double(require(s, "s23")),
                           to_double(require(s, "s31")), to_double(require(s, "s32"))};
  } else if (scenario.contains("gains")) {
    const json& g = scenario.at("gains");
    p = GaussianTwrcParams::from_gains(to_double(require(scenario, "power")),
                                       to_double(require(g, "g13")), to_double(require(g, "g23")),
                                       to_double(require(g, "g31")), to_double(require(g, "g32")));
  } else {
    const double exp =
        scenario.contains("path_loss_exponent") ? to_double(scenario.at("path_loss_exponent")) : 3.0;
    p = GaussianTwrcParams::line_network(to_double(require(scenario, "power")),
                                         to_double(require(scenario, "relay_position")), exp);
  }
  p.validate();
  return p;
}

json number(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  if (std::isnan(v)) return json("nan");
  return json(v);
}

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

json to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
  return a;
}

json to_json(const Eigen::MatrixXi& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

json to_json(const BoundReport& r) {
  json constraints = json::array();
  for (const auto& c : r.constraints) {
    constraints.push_back({{"name", c.name},
                           {"lhs", number(c.lhs)},
                           {"rhs", number(c.rhs)},
                           {"slack", number(c.slack())},
                           {"satisfied", c.satisfied}});
  }
  json values = json::object();
  for (const auto& v : r.values) values[v.name] = number(v.value);
  json distortions = json::array();
  for (double d : r.expected_distortions) distortions.push_back(number(d));
  return {{"satisfied", r.satisfied},
          {"binding_constraint", r.binding_constraint},
          {"constraints", constraints},
          {"values", values},
          {"expected_distortions", distortions},
          {"clamped", r.clamped}};
}

json to_json(const HybridCodeSpec& s) {
  return {{"aux_kernel", to_json(s.aux_kernel.matrix())},
          {"enc_map", to_json(s.enc_map)},
          {"dec_map", to_json(s.dec_map)},
          {"rate", number(s.rate)}};
}

json to_json(const MacHybridSpec& s) {
  return {{"time_sharing", to_json(s.time_sharing.probs())},
          {"aux1", to_json(s.aux1.matrix())},
          {"aux2", to_json(s.aux2.matrix())},
          {"enc1", s.enc1},
          {"enc2", s.enc2},
          {"dec1", s.dec1},
          {"dec2", s.dec2},
          {"rate1", number(s.rate1)},
          {"rate2", number(s.rate2)}};
}

json to_json(const TwrcRelaySpec& s) {
  return {{"input1", to_json(s.input1.probs())},
          {"input2", to_json(s.input2.probs())},
          {"relay_aux", to_json(s.relay_aux.matrix())},
          {"relay_map", s.relay_map}};
}

json to_json(const RatePoint& p) {
  return {{"scheme", scheme_name(p.scheme)},
          {"R1", number(p.r1)},
          {"R2", number(p.r2)},
          {"sum", number(p.sum())},
          {"binding1", p.binding1},
          {"binding2", p.binding2},
          {"clamped", p.clamped}};
}

json to_json(const OptimizedScheme& o) {
  return {{"scheme", scheme_name(o.scheme)},
          {"alpha", number(o.params.alpha)},
          {"beta", number(o.params.beta)},
          {"sigma2", number(o.params.sigma2)},
          {"rates", to_json(o.rates)},
          {"sum_rate", number(o.sum_rate)}};
}

json to_json(const Proportion& p) {
  return {{"count", p.count}, {"p", number(p.p)}, {"half_width", number(p.half_width)}};
}

json to_json(const P2pReport& r) {
  return {{"n", r.n},
          {"trials", r.trials},
          {"codewords", r.codewords},
          {"E1", to_json(r.e1)},
          {"E2_not_E1", to_json(r.e2_not_e1)},
          {"E3", to_json(r.e3)},
          {"E", to_json(r.error)},
          {"union", to_json(r.union_events)},
          {"mean_distortion", number(r.mean_distortion)},
          {"distortion_std_error", number(r.distortion_std_error)},
          {"distortion_half_width", number(r.distortion_half_width)},
          {"mean_distortion_no_error", number(r.mean_distortion_no_error)},
          {"no_error_trials", r.no_error_trials}};
}

json to_json(const MacReport& r) {
  json events = json::object();
  for (std::size_t k = 0; k < r.events.size(); ++k) {
    events["E" + std::to_string(k + 1)] = to_json(r.events[k]);
  }
  return {{"n", r.n},
          {"trials", r.trials},
          {"codewords1", r.codewords1},
          {"codewords2", r.codewords2},
          {"events", events},
          {"E3_without_E1_E2", to_json(r.e3_clean)},
          {"E", to_json(r.error)},
          {"union", to_json(r.union_events)},
          {"mean_distortion1", number(r.mean_distortion1)},
          {"mean_distortion2", number(r.mean_distortion2)},
          {"distortion1_half_width", number(r.distortion1_half_width)},
          {"distortion2_half_width", number(r.distortion2_half_width)}};
}

json to_json(const Lemma1Report& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"u_tilde", c.u_tilde},
                     {"s", c.s},
                     {"total", c.total},
                     {"counts", c.counts},
                     {"max_ratio", number(c.max_ratio)}});
  }
  return {{"n", r.n},
          {"codewords", r.codewords},
          {"outer_trials", r.outer_trials},
          {"accepted", r.accepted},
          {"scored_cells", r.scored_cells},
          {"max_ratio", number(r.max_ratio)},
          {"conclusive", r.conclusive},
          {"cells", cells}};
}

json to_json(const DetDiamondFamilyResult& r) {
  return {{"value", number(r.value)},
          {"binding", r.binding},
          {"input1", to_json(r.input1)},
          {"relay_inputs", to_json(r.relay_inputs)},
          {"evaluated", r.evaluated}};
}

}  // namespace hybridlab::cli
