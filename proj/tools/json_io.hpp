#pragma once

// JSON <-> library object conversion for scenario files and reports.

#include <string>

#include <json.hpp>

#include "hybridlab/bound_report.hpp"
#include "hybridlab/gaussian_relay.hpp"
#include "hybridlab/infotheory.hpp"
#include "hybridlab/lemma1.hpp"
#include "hybridlab/mac_bounds.hpp"
#include "hybridlab/mac_sim.hpp"
#include "hybridlab/p2p_bounds.hpp"
#include "hybridlab/p2p_sim.hpp"
#include "hybridlab/relay_bounds.hpp"

namespace hybridlab::cli {

using nlohmann::json;

/// Reads and parses a JSON file; parse failures become InputError.
json load_json(const std::string& path);

/// Member access that reports the missing key as an InputError.
const json& require(const json& j, const char* key);
void require_kind(const json& scenario, const char* kind);

Pmf pmf_from(const json& j);
/// Either a row-stochastic matrix, or {"map": [...], "outputs": k}.
ConditionalPmf kernel_from(const json& j, int default_outputs = 0);
/// A 2-D array becomes a joint with axes (row, column).
JointPmf joint2_from(const json& j);
/// "hamming" (sized by `symbols`) or a matrix.
DistortionMeasure distortion_from(const json& j, int symbols);
Eigen::MatrixXi int_matrix_from(const json& j);
std::vector<int> int_vector_from(const json& j);

HybridCodeSpec p2p_spec_from(const json& j);
MacChannel mac_channel_from(const json& j);
MacHybridSpec mac_spec_from(const json& j);
LosslessInputs lossless_inputs_from(const json& j);
DistributedCode distributed_code_from(const json& j);
TwrcChannel twrc_channel_from(const json& scenario);
TwrcRelaySpec twrc_spec_from(const json& j);
DiamondChannel diamond_channel_from(const json& scenario);
GaussianTwrcParams gaussian_params_from(const json& scenario);

/// Doubles as numbers; infinities as the strings "inf" / "-inf".
json number(double v);

json to_json(const Eigen::VectorXd& v);
json to_json(const Eigen::MatrixXd& m);
json to_json(const Eigen::MatrixXi& m);
json to_json(const BoundReport& r);
json to_json(const HybridCodeSpec& s);
json to_json(const MacHybridSpec& s);
json to_json(const TwrcRelaySpec& s);
json to_json(const RatePoint& p);
json to_json(const OptimizedScheme& o);
json to_json(const Proportion& p);
json to_json(const P2pReport& r);
json to_json(const MacReport& r);
json to_json(const Lemma1Report& r);
json to_json(const DetDiamondFamilyResult& r);

}  // namespace hybridlab::cli
