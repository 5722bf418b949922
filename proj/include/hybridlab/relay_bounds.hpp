#pragma once

// Discrete two-way relay and diamond network bounds.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hybridlab/bound_report.hpp"
#include "hybridlab/infotheory.hpp"

namespace hybridlab {

// ---------------------------------------------------------------------------
// Two-way relay channel p(y1, y2 | x3) p(y3 | x1, x2)

struct TwrcChannel {
  ConditionalPmf uplink;    // rows x1 * |X2| + x2, columns y3
  ConditionalPmf downlink;  // rows x3, columns y1 * |Y2| + y2
  int x1_size = 0;
  int x2_size = 0;
  int y1_size = 0;
  int y2_size = 0;

  int y3_size() const { return uplink.outputs(); }
  int x3_size() const { return downlink.inputs(); }
  void validate() const;
};

/// p(x1) p(x2) p(u3 | y3) and the relay map x3(u3, y3) at u3 * |Y3| + y3.
struct TwrcRelaySpec {
  Pmf input1;
  Pmf input2;
  ConditionalPmf relay_aux;
  std::vector<int> relay_map;

  int u3_size() const { return relay_aux.outputs(); }
};

struct Thm3Options {
  double margin = kDefaultMargin;
  double rate1 = 0.0;  // rates tested against the two min-terms
  double rate2 = 0.0;
  /// Subtract I(Y3;U3|X2) instead of I(Y3;U3|X1) in the second R2 term.
  bool r2_conditions_on_x2 = false;
};

enum TwrcAxis : int { kTwX1 = 0, kTwX2, kTwY3, kTwU3, kTwX3, kTwY1, kTwY2 };

/// p(x1, x2, y3, u3, x3, y1, y2).
JointPmf thm3_joint(const TwrcChannel& ch, const TwrcRelaySpec& spec);

/// The four terms; values "R1" and "R2" hold the clamped min-terms.
BoundReport thm3_region_check(const TwrcChannel& ch, const TwrcRelaySpec& spec,
                              const Thm3Options& opts = {});

/// U3 = (Y^3, X3) with p(y^3 | y3) p(x3); u3 = y^3 * |X3| + x3, relay sends x3.
TwrcRelaySpec twrc_compress_spec(const Pmf& input1, const Pmf& input2,
                                 const ConditionalPmf& quantizer, const Pmf& relay_input);

/// Noisy network coding rates evaluated on their own joint
/// p(x1) p(x2) p(x3) p(y3|x1,x2) p(y^3|y3) p(y1,y2|x3):
///   R1 < min(I(X1;Y^3,Y2|X2,X3), I(X1,X3;Y2|X2) - I(Y3;Y^3|X1,X2,X3,Y2)), R2 symmetric.
BoundReport twrc_nnc_check(const TwrcChannel& ch, const Pmf& input1, const Pmf& input2,
                           const ConditionalPmf& quantizer, const Pmf& relay_input,
                           double margin = kDefaultMargin);

struct Thm3SearchOptions {
  int aux_cap = 2;
  int grid_resolution = 4;
  std::int64_t max_candidates = 5'000'000;
  bool r2_conditions_on_x2 = false;
  int jobs = 1;
};

struct Thm3SearchResult {
  std::optional<TwrcRelaySpec> spec;
  BoundReport report;
  double sum_rate = 0.0;
  std::int64_t candidates = 0;
};

/// Maximizes R1 + R2 over input pmfs and relay kernels on the simplex grid,
/// |U3| <= aux_cap, and all relay maps. Earliest candidate wins ties.
Thm3SearchResult thm3_optimize(const TwrcChannel& ch, const Thm3SearchOptions& opts = {});

// ---------------------------------------------------------------------------
// Diamond network p(y2, y3 | x1) p(y4 | x2, x3)

struct DiamondChannel {
  ConditionalPmf broadcast;  // rows x1, columns y2 * |Y3| + y3
  ConditionalPmf mac;        // rows x2 * |X3| + x3, columns y4
  int y2_size = 0;
  int y3_size = 0;
  int x2_size = 0;
  int x3_size = 0;

  int x1_size() const { return broadcast.inputs(); }
  int y4_size() const { return mac.outputs(); }
  void validate() const;
};

/// p(x1) p(u2|y2) p(u3|y3) and relay maps x_j(u_j, y_j) at u_j * |Y_j| + y_j.
struct DiamondRelaySpec {
  Pmf input1;
  ConditionalPmf aux2;
  ConditionalPmf aux3;
  std::vector<int> map2;
  std::vector<int> map3;
};

enum DiamondAxis : int { kDmX1 = 0, kDmY2, kDmY3, kDmU2, kDmU3, kDmX2, kDmX3, kDmY4 };

JointPmf thm4_joint(const DiamondChannel& ch, const DiamondRelaySpec& spec);

/// The four terms with lhs = rate; value "R" = max(0, min term).
BoundReport thm4_bound(const DiamondChannel& ch, const DiamondRelaySpec& spec, double rate = 0.0,
                       double margin = kDefaultMargin);

/// U_j = (X_j, Y^_j) with p(x_j) p(y^_j | y_j); u_j = x_j * |Y^_j| + y^_j.
DiamondRelaySpec diamond_compress_spec(const Pmf& input1, const Pmf& input2, const Pmf& input3,
                                       const ConditionalPmf& quantizer2,
                                       const ConditionalPmf& quantizer3);

/// Noisy network coding rate on p(x1)p(x2)p(x3)p(y2,y3|x1)p(y^2|y2)p(y^3|y3)p(y4|x2,x3):
/// the minimum over the four cuts separating node 1 from node 4.
BoundReport diamond_nnc_check(const DiamondChannel& ch, const Pmf& input1, const Pmf& input2,
                              const Pmf& input3, const ConditionalPmf& quantizer2,
                              const ConditionalPmf& quantizer3, double rate = 0.0,
                              double margin = kDefaultMargin);

/// U_j = (Y_j, X_j) with p(x_j | y_j); u_j = y_j * |X_j| + x_j.
DiamondRelaySpec diamond_forward_spec(const Pmf& input1, const ConditionalPmf& relay2,
                                      const ConditionalPmf& relay3, int y2_size, int y3_size);

// ---------------------------------------------------------------------------
// Deterministic diamond

/// min{H(Y2,Y3), H(Y2) + H(Y4|X2,Y2), H(Y3) + H(Y4|X3,Y3), H(Y4)} under
/// p(x1) p(x2, x3 | y2, y3), with the relay kernel rows indexed y2 * |Y3| + y3
/// and columns x2 * |X3| + x3. Both stages must be deterministic.
BoundReport det_diamond_value(const DiamondChannel& ch, const Pmf& input1,
                              const ConditionalPmf& relay_inputs);

struct DetDiamondFamilyResult {
  double value = 0.0;
  std::string binding;
  Eigen::VectorXd input1;        // p(x1)
  Eigen::MatrixXd relay_inputs;  // p(x2, x3 | y2, y3)
  std::int64_t evaluated = 0;
};

struct DetDiamondResult {
  DetDiamondFamilyResult hybrid;  // p(x1) p(x2|y2) p(x3|y3)
  DetDiamondFamilyResult adt;     // p(x1) p(x2) p(x3)
  DetDiamondFamilyResult cutset;  // p(x1) p(x2, x3)
};

struct DetDiamondOptions {
  int grid_resolution = 12;
  std::int64_t max_candidates = 50'000'000;
  int jobs = 1;
};

/// Grid maximization of the deterministic-diamond objective over the three
/// input families. Earliest grid point wins ties.
DetDiamondResult det_diamond_bounds(const DiamondChannel& ch, const DetDiamondOptions& opts = {});

}  // namespace hybridlab
