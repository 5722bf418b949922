#pragma once

#include <string>
#include <vector>

namespace hybridlab {

/// Default margin for strict inequalities lhs < rhs.
inline constexpr double kDefaultMargin = 1e-9;

/// One inequality lhs < rhs of an achievability condition, in bits.
struct ConstraintValue {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;  // lhs + margin < rhs

  double slack() const { return rhs - lhs; }
};

struct NamedValue {
  std::string name;
  double value = 0.0;
};

/// Evaluated achievability condition. `binding_constraint` is the name of the
/// constraint with the smallest slack (always one of `constraints`).
struct BoundReport {
  std::vector<ConstraintValue> constraints;
  std::string binding_constraint;
  bool satisfied = false;
  std::vector<NamedValue> values;
  std::vector<double> expected_distortions;
  bool clamped = false;  // some reported rate was negative and clamped to 0

  const ConstraintValue& constraint(const std::string& name) const;
  double value(const std::string& name) const;

  /// Fills `satisfied` and `binding_constraint` from the constraint list.
  void finalize(double margin);
};

}  // namespace hybridlab
