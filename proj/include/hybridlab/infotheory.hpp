#pragma once

// Finite-alphabet probability primitives.
//
// Alphabets are index sets 0..k-1. All information quantities are in bits.
// Dense joint pmfs are stored row-major: the last axis varies fastest.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hybridlab/errors.hpp"

namespace hybridlab {

/// Sum deviation that is silently renormalized on construction.
inline constexpr double kRenormalizeTolerance = 1e-9;
/// Negative information round-off that is clamped to zero; beyond it is a bug.
inline constexpr double kNegativeInfoTolerance = 1e-9;

/// -sum p log2 p over any Eigen expression, with 0 log 0 := 0.
template <typename Derived>
typename Derived::Scalar entropy_bits(const Eigen::DenseBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar v = p.derived().coeff(i);
    if (v > Scalar(0)) h -= v * std::log2(v);
  }
  return h;
}

/// Binary entropy function h2(p).
inline double binary_entropy(double p) {
  return entropy_bits(Eigen::Vector2d(p, 1.0 - p));
}

/// Probability vector over a finite alphabet.
class Pmf {
 public:
  /// Validates nonnegativity and renormalizes sums within 1e-9 of one.
  explicit Pmf(Eigen::VectorXd probs);
  Pmf(std::initializer_list<double> probs);

  static Pmf uniform(int k);
  static Pmf point_mass(int k, int symbol);

  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_[i]; }
  const Eigen::VectorXd& probs() const { return probs_; }

 private:
  Eigen::VectorXd probs_;
};

/// Row-stochastic kernel p(out | in); rows index the conditioning symbol.
class ConditionalPmf {
 public:
  explicit ConditionalPmf(Eigen::MatrixXd rows);

  /// 0/1 kernel of the map in -> map[in].
  static ConditionalPmf deterministic(std::span<const int> map, int outputs);
  static ConditionalPmf identity(int k);
  /// Binary symmetric channel with the given crossover probability.
  static ConditionalPmf bsc(double crossover);

  int inputs() const { return static_cast<int>(rows_.rows()); }
  int outputs() const { return static_cast<int>(rows_.cols()); }
  double operator()(int in, int out) const { return rows_(in, out); }
  const Eigen::MatrixXd& matrix() const { return rows_; }
  Pmf row(int in) const { return Pmf(rows_.row(in).transpose()); }

  /// True when every row is a point mass.
  bool is_deterministic() const;
  /// For a deterministic kernel, the image of each input (throws otherwise).
  std::vector<int> as_map() const;

 private:
  Eigen::MatrixXd rows_;
};

/// Dense multi-dimensional pmf over the product of finite alphabets.
class JointPmf {
 public:
  JointPmf(std::vector<int> dims, Eigen::VectorXd probs);
  explicit JointPmf(const Pmf& p);

  /// Product distribution p(a) p(b) ... with axes in argument order.
  static JointPmf product(std::span<const Pmf> factors);

  const std::vector<int>& dims() const { return dims_; }
  int rank() const { return static_cast<int>(dims_.size()); }
  Eigen::Index size() const { return probs_.size(); }
  const Eigen::VectorXd& probs() const { return probs_; }

  double at(std::span<const int> index) const;
  Eigen::Index flat_index(std::span<const int> index) const;
  void unflatten(Eigen::Index flat, std::span<int> index) const;

  /// Marginal over the listed axes, kept in the listed order.
  JointPmf marginal(std::span<const int> axes) const;
  Pmf to_pmf() const;

 private:
  std::vector<int> dims_;
  std::vector<Eigen::Index> strides_;
  Eigen::VectorXd probs_;
};

/// A kernel attached to existing axes of a joint; appends one new axis.
/// Rows of `kernel` are indexed row-major over the `given` axes.
struct KernelFactor {
  ConditionalPmf kernel;
  std::vector<int> given;
};

/// Same probabilities viewed with different axis sizes. Splitting a row-major
/// axis of size a*b into (a, b) is a pure relabeling.
JointPmf reshape(const JointPmf& joint, std::vector<int> dims);

/// Builds p(source) * prod_k p(new_k | given_k); new axes appended in order.
JointPmf compose_joint(const JointPmf& source, std::span<const KernelFactor> kernels);

double entropy(const Pmf& p);
/// Joint entropy of the listed axes.
double entropy(const JointPmf& joint, std::span<const int> axes);
/// H(A | C).
double conditional_entropy(const JointPmf& joint, std::span<const int> a,
                           std::span<const int> c);

/// I(A;B) = H(A) + H(B) - H(A,B). Axis sets must be disjoint.
double mutual_information(const JointPmf& joint, std::span<const int> a,
                          std::span<const int> b);
/// I(A;B|C). Axis sets must be pairwise disjoint.
double conditional_mutual_information(const JointPmf& joint, std::span<const int> a,
                                      std::span<const int> b, std::span<const int> c);

/// Symbol sequence x^n over an alphabet of the given size.
struct Sequence {
  Sequence() = default;
  Sequence(std::vector<int> symbols, int alphabet_size);

  std::vector<int> symbols;
  int alphabet_size = 1;

  int length() const { return static_cast<int>(symbols.size()); }
  int operator[](int i) const { return symbols[i]; }
};

/// Nonnegative per-letter distortion d(s, s_hat).
class DistortionMeasure {
 public:
  explicit DistortionMeasure(Eigen::MatrixXd table);
  static DistortionMeasure hamming(int k);

  int sources() const { return static_cast<int>(table_.rows()); }
  int reconstructions() const { return static_cast<int>(table_.cols()); }
  double operator()(int s, int s_hat) const { return table_(s, s_hat); }
  const Eigen::MatrixXd& table() const { return table_; }

 private:
  Eigen::MatrixXd table_;
};

/// Relative-deviation typicality: |#{i: x_i = x}/n - p(x)| <= eps p(x) for every
/// symbol tuple x. Cells with p(x) = 0 must have zero count.
///
/// The tester precomputes per-cell admissible count ranges so that the check is
/// a pass over the counts; is_typical() is a thin wrapper.
class TypicalityTester {
 public:
  TypicalityTester(const JointPmf& ref, double epsilon, int n);

  int n() const { return n_; }
  const std::vector<int>& dims() const { return dims_; }

  /// counts is indexed like the reference joint (row-major).
  bool accepts(std::span<const int> counts) const;

  /// Counts the tuple (seqs[0][i], seqs[1][i], ...) and tests it.
  bool accepts(std::span<const std::span<const int>> seqs) const;

 private:
  std::vector<int> dims_;
  std::vector<int> lo_;
  std::vector<int> hi_;
  int n_;
};

bool is_typical(const Sequence& seq, const Pmf& ref, double epsilon);
bool is_typical(std::span<const Sequence> seqs, const JointPmf& ref, double epsilon);

/// (1/n) sum_i d(s_i, s_hat_i).
double empirical_distortion(const Sequence& s, const Sequence& s_hat,
                            const DistortionMeasure& d);

}  // namespace hybridlab
