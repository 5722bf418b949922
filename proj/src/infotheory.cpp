#include "hybridlab/infotheory.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace hybridlab {

namespace {

// Entries within this distance below zero are treated as signed-zero noise.
constexpr double kNegativeEntryTolerance = 1e-15;

template <typename Derived>
void normalize_in_place(Eigen::DenseBase<Derived>& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double& x = v.derived().coeffRef(i);
    if (!std::isfinite(x)) throw InputError(std::string(what) + ": non-finite entry");
    if (x < 0.0) {
      if (x < -kNegativeEntryTolerance) {
        throw InputError(std::string(what) + ": negative entry " + std::to_string(x));
      }
      x = 0.0;
    }
  }
  const double total = v.sum();
  if (std::abs(total - 1.0) > kRenormalizeTolerance) {
    throw InputError(std::string(what) + ": entries sum to " + std::to_string(total));
  }
  v.derived() /= total;
}

double clamp_information(double value, const char* what) {
  if (value >= 0.0) return value;
  if (value < -kNegativeInfoTolerance) {
    throw InvariantError(std::string(what) + " is negative: " + std::to_string(value));
  }
  return 0.0;
}

void check_axes(const std::vector<int>& dims, std::span<const int> axes, const char* what) {
  for (int a : axes) {
    if (a < 0 || a >= static_cast<int>(dims.size())) {
      throw InputError(std::string(what) + ": axis " + std::to_string(a) + " out of range");
    }
  }
}

void check_disjoint(std::initializer_list<std::span<const int>> sets) {
  std::vector<int> all;
  for (auto s : sets) all.insert(all.end(), s.begin(), s.end());
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    throw InputError("information measure: axis sets overlap or repeat an axis");
  }
}

std::vector<int> concat(std::initializer_list<std::span<const int>> sets) {
  std::vector<int> out;
  for (auto s : sets) out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pmf

Pmf::Pmf(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw InputError("Pmf: empty alphabet");
  normalize_in_place(probs_, "Pmf");
}

Pmf::Pmf(std::initializer_list<double> probs)
    : Pmf(Eigen::Map<const Eigen::VectorXd>(probs.begin(),
                                             static_cast<Eigen::Index>(probs.size()))) {}

Pmf Pmf::uniform(int k) {
  if (k < 1) throw InputError("Pmf::uniform: alphabet size must be positive");
  return Pmf(Eigen::VectorXd::Constant(k, 1.0 / k));
}

Pmf Pmf::point_mass(int k, int symbol) {
  if (symbol < 0 || symbol >= k) throw InputError("Pmf::point_mass: symbol out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
  v[symbol] = 1.0;
  return Pmf(std::move(v));
}

// ---------------------------------------------------------------------------
// ConditionalPmf

ConditionalPmf::ConditionalPmf(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  if (rows_.rows() == 0 || rows_.cols() == 0) throw InputError("ConditionalPmf: empty kernel");
  for (Eigen::Index r = 0; r < rows_.rows(); ++r) {
    auto row = rows_.row(r);
    normalize_in_place(row, "ConditionalPmf row");
  }
}

ConditionalPmf ConditionalPmf::deterministic(std::span<const int> map, int outputs) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(map.size()), outputs);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] < 0 || map[i] >= outputs) {
      throw InputError("ConditionalPmf::deterministic: image out of range");
    }
    m(static_cast<Eigen::Index>(i), map[i]) = 1.0;
  }
  return ConditionalPmf(std::move(m));
}

ConditionalPmf ConditionalPmf::identity(int k) {
  return ConditionalPmf(Eigen::MatrixXd::Identity(k, k));
}

ConditionalPmf ConditionalPmf::bsc(double crossover) {
  if (crossover < 0.0 || crossover > 1.0) throw InputError("bsc: crossover outside [0,1]");
  Eigen::Matrix2d m;
  m << 1.0 - crossover, crossover, crossover, 1.0 - crossover;
  return ConditionalPmf(m);
}

bool ConditionalPmf::is_deterministic() const {
  for (Eigen::Index r = 0; r < rows_.rows(); ++r) {
    if (rows_.row(r).maxCoeff() != 1.0) return false;
  }
  return true;
}

std::vector<int> ConditionalPmf::as_map() const {
  if (!is_deterministic()) throw InputError("kernel is not deterministic");
  std::vector<int> map(static_cast<std::size_t>(rows_.rows()));
  for (Eigen::Index r = 0; r < rows_.rows(); ++r) {
    Eigen::Index arg = 0;
    rows_.row(r).maxCoeff(&arg);
    map[static_cast<std::size_t>(r)] = static_cast<int>(arg);
  }
  return map;
}

// ---------------------------------------------------------------------------
// JointPmf

JointPmf::JointPmf(std::vector<int> dims, Eigen::VectorXd probs)
    : dims_(std::move(dims)), probs_(std::move(probs)) {
  if (dims_.empty()) throw InputError("JointPmf: no axes");
  Eigen::Index total = 1;
  for (int d : dims_) {
    if (d < 1) throw InputError("JointPmf: alphabet sizes must be positive");
    total *= d;
  }
  if (total != probs_.size()) {
    throw InputError("JointPmf: " + std::to_string(probs_.size()) +
                     " entries do not match dims product " + std::to_string(total));
  }
  normalize_in_place(probs_, "JointPmf");
  strides_.assign(dims_.size(), 1);
  for (int a = rank() - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * dims_[a + 1];
}

JointPmf::JointPmf(const Pmf& p) : JointPmf({p.size()}, p.probs()) {}

JointPmf JointPmf::product(std::span<const Pmf> factors) {
  if (factors.empty()) throw InputError("JointPmf::product: no factors");
  std::vector<int> dims;
  Eigen::VectorXd probs = Eigen::VectorXd::Ones(1);
  for (const Pmf& f : factors) {
    dims.push_back(f.size());
    Eigen::VectorXd next(probs.size() * f.size());
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      next.segment(i * f.size(), f.size()) = probs[i] * f.probs();
    }
    probs = std::move(next);
  }
  return JointPmf(std::move(dims), std::move(probs));
}

Eigen::Index JointPmf::flat_index(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != rank()) throw InputError("JointPmf: index rank mismatch");
  Eigen::Index flat = 0;
  for (int a = 0; a < rank(); ++a) {
    if (index[a] < 0 || index[a] >= dims_[a]) throw InputError("JointPmf: index out of range");
    flat += index[a] * strides_[a];
  }
  return flat;
}

void JointPmf::unflatten(Eigen::Index flat, std::span<int> index) const {
  for (int a = 0; a < rank(); ++a) {
    index[a] = static_cast<int>(flat / strides_[a]);
    flat %= strides_[a];
  }
}

double JointPmf::at(std::span<const int> index) const { return probs_[flat_index(index)]; }

JointPmf JointPmf::marginal(std::span<const int> axes) const {
  check_axes(dims_, axes, "JointPmf::marginal");
  check_disjoint({axes});
  if (axes.empty()) throw InputError("JointPmf::marginal: no axes requested");
  std::vector<int> out_dims;
  std::vector<Eigen::Index> out_strides(axes.size(), 1);
  for (int a : axes) out_dims.push_back(dims_[a]);
  for (int k = static_cast<int>(axes.size()) - 2; k >= 0; --k) {
    out_strides[k] = out_strides[k + 1] * out_dims[k + 1];
  }
  Eigen::Index out_size = out_strides[0] * out_dims[0];
  Eigen::VectorXd out = Eigen::VectorXd::Zero(out_size);
  std::vector<int> idx(dims_.size(), 0);
  for (Eigen::Index flat = 0; flat < probs_.size(); ++flat) {
    Eigen::Index target = 0;
    for (std::size_t k = 0; k < axes.size(); ++k) target += idx[axes[k]] * out_strides[k];
    out[target] += probs_[flat];
    for (int a = rank() - 1; a >= 0; --a) {
      if (++idx[a] < dims_[a]) break;
      idx[a] = 0;
    }
  }
  return JointPmf(std::move(out_dims), std::move(out));
}

Pmf JointPmf::to_pmf() const {
  if (rank() != 1) throw InputError("JointPmf::to_pmf: rank is not 1");
  return Pmf(probs_);
}

// ---------------------------------------------------------------------------
// Composition

JointPmf reshape(const JointPmf& joint, std::vector<int> dims) {
  return JointPmf(std::move(dims), joint.probs());
}

JointPmf compose_joint(const JointPmf& source, std::span<const KernelFactor> kernels) {
  std::vector<int> dims = source.dims();
  Eigen::VectorXd probs = source.probs();
  for (const KernelFactor& k : kernels) {
    check_axes(dims, k.given, "compose_joint");
    check_disjoint({k.given});
    Eigen::Index rows = 1;
    for (int a : k.given) rows *= dims[a];
    if (rows != k.kernel.inputs()) {
      throw InputError("compose_joint: kernel has " + std::to_string(k.kernel.inputs()) +
                       " rows but conditioning axes span " + std::to_string(rows));
    }
    const int out = k.kernel.outputs();
    const int rank = static_cast<int>(dims.size());
    Eigen::VectorXd next(probs.size() * out);
    std::vector<int> idx(dims.size(), 0);
    for (Eigen::Index flat = 0; flat < probs.size(); ++flat) {
      Eigen::Index row = 0;
      for (int a : k.given) row = row * dims[a] + idx[a];
      next.segment(flat * out, out) = probs[flat] * k.kernel.matrix().row(row).transpose();
      for (int a = rank - 1; a >= 0; --a) {
        if (++idx[a] < dims[a]) break;
        idx[a] = 0;
      }
    }
    dims.push_back(out);
    probs = std::move(next);
  }
  return JointPmf(std::move(dims), std::move(probs));
}

// ---------------------------------------------------------------------------
// Information measures

double entropy(const Pmf& p) { return entropy_bits(p.probs()); }

double entropy(const JointPmf& joint, std::span<const int> axes) {
  if (axes.empty()) return 0.0;
  return entropy_bits(joint.marginal(axes).probs());
}

double conditional_entropy(const JointPmf& joint, std::span<const int> a,
                           std::span<const int> c) {
  check_disjoint({a, c});
  const auto ac = concat({a, c});
  return clamp_information(entropy(joint, ac) - entropy(joint, c), "conditional entropy");
}

double mutual_information(const JointPmf& joint, std::span<const int> a,
                          std::span<const int> b) {
  check_axes(joint.dims(), a, "mutual_information");
  check_axes(joint.dims(), b, "mutual_information");
  check_disjoint({a, b});
  const auto ab = concat({a, b});
  return clamp_information(entropy(joint, a) + entropy(joint, b) - entropy(joint, ab),
                           "mutual information");
}

double conditional_mutual_information(const JointPmf& joint, std::span<const int> a,
                                      std::span<const int> b, std::span<const int> c) {
  if (c.empty()) return mutual_information(joint, a, b);
  check_axes(joint.dims(), a, "conditional_mutual_information");
  check_axes(joint.dims(), b, "conditional_mutual_information");
  check_axes(joint.dims(), c, "conditional_mutual_information");
  check_disjoint({a, b, c});
  const double h_ac = entropy(joint, concat({a, c}));
  const double h_bc = entropy(joint, concat({b, c}));
  const double h_abc = entropy(joint, concat({a, b, c}));
  const double h_c = entropy(joint, c);
  return clamp_information(h_ac + h_bc - h_abc - h_c, "conditional mutual information");
}

// ---------------------------------------------------------------------------
// Sequences, typicality, distortion

Sequence::Sequence(std::vector<int> syms, int alphabet) : symbols(std::move(syms)), alphabet_size(alphabet) {
  if (alphabet_size < 1) throw InputError("Sequence: alphabet size must be positive");
  for (int s : symbols) {
    if (s < 0 || s >= alphabet_size) throw InputError("Sequence: symbol out of alphabet");
  }
}

DistortionMeasure::DistortionMeasure(Eigen::MatrixXd table) : table_(std::move(table)) {
  if (table_.size() == 0) throw InputError("DistortionMeasure: empty table");
  if (!table_.allFinite() || table_.minCoeff() < 0.0) {
    throw InputError("DistortionMeasure: entries must be finite and nonnegative");
  }
}

DistortionMeasure DistortionMeasure::hamming(int k) {
  return DistortionMeasure(Eigen::MatrixXd::Ones(k, k) - Eigen::MatrixXd::Identity(k, k));
}

TypicalityTester::TypicalityTester(const JointPmf& ref, double epsilon, int n)
    : dims_(ref.dims()), n_(n) {
  if (!(epsilon > 0.0)) throw InputError("typicality: epsilon must be positive");
  if (n < 1) throw InputError("typicality: sequence length must be positive");
  // Count bounds are widened by 1e-9 so that cells sitting exactly on the
  // boundary are not flipped by rounding of n p (1 +- eps).
  const auto& p = ref.probs();
  lo_.resize(static_cast<std::size_t>(p.size()));
  hi_.resize(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double center = n * p[i];
    lo_[i] = static_cast<int>(std::ceil(center * (1.0 - epsilon) - 1e-9));
    hi_[i] = static_cast<int>(std::floor(center * (1.0 + epsilon) + 1e-9));
    lo_[i] = std::max(lo_[i], 0);
  }
}

bool TypicalityTester::accepts(std::span<const int> counts) const {
  if (counts.size() != lo_.size()) throw InputError("typicality: count table size mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < lo_[i] || counts[i] > hi_[i]) return false;
  }
  return true;
}

bool TypicalityTester::accepts(std::span<const std::span<const int>> seqs) const {
  if (seqs.size() != dims_.size()) throw InputError("typicality: tuple arity mismatch");
  std::vector<int> counts(lo_.size(), 0);
  for (const auto& s : seqs) {
    if (static_cast<int>(s.size()) != n_) throw InputError("typicality: sequence length mismatch");
  }
  for (int i = 0; i < n_; ++i) {
    std::size_t cell = 0;
    for (std::size_t a = 0; a < seqs.size(); ++a) cell = cell * dims_[a] + seqs[a][i];
    ++counts[cell];
  }
  return accepts(counts);
}

bool is_typical(const Sequence& seq, const Pmf& ref, double epsilon) {
  return is_typical(std::span<const Sequence>(&seq, 1), JointPmf(ref), epsilon);
}

bool is_typical(std::span<const Sequence> seqs, const JointPmf& ref, double epsilon) {
  if (seqs.empty()) throw InputError("is_typical: empty tuple");
  if (static_cast<int>(seqs.size()) != ref.rank()) throw InputError("is_typical: arity mismatch");
  const int n = seqs[0].length();
  std::vector<std::span<const int>> views;
  for (std::size_t a = 0; a < seqs.size(); ++a) {
    if (seqs[a].length() != n) throw InputError("is_typical: length mismatch across tuple");
    if (seqs[a].alphabet_size > ref.dims()[a]) {
      throw InputError("is_typical: sequence alphabet exceeds reference alphabet");
    }
    views.emplace_back(seqs[a].symbols);
  }
  return TypicalityTester(ref, epsilon, n).accepts(views);
}

double empirical_distortion(const Sequence& s, const Sequence& s_hat, const DistortionMeasure& d) {
  if (s.length() != s_hat.length()) throw InputError("empirical_distortion: length mismatch");
  if (s.length() == 0) throw InputError("empirical_distortion: empty sequences");
  double total = 0.0;
  for (int i = 0; i < s.length(); ++i) {
    if (s[i] >= d.sources() || s_hat[i] >= d.reconstructions()) {
      throw InputError("empirical_distortion: symbol outside distortion table");
    }
    total += d(s[i], s_hat[i]);
  }
  return total / s.length();
}

}  // namespace hybridlab
