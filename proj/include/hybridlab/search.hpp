#pragma once

// Deterministic search utilities shared by the bound optimizers.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hybridlab/errors.hpp"

namespace hybridlab {

/// Strict-improvement threshold for every refinement step.
inline constexpr double kImprovementThreshold = 1e-12;

struct SearchConfig {
  int simplex_resolution = 12;          // simplex grids use steps of 1/m
  std::int64_t max_grid_points = 50'000'000;
  int sigma_grid_points = 120;          // log-spaced sigma^2 grid
  double sigma_min = 1e-3;
  double sigma_max = 1e6;
  double ab_step = 0.02;                // triangular (alpha, beta) grid step
  double golden_tolerance = 1e-10;      // in log(sigma^2)
  int golden_max_iter = 200;
  int descent_rounds = 200;
  double descent_min_step = 1e-7;
  int restarts = 4;
  std::uint64_t seed = 20130611;
  int jobs = 1;

  void validate() const;
};

/// Number of points of the simplex grid {j/m : sum = 1} in k dimensions,
/// C(m+k-1, k-1). Throws ResourceLimitError above `cap`.
std::int64_t simplex_count(int k, int m, std::int64_t cap = INT64_MAX);

/// Lexicographically ordered simplex grid (first coordinate ascending).
class SimplexGrid {
 public:
  SimplexGrid(int k, int m, std::int64_t cap = 10'000'000);

  int dimension() const { return k_; }
  int resolution() const { return m_; }
  std::int64_t size() const { return static_cast<std::int64_t>(points_.size()); }
  const Eigen::VectorXd& operator[](std::int64_t i) const { return points_[static_cast<std::size_t>(i)]; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

 private:
  int k_;
  int m_;
  std::vector<Eigen::VectorXd> points_;
};

std::vector<Eigen::VectorXd> enumerate_simplex(int k, int m, std::int64_t cap = 10'000'000);

/// codomain^domain, throwing ResourceLimitError above `cap`.
std::int64_t map_count(int domain, int codomain, std::int64_t cap = INT64_MAX);
/// The index-th map in lexicographic order (entry 0 most significant).
void map_from_index(std::int64_t index, int codomain, std::span<int> out);

struct GoldenResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Golden-section maximization of f on [lo, hi]. Endpoints are evaluated too,
/// so a monotone objective returns the better endpoint. When `seed_x` is given
/// the result is never worse than f(seed_x).
GoldenResult golden_refine(const std::function<double(double)>& f, double lo, double hi,
                           double tol, int max_iter,
                           std::optional<double> seed_x = std::nullopt);

struct TrianglePoint {
  double alpha = 0.0;
  double beta = 0.0;
};

struct DescentResult {
  TrianglePoint point;
  double value = 0.0;
  int rounds = 0;
  int accepted_steps = 0;
};

struct StepSchedule {
  double initial = 0.02;
  double shrink = 0.5;
  double min_step = 1e-7;
};

/// Pattern-search maximization of f(alpha, beta) over the triangle
/// alpha, beta >= 0, alpha + beta <= 1. Moves are clipped to the triangle;
/// only strict improvements are accepted.
DescentResult coordinate_descent(const std::function<double(double, double)>& f,
                                 TrianglePoint start, StepSchedule schedule, int max_rounds);

bool in_triangle(TrianglePoint p);

/// Triangular grid {(i h, j h) : i + j <= 1/h}, alpha-major order.
std::vector<TrianglePoint> triangle_grid(double step);

/// Reproducible restart points in the triangle, one derived stream per index.
std::vector<TrianglePoint> restart_points(std::uint64_t seed, int count);

}  // namespace hybridlab
