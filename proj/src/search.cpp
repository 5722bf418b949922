#include "hybridlab/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hybridlab/rng.hpp"

namespace hybridlab {

void SearchConfig::validate() const {
  if (simplex_resolution < 1 || max_grid_points < 1 || sigma_grid_points < 2 ||
      !(sigma_min > 0.0) || !(sigma_max > sigma_min) || !(ab_step > 0.0) || ab_step > 1.0 ||
      !(golden_tolerance > 0.0) || golden_max_iter < 1 || descent_rounds < 1 ||
      !(descent_min_step > 0.0) || restarts < 0 || jobs < 1) {
    throw InputError("SearchConfig: caps and tolerances must be positive");
  }
}

std::int64_t simplex_count(int k, int m, std::int64_t cap) {
  if (k < 1 || m < 1) throw InputError("simplex grid: need k >= 1 and m >= 1");
  // C(m+i, i) = C(m+i-1, i-1) (m+i) / i, with i / gcd(c, i) dividing m + i.
  std::int64_t c = 1;
  for (int i = 1; i <= k - 1; ++i) {
    const std::int64_t g = std::gcd(c, static_cast<std::int64_t>(i));
    const bool overflow = __builtin_mul_overflow(c / g, (m + i) / (i / g), &c);
    if (overflow || c > cap) {
      throw ResourceLimitError("simplex grid with k=" + std::to_string(k) + ", m=" +
                               std::to_string(m) + " exceeds the point cap");
    }
  }
  return static_cast<std::int64_t>(c);
}

namespace {

void fill_simplex(int k, int m, int pos, int remaining, std::vector<int>& counts,
                  std::vector<Eigen::VectorXd>& out) {
  if (pos == k - 1) {
    counts[pos] = remaining;
    Eigen::VectorXd p(k);
    for (int i = 0; i < k; ++i) p[i] = static_cast<double>(counts[i]) / m;
    out.push_back(std::move(p));
    return;
  }
  for (int c = 0; c <= remaining; ++c) {
    counts[pos] = c;
    fill_simplex(k, m, pos + 1, remaining - c, counts, out);
  }
}

}  // namespace

std::vector<Eigen::VectorXd> enumerate_simplex(int k, int m, std::int64_t cap) {
  const std::int64_t n = simplex_count(k, m, cap);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n));
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  fill_simplex(k, m, 0, m, counts, out);
  return out;
}

SimplexGrid::SimplexGrid(int k, int m, std::int64_t cap)
    : k_(k), m_(m), points_(enumerate_simplex(k, m, cap)) {}

std::int64_t map_count(int domain, int codomain, std::int64_t cap) {
  if (domain < 0 || codomain < 1) throw InputError("map_count: invalid alphabet sizes");
  std::int64_t n = 1;
  for (int i = 0; i < domain; ++i) {
    if (n > cap / codomain) {
      throw ResourceLimitError("map enumeration " + std::to_string(codomain) + "^" +
                               std::to_string(domain) + " exceeds the cap");
    }
    n *= codomain;
  }
  return n;
}

void map_from_index(std::int64_t index, int codomain, std::span<int> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<int>(index % codomain);
    index /= codomain;
  }
}

GoldenResult golden_refine(const std::function<double(double)>& f, double lo, double hi,
                           double tol, int max_iter, std::optional<double> seed_x) {
  if (!(lo < hi)) throw InputError("golden_refine: bracket must satisfy lo < hi");
  if (!(tol > 0.0) || max_iter < 1) throw InputError("golden_refine: tol and max_iter must be positive");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  GoldenResult r;
  while (b - a > tol && r.iterations < max_iter) {
    ++r.iterations;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  r.converged = (b - a) <= tol;
  if (fc >= fd) {
    r.x = c;
    r.value = fc;
  } else {
    r.x = d;
    r.value = fd;
  }
  for (double end : {lo, hi}) {
    const double fe = f(end);
    if (fe > r.value + kImprovementThreshold) {
      r.x = end;
      r.value = fe;
    }
  }
  if (seed_x) {
    const double fs = f(*seed_x);
    if (!(r.value > fs + kImprovementThreshold)) {
      r.x = *seed_x;
      r.value = fs;
    }
  }
  return r;
}

bool in_triangle(TrianglePoint p) {
  return p.alpha >= 0.0 && p.beta >= 0.0 && p.alpha <= 1.0 && p.beta <= 1.0 &&
         p.alpha + p.beta <= 1.0 + 1e-15;
}

namespace {

TrianglePoint clip(TrianglePoint p, TrianglePoint from) {
  p.alpha = std::clamp(p.alpha, 0.0, 1.0);
  p.beta = std::clamp(p.beta, 0.0, 1.0);
  if (p.alpha + p.beta > 1.0) {
    // Shorten the move along its direction until it meets the hypotenuse.
    const double da = p.alpha - from.alpha;
    const double db = p.beta - from.beta;
    const double room = 1.0 - from.alpha - from.beta;
    const double grow = da + db;
    const double t = grow > 0.0 ? std::clamp(room / grow, 0.0, 1.0) : 1.0;
    p.alpha = from.alpha + t * da;
    p.beta = from.beta + t * db;
    if (p.alpha + p.beta > 1.0) p.beta = 1.0 - p.alpha;
  }
  return p;
}

}  // namespace

DescentResult coordinate_descent(const std::function<double(double, double)>& f,
                                 TrianglePoint start, StepSchedule schedule, int max_rounds) {
  if (!in_triangle(start)) throw InputError("coordinate_descent: infeasible start");
  if (!(schedule.initial > 0.0) || !(schedule.shrink > 0.0 && schedule.shrink < 1.0) ||
      !(schedule.min_step > 0.0) || max_rounds < 1) {
    throw InputError("coordinate_descent: invalid step schedule");
  }
  DescentResult r;
  r.point = start;
  r.value = f(start.alpha, start.beta);
  double step = schedule.initial;
  static constexpr double kMoves[6][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};
  while (r.rounds < max_rounds && step >= schedule.min_step) {
    ++r.rounds;
    bool improved = false;
    for (const auto& mv : kMoves) {
      TrianglePoint cand{r.point.alpha + mv[0] * step, r.point.beta + mv[1] * step};
      cand = clip(cand, r.point);
      if (cand.alpha == r.point.alpha && cand.beta == r.point.beta) continue;
      const double v = f(cand.alpha, cand.beta);
      if (v > r.value + kImprovementThreshold) {
        r.point = cand;
        r.value = v;
        ++r.accepted_steps;
        improved = true;
        break;
      }
    }
    if (!improved) step *= schedule.shrink;
  }
  return r;
}

std::vector<TrianglePoint> triangle_grid(double step) {
  if (!(step > 0.0) || step > 1.0) throw InputError("triangle_grid: step must lie in (0,1]");
  const int m = static_cast<int>(std::lround(1.0 / step));
  std::vector<TrianglePoint> out;
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; i + j <= m; ++j) {
      out.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
    }
  }
  return out;
}

std::vector<TrianglePoint> restart_points(std::uint64_t seed, int count) {
  std::vector<TrianglePoint> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(seed, StreamPurpose::kRestart, static_cast<std::uint64_t>(i));
    // Uniform on the triangle via sorted uniforms.
    double u = rng.uniform();
    double v = rng.uniform();
    if (u > v) std::swap(u, v);
    out.push_back({u, v - u});
  }
  return out;
}

}  // namespace hybridlab
