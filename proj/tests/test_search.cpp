#include <doctest.h>

#include <cmath>
#include <set>

#include "hybridlab/search.hpp"

using namespace hybridlab;

namespace {

std::int64_t binomial(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return static_cast<std::int64_t>(std::llround(v));
}

}  // namespace

TEST_CASE("simplex grid size, membership and order") {
  for (int k = 1; k <= 4; ++k) {
    for (int m = 1; m <= 8; ++m) {
      const SimplexGrid g(k, m);
      CHECK(g.size() == binomial(m + k - 1, k - 1));
      CHECK(simplex_count(k, m) == g.size());
      for (const auto& p : g) {
        CHECK(p.sum() == doctest::Approx(1.0));
        CHECK(p.minCoeff() >= 0.0);
        for (Eigen::Index i = 0; i < p.size(); ++i) {
          CHECK(std::abs(p[i] * m - std::round(p[i] * m)) < 1e-9);
        }
      }
      for (std::int64_t i = 1; i < g.size(); ++i) {
        // Lexicographic with the first coordinate ascending.
        const auto& a = g[i - 1];
        const auto& b = g[i];
        Eigen::Index j = 0;
        while (j < a.size() && std::abs(a[j] - b[j]) < 1e-12) ++j;
        REQUIRE(j < a.size());
        CHECK(a[j] < b[j]);
      }
    }
  }
  CHECK_THROWS_AS(simplex_count(10, 100, 1000), ResourceLimitError);
  CHECK_THROWS_AS(SimplexGrid(6, 40, 1000), ResourceLimitError);
}

TEST_CASE("map enumeration") {
  CHECK(map_count(3, 4) == 64);
  CHECK_THROWS_AS(map_count(40, 4, 1'000'000), ResourceLimitError);
  std::set<std::vector<int>> seen;
  std::vector<int> out(3);
  for (std::int64_t i = 0; i < 27; ++i) {
    map_from_index(i, 3, out);
    seen.insert(out);
  }
  CHECK(seen.size() == 27);
  map_from_index(5, 3, out);  // 5 = 0*9 + 1*3 + 2
  CHECK(out == std::vector<int>{0, 1, 2});
}

TEST_CASE("golden section finds interior and boundary maxima") {
  const auto f = [](double x) { return -(x - 0.3) * (x - 0.3); };
  const GoldenResult r = golden_refine(f, -1.0, 2.0, 1e-10, 200);
  CHECK(r.x == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(r.converged);
  const GoldenResult edge = golden_refine([](double x) { return x; }, 0.0, 1.0, 1e-10, 200);
  CHECK(edge.x == 1.0);
  // The seed point is never beaten by a worse result.
  const auto bumpy = [](double x) { return std::cos(20 * x); };
  const GoldenResult seeded = golden_refine(bumpy, 0.0, 1.0, 1e-10, 200, 0.0);
  CHECK(seeded.value >= bumpy(0.0) - 1e-15);
}

TEST_CASE("coordinate descent stays in the triangle and climbs") {
  const auto f = [](double a, double b) { return -(a - 0.2) * (a - 0.2) - (b - 0.5) * (b - 0.5); };
  const DescentResult r = coordinate_descent(f, {0.0, 0.0}, {}, 500);
  CHECK(r.point.alpha == doctest::Approx(0.2).epsilon(1e-5));
  CHECK(r.point.beta == doctest::Approx(0.5).epsilon(1e-5));
  // Unconstrained optimum outside the triangle: the result sits on the edge.
  const auto g = [](double a, double b) { return a + 2 * b; };
  const DescentResult e = coordinate_descent(g, {0.1, 0.1}, {}, 500);
  CHECK(in_triangle(e.point));
  CHECK(e.value == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("triangle grid and restart points") {
  const auto grid = triangle_grid(0.25);
  CHECK(grid.size() == 15);
  for (const auto& p : grid) CHECK(in_triangle(p));
  const auto a = restart_points(42, 6);
  const auto b = restart_points(42, 6);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].alpha == b[i].alpha);
    CHECK(a[i].beta == b[i].beta);
    CHECK(in_triangle(a[i]));
  }
  CHECK(restart_points(43, 1)[0].alpha != a[0].alpha);
}
