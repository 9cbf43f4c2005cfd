#include <doctest.h>

#include <cmath>
#include <random>

#include "stratprof/errors.hpp"
#include "stratprof/group.hpp"

using namespace stratprof;

namespace {

Point random_point(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Point p(static_cast<std::size_t>(n));
  for (auto& v : p.coords) v = u(rng);
  return p;
}

// Heisenberg(1) law written out by hand, independent of the library's term table.
Point h1_mul(const Point& a, const Point& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0])};
}

}  // namespace

TEST_CASE("multiply on presets") {
  const auto a2 = GroupSpec::abelian(2);
  CHECK(a2.multiply({1, 2}, {3, 4}) == Point{4, 6});

  const auto h = GroupSpec::heisenberg(1);
  CHECK(h.multiply(h.identity(), {5, -1, 2}) == Point{5, -1, 2});
  CHECK(h.multiply({1, 0, 0}, {0, 1, 0}) == Point{1, 1, 0.5});
  CHECK_THROWS_AS(h.multiply({1, 0}, {0, 1, 0}), LayoutError);
}

TEST_CASE("inverse is coordinate negation") {
  CHECK(GroupSpec::abelian(3).inverse({1, -2, 5}) == Point{-1, 2, -5});
  const auto h = GroupSpec::heisenberg(1);
  CHECK(h.inverse({0, 0, 0}) == Point{0, 0, 0});
  CHECK(h.inverse({1, 2, 3}) == Point{-1, -2, -3});
  CHECK(h.multiply({1, 2, 3}, h.inverse({1, 2, 3})) == h.identity());
}

TEST_CASE("dilations") {
  const auto h = GroupSpec::heisenberg(1);
  CHECK(h.dilate(2, {1, 1, 1}) == Point{2, 2, 4});
  CHECK(h.dilate(1, {0.3, -0.7, 1.1}) == Point{0.3, -0.7, 1.1});
  CHECK(GroupSpec::abelian(2).dilate(3, {1, -1}) == Point{3, -3});
  CHECK_THROWS_AS(h.dilate(0.0, {1, 1, 1}), DomainError);
  CHECK_THROWS_AS(h.dilate(-1.0, {1, 1, 1}), DomainError);
  // composition in exponent arithmetic is exact for powers of two
  const Point x{0.3, -0.7, 1.1};
  CHECK(h.dilate(4, h.dilate(0.5, x)) == h.dilate(2, x));
}

TEST_CASE("homogeneous norm") {
  const auto h = GroupSpec::heisenberg(1);
  CHECK(h.norm(h.identity()) == 0.0);
  CHECK(h.norm(Point{0, 0, 1}) == doctest::Approx(2.0).epsilon(1e-15));
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Point x = random_point(rng, 3, 2.0);
    CHECK(h.norm(h.inverse(x)) == h.norm(x));
    CHECK(std::abs(h.norm(h.dilate(2, x)) / h.norm(x) - 2.0) <= 1e-12);
  }
  CHECK(GroupSpec::abelian(2).norm(Point{3, 4}) == doctest::Approx(5.0));
}

TEST_CASE("homogeneous dimension and critical exponent") {
  CHECK(GroupSpec::abelian(3).homogeneous_dimension() == 3);
  CHECK(GroupSpec::heisenberg(1).homogeneous_dimension() == 4);
  for (int d = 1; d <= 4; ++d) CHECK(GroupSpec::heisenberg(d).homogeneous_dimension() == 2 * d + 2);
  CHECK(critical_exponent(GroupSpec::heisenberg(1), 1.0) == doctest::Approx(4.0));
  CHECK(critical_exponent(GroupSpec::abelian(2), 0.5) == doctest::Approx(4.0));
  CHECK(critical_exponent(GroupSpec::heisenberg(1), 1e-9) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK_THROWS_AS(critical_exponent(GroupSpec::heisenberg(1), 0.0), DomainError);
  CHECK_THROWS_AS(critical_exponent(GroupSpec::heisenberg(1), 2.0), DomainError);
}

TEST_CASE("Heisenberg law against a hand-written oracle") {
  const auto h = GroupSpec::heisenberg(1);
  std::mt19937_64 rng(3);
  double worst_assoc = 0.0, worst_oracle = 0.0, worst_aut = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Point x = random_point(rng, 3), y = random_point(rng, 3), z = random_point(rng, 3);
    worst_oracle = std::max(worst_oracle, max_abs_diff(h.multiply(x, y), h1_mul(x, y)));
    worst_assoc = std::max(worst_assoc, max_abs_diff(h.multiply(h.multiply(x, y), z), h.multiply(x, h.multiply(y, z))));
    worst_aut = std::max(worst_aut, max_abs_diff(h.dilate(1.7, h.multiply(x, y)),
                                                 h.multiply(h.dilate(1.7, x), h.dilate(1.7, y))));
  }
  CHECK(worst_oracle <= 1e-15);
  CHECK(worst_assoc <= 1e-12);
  CHECK(worst_aut <= 1e-12);
}

TEST_CASE("Heisenberg(2) law validation and quasi-triangle constant") {
  const auto h2 = GroupSpec::heisenberg(2);
  const auto v = validate_law(h2, 500, 5);
  CHECK(v.ok);
  const double c = measure_quasi_triangle_constant(GroupSpec::heisenberg(1), 10000, 9);
  CHECK(std::isfinite(c));
  CHECK(c >= 1.0 / 2.0);
  // Euclidean norm satisfies the plain triangle inequality
  CHECK(measure_quasi_triangle_constant(GroupSpec::abelian(2), 2000, 9) <= 1.0 + 1e-12);
}

TEST_CASE("custom law: Heisenberg written as terms is accepted, a broken one rejected") {
  std::vector<LawTerm> terms{{2, 0.5, {1, 0, 0}, {0, 1, 0}}, {2, -0.5, {0, 1, 0}, {1, 0, 0}}};
  const auto g = GroupSpec::custom({2, 1}, terms);
  CHECK(g.homogeneous_dimension() == 4);
  CHECK(max_abs_diff(g.multiply({1, 0, 0}, {0, 1, 0}), Point{1, 1, 0.5}) <= 1e-15);
  // x^2 y term in the centre is not homogeneous of weight 2
  std::vector<LawTerm> bad{{2, 1.0, {2, 0, 0}, {0, 1, 0}}};
  CHECK_THROWS_AS(GroupSpec::custom({2, 1}, bad), DomainError);
}

TEST_CASE("group JSON round trip") {
  for (const auto& g : {GroupSpec::abelian(2), GroupSpec::heisenberg(1)}) {
    nlohmann::json j = g;
    CHECK(group_from_json(j) == g);
  }
}
