#include <doctest.h>

#include "vstokes/quadrature.hpp"

using namespace vstokes;

TEST_CASE("gauss-lobatto 3-point rule") {
  const EdgeRule r = gauss_lobatto_edge_rule(3);
  REQUIRE(r.points.size() == 3);
  CHECK(r.points[0] == -1.0);
  CHECK(r.points[1] == 0.0);
  CHECK(r.points[2] == 1.0);
  CHECK(r.weights[0] == doctest::Approx(1.0 / 3.0));
  CHECK(r.weights[1] == doctest::Approx(4.0 / 3.0));
  CHECK(r.weights[2] == doctest::Approx(1.0 / 3.0));

  auto integrate = [&](auto f) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.points.size(); ++i) s += r.weights[i] * f(r.points[i]);
    return s;
  };
  CHECK(integrate([](double) { return 1.0; }) == doctest::Approx(2.0));
  CHECK(integrate([](double x) { return x * x; }) == doctest::Approx(2.0 / 3.0));
  CHECK(integrate([](double x) { return x * x * x; }) == doctest::Approx(0.0));
}

TEST_CASE("unsupported gauss-lobatto order rejected") {
  CHECK_THROWS(gauss_lobatto_edge_rule(2));
  CHECK_THROWS(gauss_lobatto_edge_rule(4));
}

TEST_CASE("polygon monomial moments against closed forms") {
  // unit square centered at its centroid, h = 1
  const std::vector<Point2> sq = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto mom = polygon_monomial_moments(sq, {0.5, 0.5}, 1.0, 2);
  CHECK(mom[monomial_index(0, 0)] == doctest::Approx(1.0));
  CHECK(mom[monomial_index(1, 0)] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(mom[monomial_index(0, 1)] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(mom[monomial_index(2, 0)] == doctest::Approx(1.0 / 12.0));
  CHECK(mom[monomial_index(0, 2)] == doctest::Approx(1.0 / 12.0));
  CHECK(mom[monomial_index(1, 1)] == doctest::Approx(0.0).epsilon(1e-14));

  // right triangle (0,0),(1,0),(0,1): integral of x over T = 1/6
  const std::vector<Point2> tri = {{0, 0}, {1, 0}, {0, 1}};
  const auto mt = polygon_monomial_moments(tri, {0, 0}, 1.0, 2);
  CHECK(mt[monomial_index(0, 0)] == doctest::Approx(0.5));
  CHECK(mt[monomial_index(1, 0)] == doctest::Approx(1.0 / 6.0));
  CHECK(mt[monomial_index(2, 0)] == doctest::Approx(1.0 / 12.0));
  CHECK(mt[monomial_index(1, 1)] == doctest::Approx(1.0 / 24.0));
}

TEST_CASE("triangle rules integrate polynomials exactly") {
  // degree-4 rule on the reference triangle: integral of l0^4 = 1/15 of area
  const auto& r4 = triangle_rule(4);
  double s = 0.0, total = 0.0;
  for (const auto& q : r4) {
    s += q.w * q.l0 * q.l0 * q.l0 * q.l0;
    total += q.w;
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(s == doctest::Approx(1.0 / 15.0));

  const auto& r5 = triangle_rule(5);
  double s5 = 0.0;
  for (const auto& q : r5) s5 += q.w * std::pow(q.l0, 5);
  CHECK(s5 == doctest::Approx(1.0 / 21.0));
}
