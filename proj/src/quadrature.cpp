#include "vstokes/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace vstokes {

EdgeRule gauss_lobatto_edge_rule(int order) {
  if (order != 3)
    throw std::invalid_argument("gauss_lobatto_edge_rule: only the 3-point rule is supported");
  return {{-1.0, 0.0, 1.0}, {1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0}};
}

EdgeRule gauss_legendre_rule(int n) {
  switch (n) {
    case 1:
      return {{0.0}, {2.0}};
    case 2: {
      const double p = 1.0 / std::sqrt(3.0);
      return {{-p, p}, {1.0, 1.0}};
    }
    case 3: {
      const double p = std::sqrt(3.0 / 5.0);
      return {{-p, 0.0, p}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      return {{-b, -a, a, b}, {wb, wa, wa, wb}};
    }
    case 5: {
      const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      return {{-b, -a, 0.0, a, b}, {wb, wa, 128.0 / 225.0, wa, wb}};
    }
    default:
      throw std::invalid_argument("gauss_legendre_rule: n must be in 1..5");
  }
}

const std::vector<TrianglePoint>& triangle_rule(int degree) {
  // Dunavant symmetric rules; weights normalized to sum to 1.
  static const std::vector<TrianglePoint> deg4 = [] {
    std::vector<TrianglePoint> r;
    const double w1 = 0.223381589678011, a1 = 0.445948490915965;
    const double w2 = 0.109951743655322, a2 = 0.091576213509771;
    for (int i = 0; i < 3; ++i) {
      double l[3] = {a1, a1, a1};
      l[i] = 1.0 - 2.0 * a1;
      r.push_back({l[0], l[1], l[2], w1});
    }
    for (int i = 0; i < 3; ++i) {
      double l[3] = {a2, a2, a2};
      l[i] = 1.0 - 2.0 * a2;
      r.push_back({l[0], l[1], l[2], w2});
    }
    return r;
  }();
  static const std::vector<TrianglePoint> deg5 = [] {
    std::vector<TrianglePoint> r;
    r.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225});
    const double w1 = 0.132394152788506, a1 = 0.470142064105115;
    const double w2 = 0.125939180544827, a2 = 0.101286507323456;
    for (int i = 0; i < 3; ++i) {
      double l[3] = {a1, a1, a1};
      l[i] = 1.0 - 2.0 * a1;
      r.push_back({l[0], l[1], l[2], w1});
    }
    for (int i = 0; i < 3; ++i) {
      double l[3] = {a2, a2, a2};
      l[i] = 1.0 - 2.0 * a2;
      r.push_back({l[0], l[1], l[2], w2});
    }
    return r;
  }();
  if (degree <= 4) return deg4;
  if (degree <= 5) return deg5;
  throw std::invalid_argument("triangle_rule: unsupported degree");
}

std::vector<double> polygon_monomial_moments(const std::vector<Point2>& poly, const Point2& xc,
                                             double h, int max_deg) {
  // integral of s^a t^b over K with s=(x-xc)/h, t=(y-yc)/h equals
  //   1/(a+1) * sum over edges of integral of s^(a+1) t^b nx ds
  // after mapping to scaled coordinates (the h^2 Jacobian is folded in by
  // integrating in scaled coordinates with the scaled edge measure).
  const int nm = monomial_count(max_deg);
  std::vector<double> mom(nm, 0.0);
  const EdgeRule gl = gauss_legendre_rule(5);  // exact for edge polynomials up to degree 9
  const std::size_t nv = poly.size();
  for (std::size_t e = 0; e < nv; ++e) {
    const Point2 a{(poly[e].x - xc.x) / h, (poly[e].y - xc.y) / h};
    const Point2 b{(poly[(e + 1) % nv].x - xc.x) / h, (poly[(e + 1) % nv].y - xc.y) / h};
    const Point2 d = b - a;
    const double len = d.norm();
    if (len == 0.0) continue;
    // outward normal times edge length (CCW polygon): (dy, -dx)
    const double nx_len = d.y;
    for (std::size_t g = 0; g < gl.points.size(); ++g) {
      const double t01 = 0.5 * (gl.points[g] + 1.0);
      const double s = a.x + t01 * d.x;
      const double t = a.y + t01 * d.y;
      const double w = 0.5 * gl.weights[g] * nx_len;  // includes ds and n_x
      for (int deg = 0; deg <= max_deg; ++deg) {
        for (int bb = 0; bb <= deg; ++bb) {
          const int aa = deg - bb;
          mom[monomial_index(aa, bb)] +=
              w / (aa + 1.0) * std::pow(s, aa + 1) * std::pow(t, bb);
        }
      }
    }
  }
  // moments above are in scaled coordinates; multiply by h^2 for the physical measure
  for (double& m : mom) m *= h * h;
  return mom;
}

}  // namespace vstokes
