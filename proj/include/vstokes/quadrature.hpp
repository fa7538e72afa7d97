#pragma once

#include <array>
#include <vector>

#include "vstokes/geometry.hpp"

namespace vstokes {

struct EdgeRule {
  std::vector<double> points;   // on the reference edge [-1, 1]
  std::vector<double> weights;  // sum to 2
};

// (k+1)-point Gauss-Lobatto rule on [-1,1]. Only order 3 (k = 2) is supported;
// other orders are rejected.
EdgeRule gauss_lobatto_edge_rule(int order);

// Gauss-Legendre rule on [-1,1], n in {1,...,5}.
EdgeRule gauss_legendre_rule(int n);

struct TrianglePoint {
  double l0, l1, l2;  // barycentric coordinates
  double w;           // weight, sums to 1 over the rule
};

// Symmetric rule on the reference triangle exact for the given polynomial
// degree (4 or 5 supplied).
const std::vector<TrianglePoint>& triangle_rule(int degree);

// Scaled monomial moments of a polygon:
//   m[idx(a,b)] = integral over K of ((x-xc)/h)^a ((y-yc)/h)^b dK,  a+b <= max_deg.
// Computed exactly by a Green's-theorem reduction to edge integrals.
// Monomial index layout: (0,0),(1,0),(0,1),(2,0),(1,1),(0,2),(3,0),...
std::vector<double> polygon_monomial_moments(const std::vector<Point2>& poly, const Point2& xc,
                                             double h, int max_deg);

inline int monomial_count(int max_deg) { return (max_deg + 1) * (max_deg + 2) / 2; }

// Index of x^a y^b in the graded layout above.
inline int monomial_index(int a, int b) {
  const int d = a + b;
  return d * (d + 1) / 2 + b;
}

}  // namespace vstokes
