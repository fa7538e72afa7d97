#include "vstokes/geometry.hpp"

namespace vstokes {

double polygon_signed_area(const std::vector<Point2>& poly) {
  double twice = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    twice += a.cross(b);
  }
  return 0.5 * twice;
}

Point2 polygon_centroid(const std::vector<Point2>& poly) {
  double twice = 0.0;
  double cx = 0.0, cy = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    const double w = a.cross(b);
    twice += w;
    cx += (a.x + b.x) * w;
    cy += (a.y + b.y) * w;
  }
  if (twice == 0.0) throw std::runtime_error("polygon_centroid: degenerate polygon");
  return {cx / (3.0 * twice), cy / (3.0 * twice)};
}

double polygon_diameter(const std::vector<Point2>& poly) {
  double d = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    for (std::size_t j = i + 1; j < poly.size(); ++j)
      d = std::max(d, distance(poly[i], poly[j]));
  return d;
}

std::vector<Point2> clip_halfplane(const std::vector<Point2>& poly, const Point2& a,
                                   const Point2& n) {
  std::vector<Point2> out;
  const std::size_t m = poly.size();
  if (m == 0) return out;
  out.reserve(m + 2);
  for (std::size_t i = 0; i < m; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % m];
    const double dp = (p - a).dot(n);
    const double dq = (q - a).dot(n);
    const bool pin = dp <= 0.0;
    const bool qin = dq <= 0.0;
    if (pin) out.push_back(p);
    if (pin != qin) {
      const double t = dp / (dp - dq);
      out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
    }
  }
  return out;
}

bool polygon_kernel_nonempty(const std::vector<Point2>& poly) {
  // Intersect the half-planes to the left of each directed edge, starting from
  // the polygon itself. Nonempty result means some point sees all edges.
  std::vector<Point2> ker = poly;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n && !ker.empty(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    // interior is to the left of a->b for CCW polygons: (p-a) x (b-a) <= 0
    const Point2 edge = b - a;
    const Point2 outward_normal{edge.y, -edge.x};
    ker = clip_halfplane(ker, a, outward_normal);
  }
  if (ker.empty()) return false;
  return std::abs(polygon_signed_area(ker)) > 0.0;
}

std::vector<Point2> dedup_ring(const std::vector<Point2>& poly, double tol) {
  std::vector<Point2> out;
  for (const Point2& p : poly) {
    if (out.empty() || distance(out.back(), p) > tol) out.push_back(p);
  }
  while (out.size() > 1 && distance(out.front(), out.back()) <= tol) out.pop_back();
  return out;
}

}  // namespace vstokes
