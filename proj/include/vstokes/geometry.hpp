#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace vstokes {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2() = default;
  Point2(double x_, double y_) : x(x_), y(y_) {}

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Point2& o) const { return x * o.x + y * o.y; }
  // z-component of the 2D cross product
  double cross(const Point2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

// Signed area of a polygon given as a vertex loop (positive if counterclockwise).
double polygon_signed_area(const std::vector<Point2>& poly);

// Area-weighted centroid. Requires nonzero area.
Point2 polygon_centroid(const std::vector<Point2>& poly);

// Maximum pairwise vertex distance.
double polygon_diameter(const std::vector<Point2>& poly);

// Clip a polygon against the half-plane { p : (p - a).dot(n) <= 0 }.
// Returns the (possibly empty) clipped polygon; orientation is preserved.
std::vector<Point2> clip_halfplane(const std::vector<Point2>& poly, const Point2& a,
                                   const Point2& n);

// True if the polygon kernel (set of points seeing every vertex) is nonempty,
// i.e. the polygon is star-shaped with respect to some interior point.
bool polygon_kernel_nonempty(const std::vector<Point2>& poly);

// Remove consecutive vertices closer than tol; drops degenerate slivers.
std::vector<Point2> dedup_ring(const std::vector<Point2>& poly, double tol);

}  // namespace vstokes
