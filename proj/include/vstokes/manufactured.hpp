#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "vstokes/geometry.hpp"

namespace vstokes::manufactured {

// Stokes benchmark on the unit square with homogeneous Dirichlet data:
//   u = (-sin^2(pi x) sin(2 pi y), sin^2(pi y) sin(2 pi x)),
//   p = sin(pi x) - sin(pi y),
// and the load consistent with -nu*Lap(u) - grad(p) = f at nu = 1.

inline Point2 velocity(const Point2& pt) {
  const double sx = std::sin(M_PI * pt.x);
  const double sy = std::sin(M_PI * pt.y);
  return {-sx * sx * std::sin(2.0 * M_PI * pt.y), sy * sy * std::sin(2.0 * M_PI * pt.x)};
}

inline Eigen::Matrix2d velocity_gradient(const Point2& pt) {
  const double sx = std::sin(M_PI * pt.x), sy = std::sin(M_PI * pt.y);
  const double s2x = std::sin(2.0 * M_PI * pt.x), s2y = std::sin(2.0 * M_PI * pt.y);
  const double c2x = std::cos(2.0 * M_PI * pt.x), c2y = std::cos(2.0 * M_PI * pt.y);
  Eigen::Matrix2d g;
  g(0, 0) = -M_PI * s2x * s2y;
  g(0, 1) = -2.0 * M_PI * sx * sx * c2y;
  g(1, 0) = 2.0 * M_PI * sy * sy * c2x;
  g(1, 1) = M_PI * s2y * s2x;
  return g;
}

inline double pressure(const Point2& pt) {
  return std::sin(M_PI * pt.x) - std::sin(M_PI * pt.y);
}

inline Point2 load(const Point2& pt) {
  const double c2x = std::cos(2.0 * M_PI * pt.x), c2y = std::cos(2.0 * M_PI * pt.y);
  const double s2x = std::sin(2.0 * M_PI * pt.x), s2y = std::sin(2.0 * M_PI * pt.y);
  const double pi2 = M_PI * M_PI;
  // -Lap(u) with Lap u = (2 pi^2 s2y (1 - 2 c2x), 2 pi^2 s2x (2 c2y - 1))
  const double f1 = -2.0 * pi2 * s2y * (1.0 - 2.0 * c2x) - M_PI * std::cos(M_PI * pt.x);
  const double f2 = -2.0 * pi2 * s2x * (2.0 * c2y - 1.0) + M_PI * std::cos(M_PI * pt.y);
  return {f1, f2};
}

}  // namespace vstokes::manufactured
