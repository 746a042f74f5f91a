#ifndef COULOMB_TEST_UTIL_HPP
#define COULOMB_TEST_UTIL_HPP

#include <array>
#include <algorithm>
#include <cmath>

#include "coulomb/manifold.hpp"

namespace coulomb::test {

inline Point torus2(double a, double b) {
  Point p;
  p[0] = a;
  p[1] = b;
  return p;
}

inline Point torus3(double a, double b, double c) {
  Point p;
  p[0] = a;
  p[1] = b;
  p[2] = c;
  return p;
}

inline Point sphere(double x, double y, double z) {
  const std::array<double, 3> c{x, y, z};
  return Manifold(ManifoldKind::Sphere2).make_point(c);
}

// Flat 2-torus Green function by one closed-form lattice direction:
// sum_b cos(2 pi b u)/(a^2 + b^2) = (pi/a) cosh(pi a (1 - 2u)) / sinh(pi a) for
// u in [0, 1], and sum_{b != 0} cos(2 pi b u)/b^2 = 2 pi^2 (u^2 - u + 1/6).
inline double torus2_green_oracle(double u1, double u2) {
  u1 -= std::floor(u1);
  u2 -= std::floor(u2);
  // The series in a decays like exp(-2 pi a dist(u2, Z)); sum along the far axis.
  if (std::min(u2, 1.0 - u2) < std::min(u1, 1.0 - u1)) std::swap(u1, u2);
  const double pi = std::numbers::pi;
  double s = 2.0 * pi * pi * (u2 * u2 - u2 + 1.0 / 6.0);
  for (int a = 1; a <= 1000000; ++a) {
    const double ratio = (std::exp(-2.0 * pi * a * u2) + std::exp(-2.0 * pi * a * (1.0 - u2))) / -std::expm1(-2.0 * pi * a);
    const double term = (pi / a) * ratio;
    s += 2.0 * std::cos(2.0 * pi * a * u1) * term;
    if (term < 1e-18) break;
  }
  return s / (4.0 * pi * pi);
}

}  // namespace coulomb::test

#endif  // COULOMB_TEST_UTIL_HPP
