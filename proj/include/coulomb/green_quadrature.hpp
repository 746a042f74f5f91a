#ifndef COULOMB_GREEN_QUADRATURE_HPP
#define COULOMB_GREEN_QUADRATURE_HPP

// Quadrature of y -> G(x,y) f(y) against the volume measure, accounting for
// the singularity of G at y = x.
//
// Torus: smooth partition of unity chi(|y-x|) supported in a ball of radius
// kPatchRadius. The far part (1 - chi) G f is smooth and periodic, so the
// lattice rule converges spectrally; the near part is integrated in polar
// (2-D) or spherical (3-D) coordinates centred at x with tanh-sinh in the
// radius. Sphere: polar coordinates about x cover the whole sphere, so the
// grid is not needed.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "coulomb/manifold.hpp"
#include "coulomb/spectral.hpp"

namespace coulomb {

// Closed-form function with its Laplacian.
struct TestFunction {
  std::string name;
  ScalarField value;
  ScalarField laplacian;
  double mean = 0.0;  // integral against the volume measure
};

// Functions shipped for weak-identity checks.
inline std::vector<TestFunction> standard_test_functions(const Manifold& m) {
  std::vector<TestFunction> out;
  out.push_back({"constant", [](const Point&) { return 1.0; }, [](const Point&) { return 0.0; }, 1.0});
  if (m.is_torus()) {
    const double two_pi = 2.0 * kPi;
    out.push_back({"cos(2 pi x1)", [=](const Point& p) { return std::cos(two_pi * p[0]); },
                   [=](const Point& p) { return -kFourPiSq * std::cos(two_pi * p[0]); }, 0.0});
    out.push_back({"1 + sin(2 pi x1) cos(4 pi x2)",
                   [=](const Point& p) { return 1.0 + std::sin(two_pi * p[0]) * std::cos(2.0 * two_pi * p[1]); },
                   [=](const Point& p) {
                     return -5.0 * kFourPiSq * std::sin(two_pi * p[0]) * std::cos(2.0 * two_pi * p[1]);
                   },
                   1.0});
    if (m.dim() == 3) {
      out.push_back({"cos(2 pi (x1 + x3))", [=](const Point& p) { return std::cos(two_pi * (p[0] + p[2])); },
                     [=](const Point& p) { return -2.0 * kFourPiSq * std::cos(two_pi * (p[0] + p[2])); }, 0.0});
    }
    return out;
  }
  // Degree-1 and degree-2 spherical harmonics; eigenvalues 4 pi l(l+1).
  out.push_back({"u3", [](const Point& p) { return p[2]; },
                 [](const Point& p) { return -8.0 * kPi * p[2]; }, 0.0});
  out.push_back({"u1 u2 + 2", [](const Point& p) { return p[0] * p[1] + 2.0; },
                 [](const Point& p) { return -24.0 * kPi * p[0] * p[1]; }, 2.0});
  return out;
}

namespace detail {

inline double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

}  // namespace detail

class GreenQuadrature {
 public:
  static constexpr double kPatchRadius = 0.45;

  GreenQuadrature(const SpectralModel& model, const QuadratureGrid& grid, int angular_points = 64)
      : model_(model), grid_(grid), angular_(angular_points) {
    const Manifold& m = model.manifold();
    if (grid.kind != m.kind()) throw std::invalid_argument("GreenQuadrature: grid/manifold mismatch");
    if (m.kind() == ManifoldKind::Torus3) {
      std::vector<double> ct, cw;
      detail::gauss_legendre(angular_ / 4, ct, cw);
      const int nphi = angular_ / 2;
      for (std::size_t i = 0; i < ct.size(); ++i) {
        const double st = std::sqrt(1.0 - ct[i] * ct[i]);
        for (int j = 0; j < nphi; ++j) {
          const double phi = 2.0 * kPi * (j + 0.5) / nphi;
          directions_.push_back({st * std::cos(phi), st * std::sin(phi), ct[i]});
          direction_weights_.push_back(cw[i] * 2.0 * kPi / nphi);
        }
      }
    } else {
      for (int j = 0; j < angular_; ++j) {
        const double phi = 2.0 * kPi * j / angular_;
        directions_.push_back({std::cos(phi), std::sin(phi), 0.0});
        direction_weights_.push_back(2.0 * kPi / angular_);
      }
    }
  }

  // Integral of G(x, y) f(y) dpi(y).
  [[nodiscard]] double integrate(const Point& x, const ScalarField& f) const {
    return model_.manifold().is_torus() ? torus(x, f) : sphere(x, f);
  }

 private:
  [[nodiscard]] double cutoff(double r) const { return 1.0 - detail::smooth_step(r / kPatchRadius); }

  [[nodiscard]] double torus(const Point& x, const ScalarField& f) const {
    const Manifold& m = model_.manifold();
    const int d = m.dim();
    double far = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const Point& y = grid_.nodes[i];
      const double r = m.distance(x, y);
      const double outer = 1.0 - cutoff(r);
      if (outer == 0.0) continue;
      far += grid_.weights[i] * outer * model_.green(x, y).value * f(y);
    }
    auto shell = [&](double r) {
      // Integrand behaves like r^{d-1} log r near the centre.
      if (r < 1e-12) return 0.0;
      double sum = 0.0;
      for (std::size_t j = 0; j < directions_.size(); ++j) {
        Point y;
        for (int k = 0; k < d; ++k) y[k] = wrap_unit(x[k] + r * directions_[j][k]);
        sum += direction_weights_[j] * model_.green(x, y).value * f(y);
      }
      return cutoff(r) * std::pow(r, d - 1) * sum;
    };
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double near = integrator.integrate(shell, 0.0, kPatchRadius, 1e-12);
    return far + near;
  }

  [[nodiscard]] double sphere(const Point& x, const ScalarField& f) const {
    // Orthonormal tangent frame at x.
    std::array<double, 3> e1{}, e2{};
    const std::array<double, 3> n{x[0], x[1], x[2]};
    std::array<double, 3> a = std::abs(n[0]) < 0.9 ? std::array<double, 3>{1, 0, 0} : std::array<double, 3>{0, 1, 0};
    const double dot = a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
    for (int i = 0; i < 3; ++i) e1[i] = a[i] - dot * n[i];
    const double norm = std::hypot(e1[0], e1[1], e1[2]);
    for (int i = 0; i < 3; ++i) e1[i] /= norm;
    e2 = {n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2], n[0] * e1[1] - n[1] * e1[0]};

    auto ring = [&](double theta) {
      if (theta < 1e-12) return 0.0;
      const double st = std::sin(theta), ct = std::cos(theta);
      double sum = 0.0;
      double g = 0.0;
      for (int j = 0; j < angular_; ++j) {
        const double phi = 2.0 * kPi * j / angular_;
        const double cp = std::cos(phi), sp = std::sin(phi);
        Point y;
        for (int i = 0; i < 3; ++i) y[i] = ct * n[i] + st * (cp * e1[i] + sp * e2[i]);
        if (j == 0) g = model_.green(x, y).value;
        sum += f(y);
      }
      // G is zonal about x; dpi = sin(theta) dtheta dphi / (4 pi).
      return g * st * sum / angular_ * 0.5;
    };
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(ring, 0.0, kPi, 1e-12);
  }

  const SpectralModel& model_;
  const QuadratureGrid& grid_;
  int angular_;
  std::vector<std::array<double, 3>> directions_;
  std::vector<double> direction_weights_;
};

// |int G(x,y) Lf(y) dpi(y) + f(x) - int f dpi|.
inline double green_weak_identity_residual(const SpectralModel& model, const TestFunction& f, const Point& x,
                                           const QuadratureGrid& grid) {
  GreenQuadrature quad(model, grid);
  const double integral = quad.integrate(x, f.laplacian);
  return std::abs(integral + f.value(x) - f.mean);
}

}  // namespace coulomb

#endif  // COULOMB_GREEN_QUADRATURE_HPP
