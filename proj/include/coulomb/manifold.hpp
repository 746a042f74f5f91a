#ifndef COULOMB_MANIFOLD_HPP
#define COULOMB_MANIFOLD_HPP

// Model manifolds with normalized volume: flat unit tori T^2, T^3 and the
// round sphere of area one. Geodesic distance, uniform sampling, symmetric
// random-walk proposals and quadrature grids.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "coulomb/rng.hpp"

namespace coulomb {

enum class ManifoldKind { Torus2, Torus3, Sphere2 };

// Radius making the sphere's area equal to one.
inline const double kSphereRadius = 0.5 / std::sqrt(std::numbers::pi);

// Torus: coordinates in [0,1)^d (unused trailing entries are zero).
// Sphere: a unit direction vector; the radius is applied by the geometry.
struct Point {
  std::array<double, 3> c{};

  double& operator[](std::size_t i) { return c[i]; }
  double operator[](std::size_t i) const { return c[i]; }
  bool operator==(const Point&) const = default;
};

using ScalarField = std::function<double(const Point&)>;

inline double wrap_unit(double v) {
  double w = v - std::floor(v);
  if (w >= 1.0) w = 0.0;
  return w;
}

// Signed minimal-image difference in [-1/2, 1/2].
inline double torus_delta(double a, double b) {
  const double d = a - b;
  return d - std::round(d);
}

class Manifold {
 public:
  explicit Manifold(ManifoldKind kind) : kind_(kind) {}

  static Manifold parse(std::string_view id) {
    if (id == "torus2") return Manifold(ManifoldKind::Torus2);
    if (id == "torus3") return Manifold(ManifoldKind::Torus3);
    if (id == "sphere2") return Manifold(ManifoldKind::Sphere2);
    throw std::invalid_argument("unknown manifold '" + std::string(id) +
                                "' (valid ids: torus2, torus3, sphere2)");
  }

  [[nodiscard]] ManifoldKind kind() const { return kind_; }
  [[nodiscard]] bool is_torus() const { return kind_ != ManifoldKind::Sphere2; }

  // Intrinsic dimension.
  [[nodiscard]] int dim() const { return kind_ == ManifoldKind::Torus3 ? 3 : 2; }

  // Number of stored coordinates.
  [[nodiscard]] int coord_count() const { return kind_ == ManifoldKind::Torus2 ? 2 : 3; }

  [[nodiscard]] std::string name() const {
    switch (kind_) {
      case ManifoldKind::Torus2: return "torus2";
      case ManifoldKind::Torus3: return "torus3";
      case ManifoldKind::Sphere2: return "sphere2";
    }
    return "unknown";
  }

  [[nodiscard]] double diameter() const {
    if (is_torus()) return 0.5 * std::sqrt(static_cast<double>(dim()));
    return std::numbers::pi * kSphereRadius;
  }

  // Builds a valid point from raw coordinates (reduces torus coordinates mod 1,
  // normalizes sphere directions).
  [[nodiscard]] Point make_point(std::span<const double> coords) const {
    if (static_cast<int>(coords.size()) != coord_count())
      throw std::invalid_argument(name() + ": expected " + std::to_string(coord_count()) +
                                  " coordinates, got " + std::to_string(coords.size()));
    Point p;
    if (is_torus()) {
      for (int i = 0; i < dim(); ++i) p[i] = wrap_unit(coords[i]);
      return p;
    }
    const double norm = std::hypot(coords[0], coords[1], coords[2]);
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw std::invalid_argument("sphere2: direction vector must be finite and nonzero");
    for (int i = 0; i < 3; ++i) p[i] = coords[i] / norm;
    return p;
  }

  [[nodiscard]] bool contains(const Point& p) const {
    if (is_torus()) {
      for (int i = 0; i < 3; ++i) {
        if (i < dim()) {
          if (!(p[i] >= 0.0 && p[i] < 1.0)) return false;
        } else if (p[i] != 0.0) {
          return false;
        }
      }
      return true;
    }
    return std::abs(std::hypot(p[0], p[1], p[2]) - 1.0) <= 1e-12;
  }

  // Chord length |x - y| of sphere directions (unit sphere).
  static double unit_chord(const Point& x, const Point& y) {
    const double a = x[0] - y[0], b = x[1] - y[1], c = x[2] - y[2];
    return std::sqrt(a * a + b * b + c * c);
  }

  [[nodiscard]] double distance(const Point& x, const Point& y) const {
    if (is_torus()) {
      double s = 0.0;
      for (int i = 0; i < dim(); ++i) {
        const double d = torus_delta(x[i], y[i]);
        s += d * d;
      }
      return std::sqrt(s);
    }
    const double chord = std::min(unit_chord(x, y), 2.0);
    return kSphereRadius * 2.0 * std::asin(0.5 * chord);
  }

  // Reference implementation of the torus distance: minimum over the 3^d
  // nearest integer translates.
  [[nodiscard]] double distance_by_translates(const Point& x, const Point& y) const {
    if (!is_torus()) return distance(x, y);
    double best = std::numeric_limits<double>::infinity();
    const int d = dim();
    const int count = d == 2 ? 9 : 27;
    for (int code = 0; code < count; ++code) {
      int rest = code;
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        const int shift = rest % 3 - 1;
        rest /= 3;
        const double diff = x[i] - y[i] + shift;
        s += diff * diff;
      }
      best = std::min(best, s);
    }
    return std::sqrt(best);
  }

  Point sample_uniform(Rng& rng) const {
    Point p;
    if (is_torus()) {
      for (int i = 0; i < dim(); ++i) p[i] = rng.uniform();
      return p;
    }
    double norm = 0.0;
    do {
      for (int i = 0; i < 3; ++i) p[i] = rng.normal();
      norm = std::hypot(p[0], p[1], p[2]);
    } while (norm < 1e-12);
    for (int i = 0; i < 3; ++i) p[i] /= norm;
    return p;
  }

  // Symmetric random-walk proposal. `step` is the standard deviation of the
  // Gaussian displacement per tangent direction, in geodesic units.
  Point propose_move(const Point& x, double step, Rng& rng) const {
    if (step < 0.0) throw std::invalid_argument("propose_move: step must be >= 0");
    if (is_torus()) {
      Point y = x;
      for (int i = 0; i < dim(); ++i) y[i] = wrap_unit(x[i] + step * rng.normal());
      return y;
    }
    std::array<double, 3> g{rng.normal(), rng.normal(), rng.normal()};
    const double radial = g[0] * x[0] + g[1] * x[1] + g[2] * x[2];
    for (int i = 0; i < 3; ++i) g[i] -= radial * x[i];
    const double tangent_norm = std::hypot(g[0], g[1], g[2]);
    const double angle = step * tangent_norm / kSphereRadius;
    if (tangent_norm == 0.0 || angle == 0.0) return x;
    const double ca = std::cos(angle), sa = std::sin(angle);
    Point y;
    for (int i = 0; i < 3; ++i) y[i] = ca * x[i] + sa * g[i] / tangent_norm;
    const double norm = std::hypot(y[0], y[1], y[2]);
    for (int i = 0; i < 3; ++i) y[i] /= norm;
    return y;
  }

 private:
  ManifoldKind kind_;
};

// Discretization of the volume measure.
struct QuadratureGrid {
  ManifoldKind kind = ManifoldKind::Torus2;
  int resolution = 0;
  std::vector<Point> nodes;
  std::vector<double> weights;
  // Upper bound on the distance from any manifold point to its nearest node.
  double mesh = 0.0;
  // True for the regular torus lattice {i/resolution}^d with equal weights.
  bool lattice = false;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1], ascending.
inline void gauss_legendre(int count, std::vector<double>& x, std::vector<double>& w) {
  const auto positive = boost::math::legendre_p_zeros<double>(count);
  std::vector<double> roots;
  for (double r : positive) {
    roots.push_back(r);
    if (r != 0.0) roots.push_back(-r);
  }
  std::sort(roots.begin(), roots.end());
  x = roots;
  w.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dp = boost::math::legendre_p_prime(count, x[i]);
    w[i] = 2.0 / ((1.0 - x[i] * x[i]) * dp * dp);
  }
}

}  // namespace detail

// Torus: regular lattice with resolution^d nodes and equal weights; mesh is
// half the cell diagonal. Sphere: Gauss-Legendre (in cos theta) x uniform
// (in phi) product grid with resolution^2 nodes; exact for spherical
// harmonics of degree < resolution. For both, the volume measure splits into
// cells of mass equal to the node weights, each within `mesh` of its node,
// so mesh bounds both the covering radius and W1(grid measure, volume).
inline QuadratureGrid build_grid(const Manifold& m, int resolution) {
  if (resolution < 2) throw std::invalid_argument("build_grid: resolution must be >= 2");
  QuadratureGrid g;
  g.kind = m.kind();
  g.resolution = resolution;
  const double h = 1.0 / resolution;
  if (m.is_torus()) {
    const int d = m.dim();
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(resolution);
    g.nodes.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
      Point p;
      std::size_t rest = idx;
      // Last coordinate varies fastest.
      for (int i = d - 1; i >= 0; --i) {
        p[i] = static_cast<double>(rest % resolution) * h;
        rest /= resolution;
      }
      g.nodes.push_back(p);
    }
    g.weights.assign(count, 1.0 / static_cast<double>(count));
    g.mesh = 0.5 * h * std::sqrt(static_cast<double>(d));
    g.lattice = true;
    return g;
  }

  std::vector<double> cos_nodes, cos_weights;
  detail::gauss_legendre(resolution, cos_nodes, cos_weights);
  const double dphi = 2.0 * std::numbers::pi / resolution;
  double band_lo = -1.0;
  double bound = 0.0;
  for (int i = 0; i < resolution; ++i) {
    const double ct = cos_nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < resolution; ++j) {
      const double phi = (j + 0.5) * dphi;
      Point p;
      p[0] = st * std::cos(phi);
      p[1] = st * std::sin(phi);
      p[2] = ct;
      g.nodes.push_back(p);
      g.weights.push_back(0.5 * cos_weights[i] / resolution);
    }
    // Cell (i, j): the band whose area equals the node weights, cut into
    // equal sectors. Gauss nodes separate the cumulative weights, so every
    // node lies in its own band. Any cell point reaches the node along a
    // parallel and then a meridian.
    const double band_hi = i + 1 == resolution ? 1.0 : std::min(1.0, band_lo + cos_weights[i]);
    const double theta_node = std::acos(ct);
    const double theta_top = std::acos(band_hi), theta_bottom = std::acos(std::max(-1.0, band_lo));
    const double widest = (theta_top <= 0.5 * std::numbers::pi && theta_bottom >= 0.5 * std::numbers::pi)
                              ? 1.0
                              : std::max(std::sin(theta_top), std::sin(theta_bottom));
    const double meridian = std::max(theta_node - theta_top, theta_bottom - theta_node);
    bound = std::max(bound, meridian + widest * 0.5 * dphi);
    band_lo = band_hi;
  }
  g.mesh = kSphereRadius * bound;
  return g;
}

}  // namespace coulomb

#endif  // COULOMB_MANIFOLD_HPP
