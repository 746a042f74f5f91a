#ifndef COULOMB_REGULARIZE_HPP
#define COULOMB_REGULARIZE_HPP

// Heat-kernel regularization R_t(x_1..x_n) = (1/n) sum_i p_t(x_i, .) pi and
// numerical checks of its distance and energy properties.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coulomb/gas.hpp"
#include "coulomb/manifold.hpp"
#include "coulomb/rng.hpp"
#include "coulomb/spectral.hpp"
#include "coulomb/transport.hpp"

namespace coulomb {

struct RegularizedMeasure {
  std::vector<Point> centers;
  double t = 0.0;
  std::optional<DiscreteMeasure> grid_measure;
  double mass_deviation = 0.0;  // |grid mass - 1| before renormalization
};

// Samples (1/n) sum_i p_t(x_i, node) on the grid. Throws when the grid mass
// misses 1 by 1e-6 or more (cutoff or grid too coarse for this t).
inline RegularizedMeasure regularize(const SpectralModel& sm, const std::vector<Point>& centers, double t,
                                     const QuadratureGrid& grid) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("regularize: t must be positive");
  if (centers.empty()) throw std::invalid_argument("regularize: empty configuration");
  RegularizedMeasure r;
  r.centers = centers;
  r.t = t;
  DiscreteMeasure mu;
  mu.atoms = grid.nodes;
  mu.weights.assign(grid.size(), 0.0);
  if (grid.lattice) mu.lattice_resolution = grid.resolution;
  const double inv_n = 1.0 / static_cast<double>(centers.size());
  double mass = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double density = 0.0;
    for (const Point& x : centers) density += sm.heat_kernel(t, x, grid.nodes[k]).value;
    mu.weights[k] = grid.weights[k] * density * inv_n;
    mass += mu.weights[k];
  }
  r.mass_deviation = std::abs(mass - 1.0);
  if (!(r.mass_deviation < 1e-6))
    throw std::runtime_error("regularize: grid mass " + std::to_string(mass) + " at t = " + std::to_string(t) +
                             " (eigen cutoff or grid resolution too small)");
  for (double& w : mu.weights) w /= mass;
  r.grid_measure = std::move(mu);
  return r;
}

// H(R_t) = (1/n^2) sum_{i<j} G_t(x_i, x_j) + (1/(2 n^2)) sum_i G_t(x_i, x_i)
// + (1/n) sum_i int V d mu_{x_i}^t. The potential term needs a grid.
inline double regularized_energy(const SpectralModel& sm, const std::vector<Point>& centers, double t,
                                 const Potential* potential = nullptr, const QuadratureGrid* grid = nullptr) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("regularized_energy: t must be positive");
  const std::size_t n = centers.size();
  if (n == 0) throw std::invalid_argument("regularized_energy: empty configuration");
  const double nn = static_cast<double>(n);
  double off = 0.0, diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diag += sm.regularized_green(t, centers[i], centers[i]).value;
    for (std::size_t j = i + 1; j < n; ++j) off += sm.regularized_green(t, centers[i], centers[j]).value;
  }
  double field = 0.0;
  if (potential) {
    if (!grid) throw std::invalid_argument("regularized_energy: a potential needs a quadrature grid");
    for (const Point& x : centers) {
      double v = 0.0;
      for (std::size_t k = 0; k < grid->size(); ++k)
        v += grid->weights[k] * sm.heat_kernel(t, x, grid->nodes[k]).value * potential->value(grid->nodes[k]);
      field += v;
    }
    field /= nn;
  }
  return off / (nn * nn) + diag / (2.0 * nn * nn) + field;
}

// Least-squares slope of log y against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("log_log_slope: need >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("log_log_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

struct DistanceRegularizedReport {
  std::vector<double> t_values;
  std::vector<double> mean_w1;   // mean over trials of W1(R_t, i_n)
  double slope = 0.0;            // log-log fit of mean_w1 against t
  std::vector<double> max_ratio_by_t;  // max over trials of W1 / sqrt(t)
  double max_ratio = 0.0;        // max W1 / sqrt(t) over trials and t
  double mesh = 0.0;             // grid discretization slack on each W1
};

// W1(R_t, i_n) <= C sqrt(t) on random configurations of n points. W1 is the
// exact transport between the grid measure of R_t and the atoms of i_n.
inline DistanceRegularizedReport verify_distance_to_regularized(const SpectralModel& sm, int trials,
                                                                const std::vector<double>& t_list, int n,
                                                                int resolution, Rng& rng) {
  if (trials < 1 || n < 1 || t_list.empty()) throw std::invalid_argument("verify_distance_to_regularized: bad sizes");
  const Manifold& m = sm.manifold();
  const QuadratureGrid grid = build_grid(m, resolution);
  DistanceRegularizedReport report;
  report.t_values = t_list;
  report.mean_w1.assign(t_list.size(), 0.0);
  report.max_ratio_by_t.assign(t_list.size(), 0.0);
  report.mesh = grid.mesh;
  for (int trial = 0; trial < trials; ++trial) {
    const auto points = random_configuration(m, static_cast<std::size_t>(n), rng);
    const DiscreteMeasure empirical = DiscreteMeasure::empirical(points);
    for (std::size_t k = 0; k < t_list.size(); ++k) {
      const RegularizedMeasure r = regularize(sm, points, t_list[k], grid);
      const double w = w1_exact(m, *r.grid_measure, empirical).value;
      report.mean_w1[k] += w / trials;
      report.max_ratio_by_t[k] = std::max(report.max_ratio_by_t[k], w / std::sqrt(t_list[k]));
      report.max_ratio = std::max(report.max_ratio, report.max_ratio_by_t[k]);
    }
  }
  if (t_list.size() >= 2) report.slope = log_log_slope(t_list, report.mean_w1);
  return report;
}

struct EnergyComparisonRow {
  int n = 0;
  double t = 0.0;
  double deficit = 0.0;       // worst H(R_t) - H_n - t (+ log(t)/(8 pi n) when d = 2)
  double scaled = 0.0;        // deficit * n (d = 2) or deficit * n t^{d/2-1}
  double offdiag_margin = 0.0;  // min sum_{i<j}(G - G_t) + t n^2
};

struct EnergyComparisonReport {
  std::vector<EnergyComparisonRow> rows;
  double fitted_c = -std::numeric_limits<double>::infinity();  // max scaled deficit
  double worst_offdiag_margin = std::numeric_limits<double>::infinity();
};

// Regularized-vs-pointwise energy comparison at t in {1/n, n^{-2/d}} on
// random configurations. The fitted constant is the largest scaled deficit.
inline EnergyComparisonReport verify_energy_comparison(const SpectralModel& sm, int trials,
                                                       const std::vector<int>& n_list, Rng& rng) {
  const Manifold& m = sm.manifold();
  const int d = m.dim();
  EnergyComparisonReport report;
  for (int n : n_list) {
    if (n < 2) throw std::invalid_argument("verify_energy_comparison: n must be >= 2");
    const double nn = n;
    std::vector<double> times{1.0 / nn};
    if (d > 2) times.push_back(std::pow(nn, -2.0 / d));
    for (double t : times) {
      EnergyComparisonRow row;
      row.n = n;
      row.t = t;
      row.deficit = -std::numeric_limits<double>::infinity();
      row.offdiag_margin = std::numeric_limits<double>::infinity();
      for (int trial = 0; trial < trials; ++trial) {
        const auto points = random_configuration(m, static_cast<std::size_t>(n), rng);
        double off = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j)
            off += sm.green(points[i], points[j]).value - sm.regularized_green(t, points[i], points[j]).value;
        row.offdiag_margin = std::min(row.offdiag_margin, off + t * nn * nn);
        double deficit = regularized_energy(sm, points, t) - hamiltonian(sm, points) - t;
        if (d == 2) deficit += std::log(t) / (8.0 * kPi * nn);
        row.deficit = std::max(row.deficit, deficit);
      }
      row.scaled = d == 2 ? row.deficit * nn : row.deficit * nn * std::pow(t, 0.5 * d - 1.0);
      report.fitted_c = std::max(report.fitted_c, row.scaled);
      report.worst_offdiag_margin = std::min(report.worst_offdiag_margin, row.offdiag_margin);
      report.rows.push_back(row);
    }
  }
  return report;
}

// min over random pairs and t of (G - G_t)(x, y) + 2t; nonnegative in exact
// arithmetic.
inline double offdiagonal_kernel_margin(const SpectralModel& sm, int pairs, const std::vector<double>& t_list,
                                        Rng& rng) {
  const Manifold& m = sm.manifold();
  double worst = std::numeric_limits<double>::infinity();
  for (int p = 0; p < pairs; ++p) {
    const Point x = m.sample_uniform(rng), y = m.sample_uniform(rng);
    const double g = sm.green(x, y).value;
    for (double t : t_list) worst = std::min(worst, g - sm.regularized_green(t, x, y).value + 2.0 * t);
  }
  return worst;
}

struct DiagonalProfile {
  double sup_value = -std::numeric_limits<double>::infinity();  // sup over t and x
  double spread = 0.0;  // max over t of the spread across x
};

// Profile of G_t(x, x) over t_list at the given points. d = 2: the quantity
// is G_t(x,x) + log(t)/(4 pi); d > 2: G_t(x,x) t^{d/2-1}.
inline DiagonalProfile diagonal_profile(const SpectralModel& sm, const std::vector<Point>& points,
                                        const std::vector<double>& t_list) {
  const int d = sm.manifold().dim();
  DiagonalProfile profile;
  for (double t : t_list) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Point& x : points) {
      const double g = sm.regularized_green(t, x, x).value;
      const double v = d == 2 ? g + std::log(t) / (4.0 * kPi) : g * std::pow(t, 0.5 * d - 1.0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    profile.sup_value = std::max(profile.sup_value, hi);
    profile.spread = std::max(profile.spread, hi - lo);
  }
  return profile;
}

}  // namespace coulomb

#endif  // COULOMB_REGULARIZE_HPP
