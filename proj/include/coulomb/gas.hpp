#ifndef COULOMB_GAS_HPP
#define COULOMB_GAS_HPP

// The n-particle Coulomb gas: Hamiltonian H_n, mean-field energy H(mu), and a
// single-particle Metropolis sampler for the Gibbs measure
// dP_n = exp(-beta H_n) dpi^n / Z_n.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coulomb/manifold.hpp"
#include "coulomb/rng.hpp"
#include "coulomb/spectral.hpp"
#include "coulomb/transport.hpp"

namespace coulomb {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Potential {
  std::string name;
  ScalarField value;
  ScalarField laplacian;
  double c2_bound = 0.0;  // sup |Laplacian V|

  static Potential constant(double c) {
    return {"constant", [c](const Point&) { return c; }, [](const Point&) { return 0.0; }, 0.0};
  }

  // V = eps cos(2 pi x1) on a torus; Laplacian -4 pi^2 eps cos(2 pi x1).
  static Potential torus_cosine(double eps) {
    return {"cosine", [eps](const Point& p) { return eps * std::cos(2.0 * kPi * p[0]); },
            [eps](const Point& p) { return -kFourPiSq * eps * std::cos(2.0 * kPi * p[0]); },
            kFourPiSq * std::abs(eps)};
  }

  // V = eps u3 on the sphere; u3 is a degree-1 harmonic with eigenvalue 8 pi.
  static Potential sphere_zonal(double eps) {
    return {"zonal", [eps](const Point& p) { return eps * p[2]; },
            [eps](const Point& p) { return -8.0 * kPi * eps * p[2]; }, 8.0 * kPi * std::abs(eps)};
  }

  // Built-in potential by type name and amplitude, for the manifold.
  static Potential named(const std::string& type, double amplitude, const Manifold& m) {
    if (type == "constant") return constant(amplitude);
    if (type == "cosine") {
      if (!m.is_torus()) throw std::invalid_argument("potential 'cosine' needs a torus");
      return torus_cosine(amplitude);
    }
    if (type == "zonal") {
      if (m.is_torus()) throw std::invalid_argument("potential 'zonal' needs the sphere");
      return sphere_zonal(amplitude);
    }
    throw std::invalid_argument("unknown potential type '" + type + "' (valid: constant, cosine, zonal)");
  }
};

// Largest |finite-difference Laplacian - stated Laplacian| over `points`.
// Torus: central differences in the coordinate chart. Sphere: second
// differences along two orthogonal great circles (geodesic normal
// coordinates), step h in geodesic length.
inline double potential_laplacian_residual(const Manifold& m, const Potential& v, const std::vector<Point>& points,
                                           double h = 1e-3) {
  double worst = 0.0;
  for (const Point& x : points) {
    const double center = v.value(x);
    double fd = 0.0;
    if (m.is_torus()) {
      for (int i = 0; i < m.dim(); ++i) {
        Point a = x, b = x;
        a[i] = wrap_unit(x[i] + h);
        b[i] = wrap_unit(x[i] - h);
        fd += (v.value(a) + v.value(b) - 2.0 * center) / (h * h);
      }
    } else {
      const std::array<double, 3> n{x[0], x[1], x[2]};
      std::array<double, 3> e1{}, e2{};
      const std::array<double, 3> seed = std::abs(n[0]) < 0.9 ? std::array<double, 3>{1, 0, 0}
                                                              : std::array<double, 3>{0, 1, 0};
      const double dot = seed[0] * n[0] + seed[1] * n[1] + seed[2] * n[2];
      for (int i = 0; i < 3; ++i) e1[i] = seed[i] - dot * n[i];
      const double norm = std::hypot(e1[0], e1[1], e1[2]);
      for (int i = 0; i < 3; ++i) e1[i] /= norm;
      e2 = {n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2], n[0] * e1[1] - n[1] * e1[0]};
      const double angle = h / kSphereRadius;
      for (const auto& e : {e1, e2}) {
        for (double sign : {1.0, -1.0}) {
          Point y;
          for (int i = 0; i < 3; ++i) y[i] = std::cos(angle) * n[i] + sign * std::sin(angle) * e[i];
          fd += v.value(y) / (h * h);
        }
      }
      fd -= 4.0 * center / (h * h);
    }
    worst = std::max(worst, std::abs(fd - v.laplacian(x)));
  }
  return worst;
}

// H_n = (1/n^2) sum_{i<j} G(x_i, x_j) + (1/n) sum_i V(x_i); +infinity on a
// collision.
inline double hamiltonian(const SpectralModel& sm, const std::vector<Point>& points,
                          const Potential* potential = nullptr) {
  const std::size_t n = points.size();
  if (n < 2) throw std::invalid_argument("hamiltonian: need at least two particles");
  const double nn = static_cast<double>(n);
  double pair = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = sm.green(points[i], points[j]).value;
      if (std::isinf(g)) return kInfinity;
      pair += g;
    }
  }
  double field = 0.0;
  if (potential)
    for (const Point& p : points) field += potential->value(p);
  return pair / (nn * nn) + field / nn;
}

// H(mu) = (1/2) sum_ij w_i w_j G(x_i, x_j) + sum_i w_i V(x_i). Diagonal terms
// are +infinity unless excluded (quadrature of the off-diagonal integral for
// grid discretizations of densities).
inline double mean_field_energy(const SpectralModel& sm, const DiscreteMeasure& mu,
                                const Potential* potential = nullptr, bool exclude_diagonal = false) {
  if (mu.atoms.size() != mu.weights.size() || mu.atoms.empty())
    throw std::invalid_argument("mean_field_energy: malformed measure");
  double total = 0.0;
  for (double w : mu.weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("mean_field_energy: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw std::invalid_argument("mean_field_energy: weights sum to " + std::to_string(total) + ", expected 1");
  double field = 0.0;
  if (potential)
    for (std::size_t i = 0; i < mu.size(); ++i) field += mu.weights[i] * potential->value(mu.atoms[i]);
  if (!exclude_diagonal) {
    for (double w : mu.weights)
      if (w > 0.0) return kInfinity;
  }
  double pair = 0.0;
  if (sm.manifold().is_torus() && mu.lattice_resolution > 0) {
    const auto table = detail::lattice_green_table(sm, mu.lattice_resolution);
    pair = detail::lattice_double_sum(mu.weights, table, mu.lattice_resolution, sm.manifold().dim());
  } else {
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (mu.weights[i] == 0.0) continue;
      for (std::size_t j = i + 1; j < mu.size(); ++j) {
        if (mu.weights[j] == 0.0) continue;
        const double g = sm.green(mu.atoms[i], mu.atoms[j]).value;
        if (std::isinf(g)) return kInfinity;
        pair += 2.0 * mu.weights[i] * mu.weights[j] * g;
      }
    }
  }
  return 0.5 * pair + field;
}

struct GibbsParams {
  double beta = 0.0;
  double step = 0.1;  // proposal scale, geodesic units
  std::optional<Potential> potential;
};

struct ChainStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  std::size_t sweeps = 0;
  std::vector<double> energy_trace;

  [[nodiscard]] double acceptance_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

// n points from pi^n; exact duplicates are redrawn.
inline std::vector<Point> random_configuration(const Manifold& m, std::size_t n, Rng& rng) {
  std::vector<Point> points;
  points.reserve(n);
  while (points.size() < n) {
    const Point p = m.sample_uniform(rng);
    if (std::find(points.begin(), points.end(), p) == points.end()) points.push_back(p);
  }
  return points;
}

// Metropolis chain with a cached pair matrix, so each single-particle update
// costs n - 1 Green evaluations.
class GibbsChain {
 public:
  GibbsChain(const SpectralModel& sm, GibbsParams params, std::vector<Point> initial, Rng rng)
      : sm_(sm), params_(std::move(params)), points_(std::move(initial)), rng_(rng) {
    if (points_.size() < 2) throw std::invalid_argument("GibbsChain: need at least two particles");
    if (!(params_.beta >= 0.0) || !std::isfinite(params_.beta))
      throw std::invalid_argument("GibbsChain: beta must be finite and >= 0");
    if (!(params_.step > 0.0)) throw std::invalid_argument("GibbsChain: step must be positive");
    for (const Point& p : points_)
      if (!sm_.manifold().contains(p)) throw std::invalid_argument("GibbsChain: point off the manifold");
    rebuild_cache();
    if (std::isinf(energy_) && params_.beta > 0.0)
      throw std::invalid_argument("GibbsChain: initial configuration has a collision");
  }

  [[nodiscard]] const std::vector<Point>& points() const { return points_; }
  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] double energy() const { return energy_; }
  [[nodiscard]] double step() const { return params_.step; }
  [[nodiscard]] const GibbsParams& params() const { return params_; }
  [[nodiscard]] const ChainStats& stats() const { return stats_; }
  [[nodiscard]] const Rng& rng() const { return rng_; }
  void set_step(double step) {
    if (!(step > 0.0)) throw std::invalid_argument("set_step: step must be positive");
    params_.step = step;
  }
  void set_sweep_count(std::size_t sweeps) { stats_.sweeps = sweeps; }

  // Recomputes the pair cache and H_n from scratch.
  void rebuild_cache() {
    const std::size_t n = points_.size();
    pair_.assign(n * n, 0.0);
    field_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double g = sm_.green(points_[i], points_[j]).value;
        pair_[i * n + j] = pair_[j * n + i] = g;
      }
      if (params_.potential) field_[i] = params_.potential->value(points_[i]);
    }
    energy_ = hamiltonian(sm_, points_, params_.potential ? &*params_.potential : nullptr);
  }

  // Incremental H_n change for moving particle i to y; fills the new row.
  double delta_energy(std::size_t i, const Point& y, std::vector<double>& row) const {
    const std::size_t n = points_.size();
    const double nn = static_cast<double>(n);
    row.assign(n, 0.0);
    double pair = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double g = sm_.green(y, points_[j]).value;
      row[j] = g;
      if (std::isinf(g)) return kInfinity;
      pair += g - pair_[i * n + j];
    }
    double field = 0.0;
    if (params_.potential) field = params_.potential->value(y) - field_[i];
    return pair / (nn * nn) + field / nn;
  }

  // One Metropolis update of a uniformly chosen particle.
  bool update() {
    const std::size_t n = points_.size();
    const std::size_t i = static_cast<std::size_t>(rng_.uniform() * static_cast<double>(n)) % n;
    const Point y = sm_.manifold().propose_move(points_[i], params_.step, rng_);
    ++stats_.proposed;
    const double dh = delta_energy(i, y, row_);
    // beta = 0 samples pi^n: every proposal is accepted.
    bool accept = params_.beta == 0.0;
    if (!accept && !std::isinf(dh)) accept = dh <= 0.0 || rng_.uniform() < std::exp(-params_.beta * dh);
    if (accept) {
      ++stats_.accepted;
      points_[i] = y;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        pair_[i * n + j] = pair_[j * n + i] = row_[j];
      }
      if (params_.potential) field_[i] = params_.potential->value(y);
      energy_ += dh;
    }
    return accept;
  }

  // n single-particle updates; returns the stats of this sweep.
  ChainStats sweep(bool record_energy = false) {
    ChainStats delta;
    const std::size_t before_p = stats_.proposed, before_a = stats_.accepted;
    for (std::size_t k = 0; k < points_.size(); ++k) update();
    ++stats_.sweeps;
    // Resynchronize accumulated rounding periodically.
    if (stats_.sweeps % 256 == 0 || std::isinf(energy_)) energy_ = hamiltonian(sm_, points_, potential_ptr());
    if (record_energy) {
      stats_.energy_trace.push_back(energy_);
      delta.energy_trace.push_back(energy_);
    }
    delta.proposed = stats_.proposed - before_p;
    delta.accepted = stats_.accepted - before_a;
    delta.sweeps = 1;
    return delta;
  }

  // Burn-in with step tuning toward acceptance 0.3 +- 0.1, adjusted every
  // `window` sweeps; the step is frozen afterwards.
  void burn_in(std::size_t sweeps, std::size_t window = 10) {
    const double cap = sm_.manifold().diameter();
    std::size_t prop = 0, acc = 0;
    for (std::size_t s = 1; s <= sweeps; ++s) {
      const ChainStats d = sweep();
      prop += d.proposed;
      acc += d.accepted;
      if (s % window == 0 && prop > 0) {
        const double rate = static_cast<double>(acc) / static_cast<double>(prop);
        if (rate > 0.4) params_.step = std::min(cap, params_.step * 1.25);
        if (rate < 0.2) params_.step *= 0.8;
        prop = acc = 0;
      }
    }
  }

  void run(std::size_t sweeps, bool record_energy = false) {
    for (std::size_t s = 0; s < sweeps; ++s) sweep(record_energy);
  }

  // Max |incremental Delta H - full recomputation| over `proposals` random
  // proposals; the chain state is not changed.
  double incremental_energy_check(std::size_t proposals = 100) {
    const std::size_t n = points_.size();
    const double base = hamiltonian(sm_, points_, potential_ptr());
    double worst = 0.0;
    std::vector<double> row;
    for (std::size_t k = 0; k < proposals; ++k) {
      const std::size_t i = static_cast<std::size_t>(rng_.uniform() * static_cast<double>(n)) % n;
      const Point y = sm_.manifold().propose_move(points_[i], params_.step, rng_);
      const double inc = delta_energy(i, y, row);
      std::vector<Point> moved = points_;
      moved[i] = y;
      const double full = hamiltonian(sm_, moved, potential_ptr()) - base;
      if (std::isinf(inc) != std::isinf(full)) return kInfinity;
      if (!std::isinf(inc)) worst = std::max(worst, std::abs(inc - full));
    }
    return worst;
  }

 private:
  [[nodiscard]] const Potential* potential_ptr() const { return params_.potential ? &*params_.potential : nullptr; }

  const SpectralModel& sm_;
  GibbsParams params_;
  std::vector<Point> points_;
  Rng rng_;
  std::vector<double> pair_;
  std::vector<double> field_;
  std::vector<double> row_;
  double energy_ = 0.0;
  ChainStats stats_;
};

// One sweep of `chain`; the returned stats cover this sweep only.
inline ChainStats metropolis_sweep(GibbsChain& chain, bool record_energy = false) {
  return chain.sweep(record_energy);
}

}  // namespace coulomb

#endif  // COULOMB_GAS_HPP
