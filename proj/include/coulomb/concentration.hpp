#ifndef COULOMB_CONCENTRATION_HPP
#define COULOMB_CONCENTRATION_HPP

// Concentration bounds, the equilibrium measure, Monte Carlo tail estimates
// and the partition-function lower bound.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "coulomb/gas.hpp"
#include "coulomb/green_quadrature.hpp"
#include "coulomb/manifold.hpp"
#include "coulomb/regularize.hpp"
#include "coulomb/rng.hpp"
#include "coulomb/spectral.hpp"
#include "coulomb/stats.hpp"
#include "coulomb/transport.hpp"

namespace coulomb {

// Runs fn(i) for i in [0, count) on up to `jobs` threads (0: hardware
// concurrency). The first exception is rethrown after all workers stop.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(count, 1)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------- bounds

inline double theorem1_log_bound(int n, double beta, double r, int dimension, double fitted_c,
                                 double log_term_constant = 1.0 / (8.0 * kPi)) {
  if (n < 2) throw std::invalid_argument("theorem1_bound: n must be >= 2");
  if (!(r >= 0.0)) throw std::invalid_argument("theorem1_bound: r must be >= 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("theorem1_bound: beta must be >= 0");
  if (dimension < 2) throw std::invalid_argument("theorem1_bound: dimension must be >= 2");
  const double nn = n;
  if (dimension == 2)
    return -beta * r * r / 4.0 + beta * log_term_constant * std::log(nn) / nn + fitted_c * beta / nn;
  return -beta * r * r / 4.0 + fitted_c * beta / std::pow(nn, 2.0 / dimension);
}

// d = 2: exp(-beta r^2/4 + (beta/8pi) log(n)/n + C beta/n);
// d >= 3: exp(-beta r^2/4 + C beta/n^{2/d}). May exceed 1.
inline double theorem1_bound(int n, double beta, double r, int dimension, double fitted_c,
                             double log_term_constant = 1.0 / (8.0 * kPi)) {
  return std::exp(theorem1_log_bound(n, beta, r, dimension, fitted_c, log_term_constant));
}

// Theorem 1 plus the n D(mu_eq | pi) sampling term.
inline double theorem2_bound(int n, double beta, double r, int dimension, double entropy, double fitted_c) {
  if (!(entropy >= 0.0)) throw std::invalid_argument("theorem2_bound: entropy must be >= 0");
  return std::exp(theorem1_log_bound(n, beta, r, dimension, fitted_c) + n * entropy);
}

struct BoundParameters {
  int n = 2;
  double beta = 0.0;
  int dimension = 2;
  double a_n = 0.0;
  double b_n = 0.0;
  double e_n = 0.0;
  double e = 0.0;
  double entropy = 0.0;
  double fitted_c = 0.0;
};

// General inequality with f(r) = r^2/2:
// exp(-beta r^2/4 + n D + beta (e_n - e) + beta a_n + beta b_n^2/2).
inline double general_bound_exponent(const BoundParameters& bp, double r) {
  if (!(bp.entropy >= 0.0)) throw std::invalid_argument("general_bound: entropy must be >= 0");
  if (!std::isfinite(bp.e_n) || !std::isfinite(bp.e)) throw std::invalid_argument("general_bound: e_n, e must be finite");
  return -bp.beta * r * r / 4.0 + bp.n * bp.entropy + bp.beta * (bp.e_n - bp.e) + bp.beta * bp.a_n +
         bp.beta * bp.b_n * bp.b_n / 2.0;
}

inline double general_bound_assembly(const BoundParameters& bp, double r) {
  return std::exp(general_bound_exponent(bp, r));
}

// Theorem 1 constant from the regularization constants: with a_n carrying
// (1 + C_a)/n and b_n = C_b/sqrt(n) (d = 2; n^{2/d} in general), the
// exponent is dominated by C = C~^2/2 + C~ with C~ = max(C_b, 1 + C_a).
inline double theorem_constant(double energy_constant, double distance_constant) {
  const double c = std::max({distance_constant, 1.0 + energy_constant, 0.0});
  return 0.5 * c * c + c;
}

// Parameters of the general inequality for the Theorem 1 instantiation
// (t = n^{-2/d}, V = 0).
inline BoundParameters theorem1_parameters(int n, double beta, int dimension, double energy_constant,
                                           double distance_constant) {
  BoundParameters bp;
  bp.n = n;
  bp.beta = beta;
  bp.dimension = dimension;
  const double nn = n;
  const double scale = std::pow(nn, 2.0 / dimension);
  bp.a_n = (1.0 + energy_constant) / scale;
  if (dimension == 2) bp.a_n += std::log(nn) / (8.0 * kPi * nn);
  bp.b_n = distance_constant / std::sqrt(scale);
  bp.fitted_c = theorem_constant(energy_constant, distance_constant);
  return bp;
}

struct FittedConstants {
  double energy_constant = 0.0;    // C_a: max scaled energy deficit
  double distance_constant = 0.0;  // C_b: max W1(R_t, i_n)/sqrt(t), plus mesh slack
  double theorem_c = 0.0;
};

// Fits the regularization constants on random configurations and combines
// them into the Theorem 1 constant.
inline FittedConstants fit_theorem_constant(const SpectralModel& sm, const std::vector<int>& n_list, int trials,
                                            int resolution, Rng& rng) {
  FittedConstants fc;
  fc.energy_constant = verify_energy_comparison(sm, trials, n_list, rng).fitted_c;
  const int d = sm.manifold().dim();
  const double mesh = build_grid(sm.manifold(), resolution).mesh;
  double ratio = 0.0;
  for (int n : n_list) {
    // The distance constant must hold for every t in (0, 1], not only at
    // t = n^{-2/d}; W1 + mesh bounds the continuous distance. Times below
    // mesh^2 are not resolved by the grid and are skipped.
    std::vector<double> times;
    for (double t : {0.001, 0.004, 0.016, 0.064, std::pow(static_cast<double>(n), -2.0 / d)})
      if (t >= mesh * mesh) times.push_back(t);
    const auto rep = verify_distance_to_regularized(sm, trials, times, n, resolution, rng);
    for (std::size_t k = 0; k < times.size(); ++k)
      ratio = std::max(ratio, rep.max_ratio_by_t[k] + rep.mesh / std::sqrt(times[k]));
  }
  fc.distance_constant = ratio;
  fc.theorem_c = theorem_constant(fc.energy_constant, fc.distance_constant);
  return fc;
}

// ---------------------------------------------------------- equilibrium

struct EquilibriumMeasure {
  QuadratureGrid grid;
  std::vector<double> density;  // rho_eq at the grid nodes
  double entropy = 0.0;         // D(mu_eq | pi)
};

// rho_eq = 1 + Laplacian V (full-support regime only).
inline EquilibriumMeasure equilibrium_measure(const SpectralModel& sm, const Potential* potential,
                                              const QuadratureGrid& grid) {
  if (grid.kind != sm.manifold().kind()) throw std::invalid_argument("equilibrium_measure: grid/manifold mismatch");
  EquilibriumMeasure eq;
  eq.grid = grid;
  eq.density.assign(grid.size(), 1.0);
  double mass = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (potential) eq.density[k] += potential->laplacian(grid.nodes[k]);
    if (eq.density[k] < 0.0)
      throw std::invalid_argument("equilibrium_measure: 1 + Laplacian V < 0 at a grid node; the potential is too "
                                  "strong for a full-support equilibrium");
    mass += grid.weights[k] * eq.density[k];
  }
  if (std::abs(mass - 1.0) > 1e-8)
    throw std::invalid_argument("equilibrium_measure: grid mass of 1 + Laplacian V is " + std::to_string(mass));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double rho = eq.density[k];
    if (rho > 0.0) eq.entropy += grid.weights[k] * rho * std::log(rho);
  }
  eq.entropy = std::max(0.0, eq.entropy);
  return eq;
}

// Max minus min over `nodes` of int G(x, y) rho_eq(y) dpi(y) + V(x), with the
// integral by singular quadrature and rho_eq = 1 + Laplacian V in closed form.
inline double euler_lagrange_residual(const SpectralModel& sm, const Potential& potential,
                                      const QuadratureGrid& grid, const std::vector<Point>& nodes) {
  GreenQuadrature quad(sm, grid);
  const ScalarField rho = [&](const Point& y) { return 1.0 + potential.laplacian(y); };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Point& x : nodes) {
    const double phi = quad.integrate(x, rho) + potential.value(x);
    lo = std::min(lo, phi);
    hi = std::max(hi, phi);
  }
  return hi - lo;
}

namespace detail {

// Euclidean projection onto {w >= 0, sum w = 1}.
inline void project_simplex(std::vector<double>& w) {
  std::vector<double> s = w;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cumulative += s[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (s[k] - candidate > 0.0) theta = candidate;
  }
  for (double& v : w) v = std::max(0.0, v - theta);
}

// Band-limited lattice Green function g(offset) = sum_{k != 0, |k_i| < N/2}
// cos(2 pi k . offset / N) / (4 pi^2 |k|^2).
inline std::vector<double> band_limited_green_table(int N, int d) {
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(N);
  std::vector<int> freqs;
  for (int k = -(N - 1) / 2; k <= (N - 1) / 2; ++k) freqs.push_back(k);
  // 1-D cosine/sine tables: exp(2 pi i k j / N) factorizes over axes.
  std::vector<double> table(count, 0.0);
  std::vector<std::array<int, 3>> modes;
  std::array<int, 3> k{};
  const std::size_t f = freqs.size();
  std::size_t mode_count = 1;
  for (int i = 0; i < d; ++i) mode_count *= f;
  for (std::size_t code = 0; code < mode_count; ++code) {
    std::size_t rest = code;
    int norm = 0;
    for (int i = 0; i < d; ++i) {
      k[i] = freqs[rest % f];
      rest /= f;
      norm += k[i] * k[i];
    }
    if (norm != 0) modes.push_back(k);
  }
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::array<int, 3> off{};
    std::size_t rest = idx;
    for (int i = d - 1; i >= 0; --i) {
      off[i] = static_cast<int>(rest % N);
      rest /= N;
    }
    double sum = 0.0;
    for (const auto& m : modes) {
      int dot = 0, norm = 0;
      for (int i = 0; i < d; ++i) {
        dot += m[i] * off[i];
        norm += m[i] * m[i];
      }
      sum += std::cos(2.0 * kPi * static_cast<double>(dot % N) / N) / (kFourPiSq * norm);
    }
    table[idx] = sum;
  }
  return table;
}

// y = C w for the circulant C(a, b) = table(x_a - x_b) on the lattice.
inline void lattice_convolve(const std::vector<double>& w, const std::vector<double>& table, int N, int d,
                             std::vector<double>& out) {
  const std::size_t count = w.size();
  out.assign(count, 0.0);
  std::vector<int> coords(count * d);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t rest = idx;
    for (int i = d - 1; i >= 0; --i) {
      coords[idx * d + i] = static_cast<int>(rest % N);
      rest /= N;
    }
  }
  for (std::size_t a = 0; a < count; ++a) {
    double s = 0.0;
    for (std::size_t b = 0; b < count; ++b) {
      if (w[b] == 0.0) continue;
      std::size_t off = 0;
      for (int i = 0; i < d; ++i) {
        int diff = coords[a * d + i] - coords[b * d + i];
        if (diff < 0) diff += N;
        off = off * N + diff;
      }
      s += table[off] * w[b];
    }
    out[a] = s;
  }
}

}  // namespace detail

struct MinimizationOracle {
  std::vector<double> density;  // best minimizer found (grid density)
  double worst_disagreement = 0.0;  // max sup-norm gap between starts
  double sup_error = 0.0;           // sup-norm gap to the supplied density
  int iterations = 0;
};

// Projected-gradient minimization of the discretized mean-field energy
// (1/2) w^T C w + V . w over the lattice simplex, where C is the
// band-limited Green kernel, from `starts` random smooth densities.
// Torus lattices only.
inline MinimizationOracle equilibrium_minimization_oracle(const SpectralModel& sm, const Potential& potential,
                                                          int resolution, const std::vector<double>& reference,
                                                          Rng& rng, int starts = 5, int max_iterations = 5000,
                                                          double tolerance = 1e-12) {
  const Manifold& m = sm.manifold();
  if (!m.is_torus()) throw std::invalid_argument("equilibrium_minimization_oracle: torus lattices only");
  const QuadratureGrid grid = build_grid(m, resolution);
  if (reference.size() != grid.size()) throw std::invalid_argument("equilibrium_minimization_oracle: size mismatch");
  const int d = m.dim();
  const auto table = detail::band_limited_green_table(resolution, d);
  const double count = static_cast<double>(grid.size());
  // Largest circulant eigenvalue: count / lambda_1.
  const double step = kFourPiSq / count;
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) v[k] = potential.value(grid.nodes[k]);
  MinimizationOracle out;
  std::vector<std::vector<double>> results;
  for (int s = 0; s < starts; ++s) {
    std::vector<double> w = random_smooth_density(m, grid, rng);
    for (double& x : w) x /= count;
    std::vector<double> grad, prev;
    int it = 0;
    for (; it < max_iterations; ++it) {
      detail::lattice_convolve(w, table, resolution, d, grad);
      prev = w;
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= step * (grad[k] + v[k]);
      detail::project_simplex(w);
      double change = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) change = std::max(change, std::abs(w[k] - prev[k]) * count);
      if (change < tolerance) break;
    }
    out.iterations = std::max(out.iterations, it);
    for (double& x : w) x *= count;
    results.push_back(std::move(w));
  }
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      out.sup_error = std::max(out.sup_error, std::abs(r[k] - reference[k]));
      out.worst_disagreement = std::max(out.worst_disagreement, std::abs(r[k] - results.front()[k]));
    }
  }
  out.density = results.front();
  return out;
}

// ----------------------------------------------------- partition function

struct PartitionCheck {
  double z = 0.0;            // tensor-grid quadrature of Z_n
  double lower_bound = 0.0;  // exp(-beta e_n - n D)
  double e_n = 0.0;
  double entropy = 0.0;
  [[nodiscard]] bool satisfied() const { return z >= lower_bound; }
};

// Z_n = int exp(-beta H_n) dpi^n by tensor midpoint quadrature on staggered
// torus lattices: particle k sits on the lattice shifted by k/n of a cell in
// every coordinate, so no two particles ever share a node and Z_n(beta=0) = 1
// exactly. Compared against exp(-beta e_n - n D(mu_eq | pi)) with
// e_n = (n-1)/(2n) int int G rho rho + int V rho.
inline PartitionCheck partition_lower_bound_check(const SpectralModel& sm, int n, double beta, int resolution,
                                                  const Potential* potential = nullptr) {
  const Manifold& m = sm.manifold();
  if (!m.is_torus()) throw std::invalid_argument("partition_lower_bound_check: torus lattices only");
  if (n < 2 || n > 3) throw std::invalid_argument("partition_lower_bound_check: n must be 2 or 3");
  if (resolution < 2 || resolution > 32)
    throw std::invalid_argument("partition_lower_bound_check: resolution must be in [2, 32]");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("partition_lower_bound_check: bad beta");
  const int d = m.dim();
  const QuadratureGrid grid = build_grid(m, resolution);
  const std::size_t count = grid.size();
  if (n == 3 && potential && count > 4096)
    throw std::invalid_argument("partition_lower_bound_check: n = 3 with a potential needs resolution^d <= 4096");
  const double nn = n;
  const double w = 1.0 / static_cast<double>(count);
  const double h = 1.0 / resolution;

  // shifted[s][off] = G(0, (off + s/n) h) for s = 1..n-1.
  std::vector<std::vector<double>> shifted(static_cast<std::size_t>(n));
  for (int s = 1; s < n; ++s) {
    shifted[s].resize(count);
    Point origin;
    for (std::size_t off = 0; off < count; ++off) {
      Point y = grid.nodes[off];
      for (int i = 0; i < d; ++i) y[i] = wrap_unit(y[i] + s * h / nn);
      shifted[s][off] = sm.green(origin, y).value;
    }
  }
  auto offset = [&](std::size_t a, std::size_t b) {  // lattice index of x_b - x_a
    std::size_t off = 0, ra = a, rb = b, scale = 1;
    for (int i = 0; i < d; ++i) {
      const int ca = static_cast<int>(ra % resolution), cb = static_cast<int>(rb % resolution);
      ra /= resolution;
      rb /= resolution;
      int diff = cb - ca;
      if (diff < 0) diff += resolution;
      off += static_cast<std::size_t>(diff) * scale;
      scale *= resolution;
    }
    return off;
  };
  auto field = [&](int particle, std::size_t node) {
    if (!potential) return 0.0;
    Point y = grid.nodes[node];
    for (int i = 0; i < d; ++i) y[i] = wrap_unit(y[i] + particle * h / nn);
    return potential->value(y);
  };

  PartitionCheck out;
  double z = 0.0;
  if (!potential) {
    // Translation invariance: particle 0 at the origin.
    if (n == 2) {
      for (std::size_t a = 0; a < count; ++a) z += w * std::exp(-beta * shifted[1][a] / (nn * nn));
    } else {
      for (std::size_t a = 0; a < count; ++a)
        for (std::size_t b = 0; b < count; ++b) {
          const double e = (shifted[1][a] + shifted[2][b] + shifted[1][offset(a, b)]) / (nn * nn);
          z += w * w * std::exp(-beta * e);
        }
    }
  } else {
    std::vector<std::vector<double>> v(static_cast<std::size_t>(n), std::vector<double>(count));
    for (int k = 0; k < n; ++k)
      for (std::size_t a = 0; a < count; ++a) v[k][a] = field(k, a);
    if (n == 2) {
      for (std::size_t a = 0; a < count; ++a)
        for (std::size_t b = 0; b < count; ++b) {
          const double e = shifted[1][offset(a, b)] / (nn * nn) + (v[0][a] + v[1][b]) / nn;
          z += w * w * std::exp(-beta * e);
        }
    } else {
      for (std::size_t a = 0; a < count; ++a)
        for (std::size_t b = 0; b < count; ++b)
          for (std::size_t c = 0; c < count; ++c) {
            const double e =
                (shifted[1][offset(a, b)] + shifted[2][offset(a, c)] + shifted[1][offset(b, c)]) / (nn * nn) +
                (v[0][a] + v[1][b] + v[2][c]) / nn;
            z += w * w * w * std::exp(-beta * e);
          }
    }
  }
  out.z = z;
  if (potential) {
    const EquilibriumMeasure eq = equilibrium_measure(sm, potential, grid);
    std::vector<double> mu(count);
    double field_mean = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      mu[k] = w * eq.density[k];
      field_mean += mu[k] * potential->value(grid.nodes[k]);
    }
    const double pair = detail::lattice_fourier_energy(mu, resolution, d);
    out.e_n = (nn - 1.0) / (2.0 * nn) * pair + field_mean;
    out.entropy = eq.entropy;
  }
  out.lower_bound = std::exp(-beta * out.e_n - nn * out.entropy);
  return out;
}

// ---------------------------------------------------------- tail estimates

struct TailRow {
  int n = 0;
  double beta = 0.0;
  double r = 0.0;
  std::size_t chains = 0;
  std::size_t exceed_upper = 0;  // chains with W1 + mesh >= r
  std::size_t exceed_lower = 0;  // chains with W1 - mesh >= r
  double p_hat = 0.0;            // exceed_upper / chains
  stats::Interval ci_upper;      // Wilson CI from the upper bracket
  stats::Interval ci_lower;      // Wilson CI from the lower bracket
  bool mixing_flag = false;      // R-hat > 1.1
};

struct TailEstimate {
  std::vector<TailRow> rows;
  std::vector<double> w1_values;  // final-state W1(i_n, mu_eq) per chain
  double mesh = 0.0;
  double r_hat = 1.0;
  std::size_t accepted = 0, proposed = 0;
};

struct TailOptions {
  std::size_t chains = 100;
  std::size_t sweeps = 1000;
  std::size_t burn_in = 500;
  unsigned jobs = 0;
  double level = 0.95;
};

// Independent Metropolis chains, final state only. W1(i_n, mu_eq) is exact
// against the grid measure of mu_eq and bracketed by the grid mesh.
inline TailEstimate estimate_tail(const SpectralModel& sm, const GibbsParams& params, int n,
                                  const std::vector<double>& r_list, const EquilibriumMeasure& eq, Rng rng,
                                  const TailOptions& options = {}) {
  if (options.chains < 2) throw std::invalid_argument("estimate_tail: need at least 2 chains");
  if (n < 2) throw std::invalid_argument("estimate_tail: n must be >= 2");
  const Manifold& m = sm.manifold();
  const DiscreteMeasure target = DiscreteMeasure::from_grid(eq.grid, &eq.density);
  TailEstimate out;
  out.mesh = eq.grid.mesh;
  out.w1_values.assign(options.chains, 0.0);
  std::vector<std::vector<double>> traces(options.chains);
  std::vector<std::size_t> accepted(options.chains), proposed(options.chains);
  parallel_for(options.chains, options.jobs, [&](std::size_t c) {
    Rng chain_rng = rng.split(c);
    auto points = random_configuration(m, static_cast<std::size_t>(n), chain_rng);
    GibbsChain chain(sm, params, std::move(points), chain_rng.split(1));
    chain.burn_in(options.burn_in);
    chain.run(options.sweeps, true);
    traces[c] = chain.stats().energy_trace;
    accepted[c] = chain.stats().accepted;
    proposed[c] = chain.stats().proposed;
    out.w1_values[c] = w1_exact(m, DiscreteMeasure::empirical(chain.points()), target).value;
  });
  for (std::size_t c = 0; c < options.chains; ++c) {
    out.accepted += accepted[c];
    out.proposed += proposed[c];
  }
  if (options.sweeps >= 2 && params.beta > 0.0) out.r_hat = stats::r_hat(traces);
  for (double r : r_list) {
    TailRow row;
    row.n = n;
    row.beta = params.beta;
    row.r = r;
    row.chains = options.chains;
    for (double w : out.w1_values) {
      if (w + out.mesh >= r) ++row.exceed_upper;
      if (w - out.mesh >= r) ++row.exceed_lower;
    }
    row.p_hat = static_cast<double>(row.exceed_upper) / static_cast<double>(row.chains);
    row.ci_upper = stats::wilson_interval(row.exceed_upper, row.chains, options.level);
    row.ci_lower = stats::wilson_interval(row.exceed_lower, row.chains, options.level);
    row.mixing_flag = out.r_hat > 1.1;
    out.rows.push_back(row);
  }
  return out;
}

// Empirical rate -log(p_hat)/beta; +infinity when p_hat = 0, NaN when
// p_hat = 1 or beta = 0.
inline double empirical_rate(const TailRow& row) {
  if (row.exceed_upper == row.chains || row.beta <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (row.exceed_upper == 0) return std::numeric_limits<double>::infinity();
  return -std::log(row.p_hat) / row.beta;
}

// Rate interval [-log(ci.upper)/beta, -log(ci.lower)/beta].
inline stats::Interval rate_interval(const TailRow& row) {
  const double inf = std::numeric_limits<double>::infinity();
  if (row.beta <= 0.0) return {0.0, inf};
  return {-std::log(row.ci_upper.upper) / row.beta,
          row.ci_upper.lower > 0.0 ? -std::log(row.ci_upper.lower) / row.beta : inf};
}

// True unless some r shows the rate at the larger n strictly below the rate
// at the smaller n with disjoint confidence intervals. Rows are matched by r.
inline bool rate_trend_monotone(const std::vector<TailRow>& smaller_n, const std::vector<TailRow>& larger_n) {
  for (const TailRow& a : smaller_n)
    for (const TailRow& b : larger_n)
      if (a.r == b.r && rate_interval(b).upper < rate_interval(a).lower) return false;
  return true;
}

}  // namespace coulomb

#endif  // COULOMB_CONCENTRATION_HPP
