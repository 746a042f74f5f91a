#ifndef COULOMB_TRANSPORT_HPP
#define COULOMB_TRANSPORT_HPP

// Wasserstein-1 distances between discrete measures on a model manifold:
// exact solves by network simplex, Kantorovich-Rubinstein dual
// certificates, entropic brackets for larger instances, and the Green
// energy distance E(mu - nu).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coulomb/manifold.hpp"
#include "coulomb/network_simplex.hpp"
#include "coulomb/rng.hpp"
#include "coulomb/spectral.hpp"

namespace coulomb {

struct DiscreteMeasure {
  std::vector<Point> atoms;
  std::vector<double> weights;
  // Resolution N when the atoms are the torus lattice {i/N}^d in grid order.
  int lattice_resolution = 0;

  [[nodiscard]] std::size_t size() const { return atoms.size(); }

  void validate() const {
    if (atoms.empty()) throw std::invalid_argument("DiscreteMeasure: no atoms");
    if (atoms.size() != weights.size())
      throw std::invalid_argument("DiscreteMeasure: atom/weight count mismatch");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("DiscreteMeasure: weights must be finite and nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-10)
      throw std::invalid_argument("DiscreteMeasure: weights sum to " + std::to_string(total) + ", expected 1");
  }

  // Empirical measure i_n: weight 1/n on each point.
  static DiscreteMeasure empirical(std::vector<Point> points) {
    DiscreteMeasure mu;
    const double w = 1.0 / static_cast<double>(points.size());
    mu.weights.assign(points.size(), w);
    mu.atoms = std::move(points);
    return mu;
  }

  // Grid discretization of density * volume; the density defaults to 1.
  // Densities are renormalized when their grid mass is within `tolerance` of 1.
  static DiscreteMeasure from_grid(const QuadratureGrid& grid, const std::vector<double>* density = nullptr,
                                   double tolerance = 1e-8) {
    DiscreteMeasure mu;
    mu.atoms = grid.nodes;
    mu.weights = grid.weights;
    if (density) {
      if (density->size() != grid.size()) throw std::invalid_argument("from_grid: density size mismatch");
      double mass = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!((*density)[i] >= 0.0)) throw std::invalid_argument("from_grid: density must be nonnegative");
        mu.weights[i] *= (*density)[i];
        mass += mu.weights[i];
      }
      if (std::abs(mass - 1.0) > tolerance)
        throw std::invalid_argument("from_grid: density mass " + std::to_string(mass) + " is not 1");
      for (double& w : mu.weights) w /= mass;
    }
    if (grid.lattice) mu.lattice_resolution = grid.resolution;
    return mu;
  }
};

struct TransportPlan {
  std::vector<TransportFlow> flows;
  double cost = 0.0;
};

struct W1Result {
  double value = 0.0;
  TransportPlan plan;
};

inline constexpr std::size_t kExactAtomCap = 5000;

namespace detail {

inline bool same_atoms(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a.atoms[i] == b.atoms[i])) return false;
  return true;
}

}  // namespace detail

// Exact W1. Measures sharing one atom list are reduced to the transport of
// (mu - nu)_+ onto (mu - nu)_-; the common mass stays in place.
inline W1Result w1_exact(const Manifold& m, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  mu.validate();
  nu.validate();
  if (mu.size() > kExactAtomCap || nu.size() > kExactAtomCap)
    throw std::invalid_argument("w1_exact: more than " + std::to_string(kExactAtomCap) +
                                " atoms; use w1_entropic for larger measures");
  W1Result out;
  if (detail::same_atoms(mu, nu)) {
    std::vector<std::size_t> src, dst;
    std::vector<double> a, b;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double diff = mu.weights[i] - nu.weights[i];
      const double common = std::min(mu.weights[i], nu.weights[i]);
      if (common > 0.0) out.plan.flows.push_back({i, i, common});
      if (diff > 0.0) {
        src.push_back(i);
        a.push_back(diff);
      } else if (diff < 0.0) {
        dst.push_back(i);
        b.push_back(-diff);
      }
    }
    if (!src.empty() && !dst.empty()) {
      // Rebalance rounding so the reduced problem is exactly balanced.
      const double sa = std::accumulate(a.begin(), a.end(), 0.0);
      const double sb = std::accumulate(b.begin(), b.end(), 0.0);
      for (double& v : b) v *= sa / sb;
      NetworkSimplex solver(a, b, [&](std::size_t i, std::size_t j) {
        return m.distance(mu.atoms[src[i]], nu.atoms[dst[j]]);
      });
      const TransportSolution sol = solver.solve();
      for (const auto& f : sol.flows) out.plan.flows.push_back({src[f.source], dst[f.sink], f.mass});
      out.value = sol.cost;
    }
  } else {
    NetworkSimplex solver(mu.weights, nu.weights, [&](std::size_t i, std::size_t j) {
      return m.distance(mu.atoms[i], nu.atoms[j]);
    });
    const TransportSolution sol = solver.solve();
    out.plan.flows = sol.flows;
    out.value = sol.cost;
  }
  std::sort(out.plan.flows.begin(), out.plan.flows.end(), [](const TransportFlow& x, const TransportFlow& y) {
    return x.source != y.source ? x.source < y.source : x.sink < y.sink;
  });
  out.plan.cost = out.value;
  return out;
}

struct DualCertificate {
  double plan_cost = 0.0;   // recomputed from the plan's flows
  double dual_value = 0.0;  // int f dmu - int f dnu for the recovered f
  double gap = 0.0;         // plan_cost - dual_value
  double lipschitz_violation = 0.0;
  double marginal_error = 0.0;
  // Recovered 1-Lipschitz potential on the atoms of mu and of nu.
  std::vector<double> f_mu, f_nu;
};

// Kantorovich-Rubinstein certificate for `plan`: optimal dual potentials are
// taken from an exact solve, extended to a 1-Lipschitz function by a
// c-transform, checked pairwise on all atoms, and compared with the plan.
inline DualCertificate w1_dual_certificate(const Manifold& m, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                           const TransportPlan& plan) {
  mu.validate();
  nu.validate();
  DualCertificate cert;
  std::vector<double> row(mu.size(), 0.0), col(nu.size(), 0.0);
  for (const auto& f : plan.flows) {
    if (f.source >= mu.size() || f.sink >= nu.size()) throw std::invalid_argument("plan index out of range");
    if (f.mass < 0.0) throw std::invalid_argument("plan has negative mass");
    row[f.source] += f.mass;
    col[f.sink] += f.mass;
    cert.plan_cost += f.mass * m.distance(mu.atoms[f.source], nu.atoms[f.sink]);
  }
  for (std::size_t i = 0; i < mu.size(); ++i)
    cert.marginal_error = std::max(cert.marginal_error, std::abs(row[i] - mu.weights[i]));
  for (std::size_t j = 0; j < nu.size(); ++j)
    cert.marginal_error = std::max(cert.marginal_error, std::abs(col[j] - nu.weights[j]));

  // Optimal duals alpha_i on the sources of the (possibly reduced) problem.
  std::vector<Point> sources;
  std::vector<double> alpha;
  if (detail::same_atoms(mu, nu)) {
    std::vector<std::size_t> src, dst;
    std::vector<double> a, b;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double diff = mu.weights[i] - nu.weights[i];
      if (diff > 0.0) {
        src.push_back(i);
        a.push_back(diff);
      } else if (diff < 0.0) {
        dst.push_back(i);
        b.push_back(-diff);
      }
    }
    if (!src.empty() && !dst.empty()) {
      const double sa = std::accumulate(a.begin(), a.end(), 0.0);
      const double sb = std::accumulate(b.begin(), b.end(), 0.0);
      for (double& v : b) v *= sa / sb;
      NetworkSimplex solver(a, b, [&](std::size_t i, std::size_t j) {
        return m.distance(mu.atoms[src[i]], mu.atoms[dst[j]]);
      });
      const TransportSolution sol = solver.solve();
      for (std::size_t i = 0; i < src.size(); ++i) {
        sources.push_back(mu.atoms[src[i]]);
        alpha.push_back(sol.alpha[i]);
      }
    }
  } else {
    NetworkSimplex solver(mu.weights, nu.weights,
                          [&](std::size_t i, std::size_t j) { return m.distance(mu.atoms[i], nu.atoms[j]); });
    const TransportSolution sol = solver.solve();
    sources = mu.atoms;
    alpha = sol.alpha;
  }

  // f(z) = -min_s [d(z, x_s) - alpha_s]; identically zero when mu = nu.
  auto potential = [&](const Point& z) {
    if (sources.empty()) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < sources.size(); ++s) best = std::min(best, m.distance(z, sources[s]) - alpha[s]);
    return -best;
  };
  cert.f_mu.resize(mu.size());
  cert.f_nu.resize(nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) cert.f_mu[i] = potential(mu.atoms[i]);
  for (std::size_t j = 0; j < nu.size(); ++j) cert.f_nu[j] = potential(nu.atoms[j]);
  for (std::size_t i = 0; i < mu.size(); ++i) cert.dual_value += mu.weights[i] * cert.f_mu[i];
  for (std::size_t j = 0; j < nu.size(); ++j) cert.dual_value -= nu.weights[j] * cert.f_nu[j];

  // Pairwise Lipschitz check over all atoms.
  std::vector<const Point*> all;
  std::vector<double> values;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    all.push_back(&mu.atoms[i]);
    values.push_back(cert.f_mu[i]);
  }
  if (!detail::same_atoms(mu, nu)) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      all.push_back(&nu.atoms[j]);
      values.push_back(cert.f_nu[j]);
    }
  }
  for (std::size_t a = 0; a < all.size(); ++a) {
    for (std::size_t b = a + 1; b < all.size(); ++b) {
      const double excess = std::abs(values[a] - values[b]) - m.distance(*all[a], *all[b]);
      cert.lipschitz_violation = std::max(cert.lipschitz_violation, excess);
    }
  }
  if (cert.lipschitz_violation > 1e-9)
    throw std::logic_error("w1_dual_certificate: recovered potential is not 1-Lipschitz (solver bug)");
  cert.gap = cert.plan_cost - cert.dual_value;
  return cert;
}

struct W1Estimate {
  double value = 0.0;
  double error_bound = 0.0;  // |W1(mu, target) - value| <= error_bound
};

// W1 between mu and the volume measure (or rho dpi), discretized on `grid`.
// The grid measure is within grid.mesh of the continuous one in W1.
inline W1Estimate w1_to_equilibrium(const Manifold& m, const DiscreteMeasure& mu, const QuadratureGrid& grid,
                                    const std::vector<double>* rho = nullptr) {
  if (grid.kind != m.kind()) throw std::invalid_argument("w1_to_equilibrium: grid/manifold mismatch");
  const DiscreteMeasure target = DiscreteMeasure::from_grid(grid, rho);
  W1Estimate out;
  out.value = w1_exact(m, mu, target).value;
  out.error_bound = grid.mesh;
  return out;
}

struct EntropicBracket {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t iterations = 0;
  double marginal_residual = 0.0;
};

// Log-domain Sinkhorn on the geodesic cost. The upper end is the cost of the
// Sinkhorn plan rounded onto the exact marginals; the lower end is the value
// of the c-transformed (hence feasible) dual potentials.
inline EntropicBracket w1_entropic(const Manifold& m, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   double epsilon, std::size_t max_iterations = 20000, double tolerance = 1e-7) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("w1_entropic: epsilon must be positive");
  mu.validate();
  nu.validate();
  const std::size_t n = mu.size(), k = nu.size();
  std::vector<double> cost(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) cost[i * k + j] = m.distance(mu.atoms[i], nu.atoms[j]);

  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> log_a(n), log_b(k);
  for (std::size_t i = 0; i < n; ++i) log_a[i] = mu.weights[i] > 0.0 ? std::log(mu.weights[i]) : neg_inf;
  for (std::size_t j = 0; j < k; ++j) log_b[j] = nu.weights[j] > 0.0 ? std::log(nu.weights[j]) : neg_inf;

  // Plan P_ij = exp((f_i + g_j - C_ij) / eps).
  std::vector<double> f(n, 0.0), g(k, 0.0), scratch(std::max(n, k));
  auto lse = [neg_inf](const double* v, std::size_t len) {
    double top = neg_inf;
    for (std::size_t t = 0; t < len; ++t) top = std::max(top, v[t]);
    if (top == neg_inf) return neg_inf;
    double s = 0.0;
    for (std::size_t t = 0; t < len; ++t) s += std::exp(v[t] - top);
    return top + std::log(s);
  };
  EntropicBracket out;
  std::vector<double> col_sum(k);
  bool converged = false;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      if (log_a[i] == neg_inf) {
        f[i] = neg_inf;
        continue;
      }
      for (std::size_t j = 0; j < k; ++j) scratch[j] = (g[j] - cost[i * k + j]) / epsilon;
      f[i] = epsilon * (log_a[i] - lse(scratch.data(), k));
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (log_b[j] == neg_inf) {
        g[j] = neg_inf;
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) scratch[i] = (f[i] - cost[i * k + j]) / epsilon;
      g[j] = epsilon * (log_b[j] - lse(scratch.data(), n));
    }
    // Columns match exactly after the g-update; measure the row residual.
    if (it % 10 == 0 || it == max_iterations) {
      double residual = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        if (f[i] != neg_inf)
          for (std::size_t j = 0; j < k; ++j)
            if (g[j] != neg_inf) row += std::exp((f[i] + g[j] - cost[i * k + j]) / epsilon);
        residual += std::abs(row - mu.weights[i]);
      }
      out.iterations = it;
      out.marginal_residual = residual;
      if (residual < tolerance) {
        converged = true;
        break;
      }
    }
  }
  if (!converged)
    throw std::runtime_error("w1_entropic: no convergence after " + std::to_string(max_iterations) +
                             " iterations (marginal residual " + std::to_string(out.marginal_residual) + ")");

  // Rounding onto the marginals (Altschuler, Weed, Rigollet).
  std::vector<double> plan(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (f[i] != neg_inf && g[j] != neg_inf) plan[i * k + j] = std::exp((f[i] + g[j] - cost[i * k + j]) / epsilon);
  std::vector<double> row(n, 0.0), col(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) row[i] += plan[i * k + j];
    const double scale = row[i] > mu.weights[i] ? mu.weights[i] / row[i] : 1.0;
    for (std::size_t j = 0; j < k; ++j) plan[i * k + j] *= scale;
  }
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[j] += plan[i * k + j];
    const double scale = col[j] > nu.weights[j] ? nu.weights[j] / col[j] : 1.0;
    for (std::size_t i = 0; i < n; ++i) plan[i * k + j] *= scale;
  }
  std::fill(row.begin(), row.end(), 0.0);
  std::fill(col.begin(), col.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      row[i] += plan[i * k + j];
      col[j] += plan[i * k + j];
    }
  double missing = 0.0;
  for (std::size_t i = 0; i < n; ++i) missing += mu.weights[i] - row[i];
  double upper = 0.0;
  for (std::size_t idx = 0; idx < n * k; ++idx) upper += plan[idx] * cost[idx];
  if (missing > 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j)
        upper += (mu.weights[i] - row[i]) * (nu.weights[j] - col[j]) / missing * cost[i * k + j];
  }

  // Feasible duals: beta_j = min_i (C_ij - alpha_i), then alpha_i = min_j (C_ij - beta_j).
  std::vector<double> alpha(n), beta(k);
  for (std::size_t i = 0; i < n; ++i) alpha[i] = f[i] == neg_inf ? 0.0 : f[i];
  for (std::size_t j = 0; j < k; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) best = std::min(best, cost[i * k + j] - alpha[i]);
    beta[j] = best;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) best = std::min(best, cost[i * k + j] - beta[j]);
    alpha[i] = best;
  }
  double lower = 0.0;
  for (std::size_t i = 0; i < n; ++i) lower += mu.weights[i] * alpha[i];
  for (std::size_t j = 0; j < k; ++j) lower += nu.weights[j] * beta[j];
  out.lower = std::max(0.0, lower);
  out.upper = std::max(out.lower, upper);
  return out;
}

namespace detail {

// Signed weights of mu - nu on a shared lattice, flattened in grid order.
inline std::vector<double> lattice_difference(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<double> c(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) c[i] = mu.weights[i] - nu.weights[i];
  return c;
}

// |c^(k)|^2 / lambda_k summed over the band |k_i| < N/2 (the lattice values
// read as samples of a band-limited density).
inline double lattice_fourier_energy(const std::vector<double>& c, int N, int d) {
  using cd = std::complex<double>;
  std::vector<cd> data(c.begin(), c.end());
  std::vector<cd> twiddle(N);
  for (int k = 0; k < N; ++k) twiddle[k] = std::polar(1.0, -2.0 * kPi * k / N);
  // Separable DFT along each axis; axis 0 has the largest stride.
  std::vector<cd> line(N), result(N);
  for (int axis = 0; axis < d; ++axis) {
    std::size_t stride = 1;
    for (int a = axis + 1; a < d; ++a) stride *= N;
    const std::size_t total = data.size();
    for (std::size_t base = 0; base < total; ++base) {
      if ((base / stride) % N != 0) continue;
      for (int x = 0; x < N; ++x) line[x] = data[base + x * stride];
      for (int k = 0; k < N; ++k) {
        cd s = 0.0;
        for (int x = 0; x < N; ++x) s += line[x] * twiddle[(static_cast<long>(k) * x) % N];
        result[k] = s;
      }
      for (int k = 0; k < N; ++k) data[base + k * stride] = result[k];
    }
  }
  double energy = 0.0;
  for (std::size_t idx = 1; idx < data.size(); ++idx) {
    std::size_t rest = idx;
    double k2 = 0.0;
    bool in_band = true;
    for (int a = 0; a < d; ++a) {
      int k = static_cast<int>(rest % N);
      rest /= N;
      if (k > N / 2) k -= N;
      if (2 * std::abs(k) >= N) in_band = false;
      k2 += static_cast<double>(k) * k;
    }
    if (!in_band) continue;
    energy += std::norm(data[idx]) / (kFourPiSq * k2);
  }
  return energy;
}

// Translation-invariant table G(offset) on the lattice, offset 0 set to 0.
inline std::vector<double> lattice_green_table(const SpectralModel& sm, int N) {
  const int d = sm.manifold().dim();
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(N);
  std::vector<double> table(count, 0.0);
  Point origin;
  for (std::size_t idx = 1; idx < count; ++idx) {
    Point y;
    std::size_t rest = idx;
    for (int i = d - 1; i >= 0; --i) {
      y[i] = static_cast<double>(rest % N) / N;
      rest /= N;
    }
    table[idx] = sm.green(origin, y).value;
  }
  return table;
}

// sum_{i != j} c_i c_j G(x_i - x_j) on the lattice via the offset table.
inline double lattice_double_sum(const std::vector<double>& c, const std::vector<double>& table, int N, int d) {
  const std::size_t count = c.size();
  std::vector<int> coords(count * d);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t rest = idx;
    for (int i = d - 1; i >= 0; --i) {
      coords[idx * d + i] = static_cast<int>(rest % N);
      rest /= N;
    }
  }
  double total = 0.0;
  for (std::size_t a = 0; a < count; ++a) {
    if (c[a] == 0.0) continue;
    double inner = 0.0;
    for (std::size_t b = 0; b < count; ++b) {
      std::size_t off = 0;
      for (int i = 0; i < d; ++i) {
        int diff = coords[a * d + i] - coords[b * d + i];
        if (diff < 0) diff += N;
        off = off * N + diff;
      }
      inner += c[b] * table[off];
    }
    total += c[a] * inner;
  }
  return total;
}

}  // namespace detail

enum class EnergyPath { Fourier, DoubleSum };

struct EnergyOptions {
  EnergyPath path = EnergyPath::Fourier;
  // Drop i = j terms of the double sum (grid discretizations of densities).
  bool exclude_diagonal = true;
};

// E(mu - nu) = int int G d(mu - nu) d(mu - nu).
// Fourier path: torus lattice measures only (band-limited reading of the
// lattice values). Double-sum path: any measures; atoms shared by mu and nu
// are merged first, and surviving diagonal terms are +infinity unless
// excluded.
inline double energy_distance_squared(const SpectralModel& sm, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const EnergyOptions& options = {}) {
  mu.validate();
  nu.validate();
  const Manifold& m = sm.manifold();
  const bool lattice = m.is_torus() && mu.lattice_resolution > 0 &&
                       mu.lattice_resolution == nu.lattice_resolution && detail::same_atoms(mu, nu);
  double value = 0.0;
  if (options.path == EnergyPath::Fourier) {
    if (!lattice) throw std::invalid_argument("energy_distance: Fourier path needs torus lattice measures");
    value = detail::lattice_fourier_energy(detail::lattice_difference(mu, nu), mu.lattice_resolution, m.dim());
  } else if (lattice) {
    const auto table = detail::lattice_green_table(sm, mu.lattice_resolution);
    const auto c = detail::lattice_difference(mu, nu);
    bool any = false;
    for (double v : c) any = any || v != 0.0;
    if (any && !options.exclude_diagonal) return std::numeric_limits<double>::infinity();
    value = detail::lattice_double_sum(c, table, mu.lattice_resolution, m.dim());
  } else {
    std::vector<Point> atoms;
    std::vector<double> c;
    auto add = [&](const Point& p, double w) {
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (atoms[i] == p) {
          c[i] += w;
          return;
        }
      }
      atoms.push_back(p);
      c.push_back(w);
    };
    if (detail::same_atoms(mu, nu)) {
      atoms = mu.atoms;
      c = detail::lattice_difference(mu, nu);
    } else {
      for (std::size_t i = 0; i < mu.size(); ++i) add(mu.atoms[i], mu.weights[i]);
      for (std::size_t j = 0; j < nu.size(); ++j) add(nu.atoms[j], -nu.weights[j]);
    }
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (c[a] == 0.0) continue;
      if (!options.exclude_diagonal) return std::numeric_limits<double>::infinity();
      for (std::size_t b = a + 1; b < atoms.size(); ++b) {
        if (c[b] == 0.0) continue;
        value += 2.0 * c[a] * c[b] * sm.green(atoms[a], atoms[b]).value;
      }
    }
  }
  if (value < -1e-9)
    throw std::logic_error("energy_distance: negative energy " + std::to_string(value) +
                           " (positive-definiteness violated)");
  return std::max(0.0, value);
}

// sqrt(E(mu - nu)).
inline double energy_distance(const SpectralModel& sm, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const EnergyOptions& options = {}) {
  return std::sqrt(energy_distance_squared(sm, mu, nu, options));
}

// Random low-frequency density sampled on the grid: torus cosines with
// |k|_inf <= 2, sphere polynomials of degree <= 2; clipped below at 0.05 and
// renormalized to grid mass 1.
inline std::vector<double> random_smooth_density(const Manifold& m, const QuadratureGrid& grid, Rng& rng,
                                                 double amplitude = 0.3) {
  std::vector<double> rho(grid.size(), 1.0);
  if (m.is_torus()) {
    const int d = m.dim();
    const int side = 5;
    int count = 1;
    for (int i = 0; i < d; ++i) count *= side;
    std::vector<std::array<int, 3>> modes;
    std::vector<double> amp, phase;
    for (int code = 0; code < count; ++code) {
      std::array<int, 3> k{};
      int rest = code;
      for (int i = 0; i < d; ++i) {
        k[i] = rest % side - 2;
        rest /= side;
      }
      // One representative of each +-k pair.
      bool positive = false, decided = false;
      for (int i = 0; i < d && !decided; ++i) {
        if (k[i] != 0) {
          positive = k[i] > 0;
          decided = true;
        }
      }
      if (!positive) continue;
      double norm = 0.0;
      for (int i = 0; i < d; ++i) norm += static_cast<double>(k[i]) * k[i];
      modes.push_back(k);
      amp.push_back(amplitude * (2.0 * rng.uniform() - 1.0) / std::sqrt(norm));
      phase.push_back(2.0 * kPi * rng.uniform());
    }
    for (std::size_t n = 0; n < grid.size(); ++n) {
      double v = 1.0;
      for (std::size_t q = 0; q < modes.size(); ++q) {
        double arg = phase[q];
        for (int i = 0; i < d; ++i) arg += 2.0 * kPi * modes[q][i] * grid.nodes[n][i];
        v += amp[q] * std::cos(arg);
      }
      rho[n] = v;
    }
  } else {
    std::array<double, 3> a{};
    std::array<std::array<double, 3>, 3> b{};
    for (auto& v : a) v = 2.0 * amplitude * (2.0 * rng.uniform() - 1.0);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) b[i][j] = b[j][i] = 2.0 * amplitude * (2.0 * rng.uniform() - 1.0);
    const double trace = (b[0][0] + b[1][1] + b[2][2]) / 3.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const Point& u = grid.nodes[n];
      double v = 1.0 - trace;
      for (int i = 0; i < 3; ++i) {
        v += a[i] * u[i];
        for (int j = 0; j < 3; ++j) v += b[i][j] * u[i] * u[j];
      }
      rho[n] = v;
    }
  }
  double mass = 0.0;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    rho[n] = std::max(rho[n], 0.05);
    mass += grid.weights[n] * rho[n];
  }
  for (double& v : rho) v /= mass;
  return rho;
}

struct DistanceEnergyReport {
  int trials = 0;
  double worst_ratio = 0.0;            // max W1(mu, nu) / sqrt(E(mu - nu))
  double worst_energy_excess = -1e300;  // max (1/2) W1(mu, pi)^2 - H(mu)
  double worst_energy_ratio = 0.0;     // max (1/2) W1(mu, pi)^2 / H(mu)
};

// W1(mu, nu) <= sqrt(E(mu - nu)) and (1/2) W1(mu, pi)^2 <= H(mu) - H(pi) on
// random smooth grid densities. W1 is the exact grid transport; E uses the
// Fourier path on the torus and the double sum on the sphere; H is an
// independent diagonal-excluded double sum.
inline DistanceEnergyReport verify_distance_energy_comparison(const SpectralModel& sm, int trials, int resolution,
                                                              Rng& rng) {
  const Manifold& m = sm.manifold();
  const QuadratureGrid grid = build_grid(m, resolution);
  const DiscreteMeasure uniform = DiscreteMeasure::from_grid(grid);
  const EnergyOptions energy_path{m.is_torus() ? EnergyPath::Fourier : EnergyPath::DoubleSum, true};
  std::vector<double> table;
  if (grid.lattice) table = detail::lattice_green_table(sm, resolution);
  auto grid_energy = [&](const DiscreteMeasure& mu) {
    if (grid.lattice) return 0.5 * detail::lattice_double_sum(mu.weights, table, resolution, m.dim());
    double h = 0.0;
    for (std::size_t a = 0; a < mu.size(); ++a)
      for (std::size_t b = a + 1; b < mu.size(); ++b)
        h += mu.weights[a] * mu.weights[b] * sm.green(mu.atoms[a], mu.atoms[b]).value;
    return h;
  };
  const double h_uniform = grid_energy(uniform);
  DistanceEnergyReport report;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const auto rho_a = random_smooth_density(m, grid, rng);
    const auto rho_b = random_smooth_density(m, grid, rng);
    const DiscreteMeasure mu = DiscreteMeasure::from_grid(grid, &rho_a);
    const DiscreteMeasure nu = DiscreteMeasure::from_grid(grid, &rho_b);
    const double w = w1_exact(m, mu, nu).value;
    const double e = energy_distance(sm, mu, nu, energy_path);
    report.worst_ratio = std::max(report.worst_ratio, w / e);

    const double w_pi = w1_exact(m, mu, uniform).value;
    // H(mu) - H(pi), both by the same diagonal-excluded double sum so that
    // the missing self-energy cells largely cancel.
    const double h = grid_energy(mu) - h_uniform;
    report.worst_energy_excess = std::max(report.worst_energy_excess, 0.5 * w_pi * w_pi - h);
    report.worst_energy_ratio = std::max(report.worst_energy_ratio, 0.5 * w_pi * w_pi / h);
  }
  return report;
}

}  // namespace coulomb

#endif  // COULOMB_TRANSPORT_HPP
