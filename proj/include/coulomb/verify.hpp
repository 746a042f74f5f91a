#ifndef COULOMB_VERIFY_HPP
#define COULOMB_VERIFY_HPP

// Invariant suites behind `coulomb verify` and the acceptance binary. Each
// check records the inequality it tested and the observed values.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "coulomb/concentration.hpp"
#include "coulomb/experiment.hpp"
#include "coulomb/gas.hpp"
#include "coulomb/green_quadrature.hpp"
#include "coulomb/io.hpp"
#include "coulomb/regularize.hpp"
#include "coulomb/stats.hpp"
#include "coulomb/transport.hpp"

namespace coulomb::verify {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

using Report = std::vector<CheckResult>;

struct Outcome {
  bool passed = false;
  std::string detail;
};

inline std::string strf(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

// "value <= limit" style outcome.
inline Outcome at_most(double value, double limit, const std::string& what) {
  return {value <= limit, strf("%s = %.3e <= %.3e", what.c_str(), value, limit)};
}
inline Outcome at_least(double value, double limit, const std::string& what) {
  return {value >= limit, strf("%s = %.6g >= %.6g", what.c_str(), value, limit)};
}

class Runner {
 public:
  using Listener = std::function<void(const CheckResult&)>;
  Runner(std::string suite, Report& report, Listener listener = {})
      : suite_(std::move(suite)), report_(report), listener_(std::move(listener)) {}

  void check(const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r{suite_, name, false, "", 0.0};
    try {
      const Outcome o = body();
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (listener_) listener_(r);
    report_.push_back(std::move(r));
  }

 private:
  std::string suite_;
  Report& report_;
  Listener listener_;
};

inline bool all_passed(const Report& report) {
  for (const auto& r : report)
    if (!r.passed) return false;
  return !report.empty();
}

inline std::string format_table(const Report& report) {
  std::string out;
  for (const auto& r : report)
    out += strf("%-4s %-13s %-34s %7.2fs  ", r.passed ? "ok" : "FAIL", r.suite.c_str(), r.name.c_str(), r.seconds) +
           r.detail + "\n";
  return out;
}

struct SuiteOptions {
  // Replacement spectral models, e.g. built from an eigen table on disk.
  std::map<ManifoldKind, SpectralModel> models;
  std::uint64_t seed = 20240611;
  unsigned jobs = 0;
  // Called after every check, e.g. to stream the table.
  std::function<void(const CheckResult&)> on_check;
};

inline const std::vector<Manifold>& all_manifolds() {
  static const std::vector<Manifold> ms{Manifold(ManifoldKind::Torus2), Manifold(ManifoldKind::Torus3),
                                        Manifold(ManifoldKind::Sphere2)};
  return ms;
}

inline SpectralModel model_for(const Manifold& m, const SuiteOptions& options) {
  if (auto it = options.models.find(m.kind()); it != options.models.end()) return it->second;
  return io::load_or_build_model(m, 0, io::cache_dir_from_env());
}

// ------------------------------------------------------------ heat kernel

inline void spectral_suite(Report& report, const SuiteOptions& options) {
  Runner run("spectral", report, options.on_check);
  for (const Manifold& m : all_manifolds()) {
    const SpectralModel sm = model_for(m, options);
    const std::string tag = m.name() + " ";
    Rng rng(options.seed ^ io::fnv1a(m.name()));
    std::vector<std::pair<Point, Point>> pairs;
    for (int k = 0; k < 200; ++k) pairs.emplace_back(m.sample_uniform(rng), m.sample_uniform(rng));
    const std::vector<double> times{1e-3, 1e-2, 0.05, 0.1, 1.0};

    run.check(tag + "symmetry", [&] {
      double worst = 0.0;
      for (const auto& [x, y] : pairs)
        for (double t : times) {
          worst = std::max(worst, std::abs(sm.heat_kernel(t, x, y).value - sm.heat_kernel(t, y, x).value));
          worst = std::max(worst, std::abs(sm.regularized_green(t, x, y).value - sm.regularized_green(t, y, x).value));
        }
      return at_most(worst, 0.0, "max |k(x,y) - k(y,x)|");
    });

    const int mass_res = m.dim() == 3 ? 16 : (m.is_torus() ? 64 : 32);
    const QuadratureGrid grid = build_grid(m, mass_res);
    auto integrate = [&](const std::function<double(const Point&)>& f) {
      double s = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k) s += grid.weights[k] * f(grid.nodes[k]);
      return s;
    };

    run.check(tag + "mass", [&] {
      double worst = 0.0;
      for (int k = 0; k < 5; ++k) {
        const Point x = pairs[k].first;
        for (double t : {0.01, 0.1, 1.0, 10.0})
          worst = std::max(worst, std::abs(integrate([&](const Point& z) { return sm.heat_kernel(t, x, z).value; }) - 1.0));
      }
      return at_most(worst, 1e-8, strf("max |int p_t - 1| (%zu nodes)", grid.size()));
    });

    run.check(tag + "semigroup", [&] {
      // Mixed pairs put one factor below the image/eigen crossover.
      std::vector<std::pair<double, double>> ts{{0.02, 0.05}, {0.05, 0.1}, {0.1, 0.2}};
      if (m.kind() == ManifoldKind::Torus2) ts.insert(ts.begin(), {0.01, 0.1});
      double worst = 0.0;
      for (int k = 0; k < 5; ++k) {
        const auto& [x, y] = pairs[k];
        for (const auto& [t, s] : ts) {
          const double lhs =
              integrate([&](const Point& z) { return sm.heat_kernel(t, x, z).value * sm.heat_kernel(s, z, y).value; });
          worst = std::max(worst, std::abs(lhs - sm.heat_kernel(t + s, x, y).value));
        }
      }
      return at_most(worst, 1e-6, "max |int p_t p_s - p_{t+s}|");
    });

    run.check(tag + "uniform limit t=10", [&] {
      double worst = 0.0;
      for (const auto& [x, y] : pairs) worst = std::max(worst, std::abs(sm.heat_kernel(10.0, x, y).value - 1.0));
      return at_most(worst, 1e-10, "max |p_10 - 1|");
    });

    run.check(tag + "positivity", [&] {
      double worst = 0.0;
      for (const auto& [x, y] : pairs)
        for (double t : times) {
          const KernelValue p = sm.heat_kernel(t, x, y);
          worst = std::max(worst, -(p.value + p.truncation_bound));
        }
      return at_most(worst, 0.0, "max -(p_t + bound)");
    });

    if (m.is_torus()) {
      run.check(tag + "representations agree", [&] {
        double worst = 0.0;
        for (const auto& [x, y] : pairs)
          for (double t : {1e-3, 0.01, 0.05, 0.1, 0.5, 1.0}) {
            const KernelValue a = sm.heat_kernel_eigen(t, x, y), b = sm.heat_kernel_images(t, x, y);
            worst = std::max(worst, std::abs(a.value - b.value) - a.truncation_bound - b.truncation_bound);
          }
        return at_most(worst, 1e-12, "max |eigen - images| - bounds");
      });
    }
    if (m.kind() == ManifoldKind::Torus2) {
      run.check(tag + "small-t diagonal", [&] {
        const double t = 0.005, expect = 1.0 / (4.0 * kPi * t);
        const double rel = std::abs(sm.heat_kernel(t, pairs[0].first, pairs[0].first).value / expect - 1.0);
        return at_most(rel, 0.01, "|p_t(x,x) 4 pi t - 1|");
      });
    }
  }
}

// ------------------------------------------------------------------ Green

inline void green_suite(Report& report, const SuiteOptions& options) {
  Runner run("green", report, options.on_check);
  for (const Manifold& m : all_manifolds()) {
    const SpectralModel sm = model_for(m, options);
    const std::string tag = m.name() + " ";
    Rng rng(options.seed ^ io::fnv1a("green" + m.name()));
    const QuadratureGrid grid = build_grid(m, 24);
    const GreenQuadrature quad(sm, grid);
    std::vector<Point> xs;
    for (int k = 0; k < 3; ++k) xs.push_back(m.sample_uniform(rng));

    run.check(tag + "zero mean", [&] {
      double worst = 0.0;
      for (const Point& x : xs) worst = std::max(worst, std::abs(quad.integrate(x, [](const Point&) { return 1.0; })));
      return at_most(worst, 1e-6, "max |int G(x,.) dpi|");
    });

    run.check(tag + "weak identity", [&] {
      double worst = 0.0;
      int count = 0;
      for (const TestFunction& f : standard_test_functions(m)) {
        if (f.name == "constant") continue;
        ++count;
        for (const Point& x : xs) {
          const double integral = quad.integrate(x, f.laplacian);
          worst = std::max(worst, std::abs(integral + f.value(x) - f.mean));
        }
      }
      return at_most(worst, 1e-5, strf("max |int G Lf + f - mean f| (%d functions)", count));
    });

    run.check(tag + "time integral", [&] {
      // G = int_0^T (p_t - 1) dt + G_{T/2}, since the tail integral is G_{T/2}.
      const double big_t = 0.1;
      double worst = 0.0;
      int done = 0;
      while (done < 100) {
        const Point x = m.sample_uniform(rng), y = m.sample_uniform(rng);
        if (m.distance(x, y) < 0.1) continue;
        ++done;
        auto integrand = [&](double t) { return t <= 0.0 ? -1.0 : sm.heat_kernel(t, x, y).value - 1.0; };
        const double head =
            boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, big_t, 10, 1e-10);
        const double g = head + sm.regularized_green(0.5 * big_t, x, y).value;
        worst = std::max(worst, std::abs(g - sm.green(x, y).value));
      }
      return at_most(worst, 1e-6, "max |G - int (p_t - 1) dt| on 100 pairs");
    });
  }
}

// ---------------------------------------------------------- regularization

inline void regularize_suite(Report& report, const SuiteOptions& options) {
  Runner run("regularize", report, options.on_check);
  for (const Manifold& m : all_manifolds()) {
    const SpectralModel sm = model_for(m, options);
    Rng rng(options.seed ^ io::fnv1a("reg" + m.name()));
    run.check(m.name() + " off-diagonal G - G_t", [&] {
      const double margin = offdiagonal_kernel_margin(sm, 1000, {1e-4, 1e-3, 1e-2, 0.1, 1.0}, rng);
      return at_least(margin, -1e-8, "min (G - G_t) + 2t");
    });
    run.check(m.name() + " G_t(x,x) decreasing", [&] {
      const Point x = m.sample_uniform(rng);
      double prev = kInfinity, worst = -kInfinity;
      for (int k = 0; k <= 40; ++k) {
        const double g = sm.regularized_green(std::pow(10.0, -4.0 + 0.1 * k), x, x).value;
        worst = std::max(worst, g - prev);
        prev = g;
      }
      return at_most(worst, 1e-12, "max increase of G_t(x,x) along t");
    });
  }

  std::vector<double> t_grid;
  for (int k = 0; k <= 40; ++k) t_grid.push_back(std::pow(10.0, -4.0 + 0.1 * k));

  const Manifold t2(ManifoldKind::Torus2), t3(ManifoldKind::Torus3);
  const SpectralModel sm2 = model_for(t2, options), sm3 = model_for(t3, options);
  Rng rng(options.seed ^ io::fnv1a("reg-distance"));

  run.check("torus2 diagonal profile", [&] {
    std::vector<Point> xs;
    for (int k = 0; k < 10; ++k) xs.push_back(t2.sample_uniform(rng));
    const DiagonalProfile p = diagonal_profile(sm2, xs, t_grid);
    return Outcome{std::isfinite(p.sup_value) && p.spread < 1e-10,
                   strf("sup (G_t(x,x) + log t / 4 pi) = %.3e, spread across x = %.2e < 1e-10", p.sup_value, p.spread)};
  });

  run.check("torus3 sqrt(t) G_t(x,x)", [&] {
    std::vector<Point> xs;
    for (int k = 0; k < 10; ++k) xs.push_back(t3.sample_uniform(rng));
    const DiagonalProfile p = diagonal_profile(sm3, xs, t_grid);
    // sqrt(t) G_t(x,x) = sqrt(2) / (4 pi)^{3/2} + xi sqrt(t) / (4 pi) + O(t), with xi
    // the simple-cubic Madelung constant of the zero-mean periodic Coulomb kernel.
    const double limit = std::sqrt(2.0) / std::pow(4.0 * kPi, 1.5);
    const double xi = -2.837297479480620;
    const double at_small = sm3.regularized_green(1e-4, xs[0], xs[0]).value * 1e-2;
    const double expect = limit + xi * 1e-2 / (4.0 * kPi);
    const bool ok = std::isfinite(p.sup_value) && p.sup_value <= 1.05 * limit && std::abs(at_small - expect) < 1e-4;
    return Outcome{ok, strf("sup = %.5f <= 1.05 x %.5f; at t=1e-4: %.6f vs two-term expansion %.6f", p.sup_value,
                            limit, at_small, expect)};
  });

  DistanceRegularizedReport dr;
  run.check("torus2 W1(R_t, i_n) / sqrt(t)", [&] {
    dr = verify_distance_to_regularized(sm2, 5, {0.001, 0.004, 0.016, 0.064}, 8, 48, rng);
    return at_most(dr.max_ratio, 2.05, "max W1 / sqrt(t) (n=8, 5 trials)");
  });
  run.check("torus2 W1 log-log slope", [&] {
    const bool ok = dr.slope >= 0.45 && dr.slope <= 0.55;
    return Outcome{ok, strf("slope = %.4f in [0.45, 0.55] (n=8, t = 0.001..0.064)", dr.slope)};
  });

  run.check("torus2 energy comparison", [&] {
    const EnergyComparisonReport er = verify_energy_comparison(sm2, 10, {8, 16, 32}, rng);
    return Outcome{std::isfinite(er.fitted_c) && er.worst_offdiag_margin >= -1e-8,
                   strf("fitted C = %.4f, min sum(G - G_t) + t n^2 = %.4f >= 0", er.fitted_c,
                        er.worst_offdiag_margin)};
  });

  run.check("torus2 H(R_t) vs grid oracle", [&] {
    const QuadratureGrid grid = build_grid(t2, 64);
    const auto points = random_configuration(t2, 4, rng);
    const RegularizedMeasure r = regularize(sm2, points, 0.05, grid);
    const double closed = regularized_energy(sm2, points, 0.05);
    const auto table = detail::lattice_green_table(sm2, 64);
    const double brute = 0.5 * detail::lattice_double_sum(r.grid_measure->weights, table, 64, 2);
    return at_most(std::abs(closed - brute), 1e-3, "|H(R_t) - grid double sum|");
  });

  run.check("torus2 H(R_t) at t=10", [&] {
    const auto points = random_configuration(t2, 6, rng);
    return at_most(std::abs(regularized_energy(sm2, points, 10.0)), 1e-6, "|H(R_10)|");
  });

  run.check("torus2 collision smoothing", [&] {
    auto points = random_configuration(t2, 4, rng);
    points[3] = points[0];
    const double h = hamiltonian(sm2, points), hr = regularized_energy(sm2, points, 0.01);
    return Outcome{std::isinf(h) && std::isfinite(hr), strf("H_n = %g, H(R_0.01) = %.6f", h, hr)};
  });
}

// -------------------------------------------------------------- transport

inline void transport_suite(Report& report, const SuiteOptions& options) {
  Runner run("transport", report, options.on_check);
  for (const Manifold& m : all_manifolds()) {
    Rng rng(options.seed ^ io::fnv1a("ot" + m.name()));
    auto random_measure = [&](std::size_t size) {
      DiscreteMeasure mu;
      double total = 0.0;
      for (std::size_t k = 0; k < size; ++k) {
        mu.atoms.push_back(m.sample_uniform(rng));
        mu.weights.push_back(0.1 + rng.uniform());
        total += mu.weights.back();
      }
      for (double& w : mu.weights) w /= total;
      return mu;
    };
    run.check(m.name() + " metric axioms", [&] {
      double worst = 0.0;
      double min_separation = kInfinity;
      for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_measure(12), b = random_measure(15), c = random_measure(9);
        const double ab = w1_exact(m, a, b).value, ba = w1_exact(m, b, a).value;
        const double bc = w1_exact(m, b, c).value, ac = w1_exact(m, a, c).value;
        worst = std::max({worst, w1_exact(m, a, a).value, std::abs(ab - ba), ac - ab - bc});
        min_separation = std::min(min_separation, ab);
        const Point x = m.sample_uniform(rng), y = m.sample_uniform(rng);
        const double dirac = w1_exact(m, DiscreteMeasure::empirical({x}), DiscreteMeasure::empirical({y})).value;
        worst = std::max(worst, std::abs(dirac - m.distance(x, y)));
      }
      return Outcome{worst <= 1e-9 && min_separation > 0.0,
                     strf("max violation = %.2e <= 1e-9, min W1(mu, nu) = %.3e > 0", worst, min_separation)};
    });
    run.check(m.name() + " dual gap", [&] {
      double worst = 0.0;
      for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_measure(20), b = random_measure(25);
        const W1Result w = w1_exact(m, a, b);
        const DualCertificate cert = w1_dual_certificate(m, a, b, w.plan);
        worst = std::max({worst, std::abs(cert.gap), cert.lipschitz_violation, cert.marginal_error});
      }
      return at_most(worst, 1e-9, "max |primal - dual|, Lipschitz, marginal errors");
    });
  }

  for (const Manifold& m : {Manifold(ManifoldKind::Torus2), Manifold(ManifoldKind::Sphere2)}) {
    const SpectralModel sm = model_for(m, options);
    Rng rng(options.seed ^ io::fnv1a("energy" + m.name()));
    const int trials = 100;
    DistanceEnergyReport r;
    run.check(m.name() + " W1 <= sqrt(E)", [&] {
      r = verify_distance_energy_comparison(sm, trials, m.is_torus() ? 32 : 16, rng);
      return at_most(r.worst_ratio, 1.02, strf("max W1 / sqrt(E) over %d smooth pairs", trials));
    });
    run.check(m.name() + " W1(mu, pi)^2 / 2 <= H(mu)", [&] {
      return at_most(r.worst_energy_excess, 1e-4,
                     strf("max W1^2/2 - H (ratio %.3f)", r.worst_energy_ratio));
    });
  }

  run.check("torus2 single-mode energy", [&] {
    const Manifold m(ManifoldKind::Torus2);
    const SpectralModel sm = model_for(m, options);
    const QuadratureGrid grid = build_grid(m, 64);
    std::vector<double> rho(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) rho[k] = 1.0 + 0.5 * std::cos(2.0 * kPi * grid.nodes[k][0]);
    const DiscreteMeasure mu = DiscreteMeasure::from_grid(grid, &rho), pi = DiscreteMeasure::from_grid(grid);
    const double e = energy_distance_squared(sm, mu, pi), expect = 1.0 / (32.0 * kPi * kPi);
    return at_most(std::abs(e / expect - 1.0), 0.02, strf("|E / (1/(32 pi^2)) - 1| (E = %.6e)", e));
  });
}

// ---------------------------------------------------------------- sampler

// Exact law of the torus distance between the two particles at n = 2: the
// displacement u has density proportional to exp(-beta G(0, u) / 4).
inline std::vector<double> pair_distance_oracle(const SpectralModel& sm, double beta, int resolution, int bins,
                                                double max_distance) {
  const Manifold& m = sm.manifold();
  std::vector<double> hist(bins, 0.0);
  const std::array<double, 2> zero{0.0, 0.0};
  const Point origin = m.make_point(zero);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      const std::array<double, 2> c{(i + 0.5) / resolution, (j + 0.5) / resolution};
      const Point u = m.make_point(c);
      const double r = m.distance(origin, u);
      const int b = std::min(bins - 1, static_cast<int>(r / max_distance * bins));
      hist[b] += std::exp(-0.25 * beta * sm.green(origin, u).value);
    }
  return hist;
}

inline void sampler_suite(Report& report, const SuiteOptions& options) {
  Runner run("sampler", report, options.on_check);
  for (const Manifold& m : all_manifolds()) {
    const SpectralModel sm = model_for(m, options);
    Rng rng(options.seed ^ io::fnv1a("gas" + m.name()));
    run.check(m.name() + " beta=0 exactness", [&] {
      // Chains start from a clustered configuration; after 200 sweeps each
      // coordinate should be uniform.
      const int chains = 250, n = 4;
      const Point anchor = m.sample_uniform(rng);
      std::vector<Point> cluster;
      for (int i = 0; i < n; ++i) cluster.push_back(m.propose_move(anchor, 0.01, rng));
      std::vector<double> samples;
      std::size_t proposed = 0, accepted = 0;
      for (int c = 0; c < chains; ++c) {
        GibbsChain chain(sm, GibbsParams{0.0, 0.1, std::nullopt}, cluster, rng.split(static_cast<std::uint64_t>(c)));
        chain.run(200);
        proposed += chain.stats().proposed;
        accepted += chain.stats().accepted;
        for (const Point& p : chain.points()) samples.push_back(m.is_torus() ? p[0] : 0.5 * (p[2] + 1.0));
      }
      const stats::KsResult ks = stats::ks_uniform(samples);
      const bool ok = accepted == proposed && ks.p_value > 0.01;
      return Outcome{ok, strf("acceptance %zu/%zu, KS D = %.4f, p = %.3f > 0.01", accepted, proposed, ks.statistic,
                              ks.p_value)};
    });
    run.check(m.name() + " incremental energy", [&] {
      GibbsParams params{4.0, 0.1, std::nullopt};
      if (m.is_torus()) params.potential = Potential::torus_cosine(0.05);
      else params.potential = Potential::sphere_zonal(0.05);
      GibbsChain chain(sm, params, random_configuration(m, 6, rng), rng.split(99));
      return at_most(chain.incremental_energy_check(100), 1e-10, "max |running H - recomputed H|");
    });
  }

  run.check("torus2 n=2 beta=8 total variation", [&] {
    const Manifold m(ManifoldKind::Torus2);
    const SpectralModel sm = model_for(m, options);
    const double beta = 8.0, max_distance = std::sqrt(0.5);
    const int bins = 20;
    Rng rng(options.seed ^ io::fnv1a("tv"));
    GibbsChain chain(sm, GibbsParams{beta, 0.1, std::nullopt}, random_configuration(m, 2, rng), rng.split(1));
    chain.burn_in(2000);
    std::vector<double> hist(bins, 0.0);
    const int sweeps = 100000;
    for (int s = 0; s < sweeps; ++s) {
      chain.sweep(false);
      const double r = m.distance(chain.points()[0], chain.points()[1]);
      hist[std::min(bins - 1, static_cast<int>(r / max_distance * bins))] += 1.0;
    }
    const auto oracle = pair_distance_oracle(sm, beta, 256, bins, max_distance);
    const auto flat = pair_distance_oracle(sm, 0.0, 256, bins, max_distance);
    const double tv = stats::total_variation(hist, oracle);
    return Outcome{tv < 0.03, strf("TV(chain, oracle) = %.4f < 0.03 (oracle vs uniform: %.4f, acceptance %.2f)", tv,
                                   stats::total_variation(oracle, flat), chain.stats().acceptance_rate())};
  });

  run.check("constant potential shift", [&] {
    const Manifold m(ManifoldKind::Sphere2);
    const SpectralModel sm = model_for(m, options);
    Rng rng(options.seed);
    const auto points = random_configuration(m, 7, rng);
    const Potential c = Potential::constant(0.75);
    const double diff = hamiltonian(sm, points, &c) - hamiltonian(sm, points);
    return at_most(std::abs(diff - 0.75), 1e-12, "|H_V - H - c|");
  });
}

// -------------------------------------------------------------- partition

inline void partition_suite(Report& report, const SuiteOptions& options) {
  Runner run("partition", report, options.on_check);
  const Manifold m(ManifoldKind::Torus2);
  const SpectralModel sm = model_for(m, options);
  for (double beta : {2.0, 4.0, 8.0}) {
    run.check(strf("torus2 n=2 beta=%g", beta), [&] {
      const PartitionCheck p = partition_lower_bound_check(sm, 2, beta, 24);
      return Outcome{p.satisfied() && p.z >= 1.0, strf("Z_2 = %.6f >= %.6f", p.z, p.lower_bound)};
    });
  }
  run.check("torus2 n=2 beta=0", [&] {
    const PartitionCheck p = partition_lower_bound_check(sm, 2, 0.0, 24);
    return at_most(std::abs(p.z - 1.0), 1e-12, "|Z_2(0) - 1|");
  });
  run.check("torus2 n=2 beta=4 with potential", [&] {
    const Potential v = Potential::torus_cosine(1.0 / (8.0 * kPi * kPi));
    const PartitionCheck p = partition_lower_bound_check(sm, 2, 4.0, 24, &v);
    return at_least(p.z, p.lower_bound, "Z_2");
  });
}

// ------------------------------------------------------------ equilibrium

inline void equilibrium_suite(Report& report, const SuiteOptions& options) {
  Runner run("equilibrium", report, options.on_check);
  const Manifold m(ManifoldKind::Torus2);
  const SpectralModel sm = model_for(m, options);
  const Potential v = Potential::torus_cosine(1.0 / (8.0 * kPi * kPi));
  const QuadratureGrid grid = build_grid(m, 32);
  const EquilibriumMeasure eq = equilibrium_measure(sm, &v, grid);

  run.check("closed-form density", [&] {
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
      worst = std::max(worst, std::abs(eq.density[k] - (1.0 - 0.5 * std::cos(2.0 * kPi * grid.nodes[k][0]))));
    return at_most(worst, 1e-12, "sup |rho - (1 - cos(2 pi x1)/2)|");
  });
  run.check("projected-gradient oracle", [&] {
    Rng rng(options.seed ^ io::fnv1a("pgd"));
    const MinimizationOracle o = equilibrium_minimization_oracle(sm, v, 32, eq.density, rng);
    return at_most(o.sup_error, 1e-3, strf("sup |rho_pgd - rho_eq| (%d iterations)", o.iterations));
  });
  run.check("Euler-Lagrange residual", [&] {
    Rng rng(options.seed ^ io::fnv1a("el"));
    std::vector<Point> nodes;
    for (int k = 0; k < 8; ++k) nodes.push_back(m.sample_uniform(rng));
    const QuadratureGrid fine = build_grid(m, 64);
    return at_most(euler_lagrange_residual(sm, v, fine, nodes), 1e-4, "spread of int G rho + V");
  });
  run.check("relative entropy", [&] {
    double reference = 0.0;
    for (int k = 0; k < 256; ++k) {
      const double rho = 1.0 - 0.5 * std::cos(2.0 * kPi * (k + 0.5) / 256.0);
      reference += rho * std::log(rho) / 256.0;
    }
    return at_most(std::abs(eq.entropy - reference), 1e-6, strf("|D - D_1d| (D = %.10f)", eq.entropy));
  });
}

// ---------------------------------------------------------- concentration

inline void concentration_suite(Report& report, const SuiteOptions& options,
                                const std::optional<std::filesystem::path>& output_dir = {}) {
  Runner run("concentration", report, options.on_check);
  run.check("torus2_small non-falsification", [&] {
    namespace fs = std::filesystem;
    const fs::path dir = output_dir ? *output_dir : fs::temp_directory_path() / ("coulomb_verify_" + io::hex64(options.seed));
    ExperimentOptions eo;
    eo.jobs = options.jobs;
    const ExperimentResult r = run_experiment(torus2_small_config(), dir, eo);
    std::size_t informative = 0;
    for (const auto& row : r.rows)
      if (row.tail.p_hat > 0.0 && row.tail.p_hat < 1.0) ++informative;
    const bool ok = r.violations == 0 && r.trend_monotone;
    return Outcome{ok, strf("%zu rows, %zu CI upper ends above the bound (C = %.3f), %zu informative rates, trend %s, "
                            "%zu R-hat flags",
                            r.rows.size(), r.violations, r.fitted_c, informative,
                            r.trend_monotone ? "monotone" : "NOT monotone", r.flagged_mixing)};
  });
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"spectral", "green",       "regularize",   "transport",
                                              "sampler",  "partition", "equilibrium", "concentration"};
  return names;
}

// Runs a named suite; "spectral" also covers the Green-function checks and
// "all" runs everything.
inline Report run_suite(const std::string& name, const SuiteOptions& options) {
  Report report;
  const auto one = [&](const std::string& s) {
    if (s == "spectral") spectral_suite(report, options);
    else if (s == "green") green_suite(report, options);
    else if (s == "regularize") regularize_suite(report, options);
    else if (s == "transport") transport_suite(report, options);
    else if (s == "sampler") sampler_suite(report, options);
    else if (s == "partition") partition_suite(report, options);
    else if (s == "equilibrium") equilibrium_suite(report, options);
    else if (s == "concentration") concentration_suite(report, options);
    else throw std::invalid_argument("unknown suite '" + s + "'");
  };
  if (name == "all") {
    for (const auto& s : suite_names()) one(s);
  } else if (name == "spectral") {
    one("spectral");
    one("green");
  } else {
    one(name);
  }
  return report;
}

}  // namespace coulomb::verify

#endif  // COULOMB_VERIFY_HPP
