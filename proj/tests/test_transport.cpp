#include <gtest/gtest.h>

#include "coulomb/transport.hpp"
#include "test_util.hpp"

using namespace coulomb;
using coulomb::test::torus2;

namespace {

const Manifold kT2(ManifoldKind::Torus2);

const SpectralModel& t2() {
  static const SpectralModel sm{kT2};
  return sm;
}

DiscreteMeasure random_measure(const Manifold& m, std::size_t size, Rng& rng) {
  DiscreteMeasure mu;
  double total = 0.0;
  for (std::size_t k = 0; k < size; ++k) {
    mu.atoms.push_back(m.sample_uniform(rng));
    mu.weights.push_back(0.1 + rng.uniform());
    total += mu.weights.back();
  }
  for (double& w : mu.weights) w /= total;
  return mu;
}

DiscreteMeasure pair(double a, double b) { return DiscreteMeasure::empirical({torus2(a, 0), torus2(b, 0)}); }

}  // namespace

TEST(W1Exact, IdentityAndDiracs) {
  Rng rng(2);
  for (ManifoldKind kind : {ManifoldKind::Torus2, ManifoldKind::Torus3, ManifoldKind::Sphere2}) {
    const Manifold m(kind);
    const auto mu = random_measure(m, 30, rng);
    EXPECT_EQ(w1_exact(m, mu, mu).value, 0.0);
    const Point x = m.sample_uniform(rng), y = m.sample_uniform(rng);
    EXPECT_NEAR(w1_exact(m, DiscreteMeasure::empirical({x}), DiscreteMeasure::empirical({y})).value, m.distance(x, y),
                1e-15);
  }
}

TEST(W1Exact, TwoPointExamples) {
  EXPECT_NEAR(w1_exact(kT2, pair(0.0, 0.5), pair(0.25, 0.75)).value, 0.25, 1e-15);
  // Matchings cost (0.3 + 0.25)/2 and (0.25 + 0.2)/2; the second is optimal.
  const auto mu = pair(0.0, 0.5), nu = pair(0.3, 0.75);
  const W1Result w = w1_exact(kT2, mu, nu);
  EXPECT_NEAR(w.value, 0.225, 1e-15);
  const DualCertificate best = w1_dual_certificate(kT2, mu, nu, w.plan);
  EXPECT_LE(std::abs(best.gap), 1e-12);

  TransportPlan crossed;
  crossed.flows = {{0, 0, 0.5}, {1, 1, 0.5}};
  const DualCertificate c = w1_dual_certificate(kT2, mu, nu, crossed);
  EXPECT_NEAR(c.plan_cost, 0.275, 1e-15);
  EXPECT_NEAR(c.gap, 0.05, 1e-12);

  // Both matchings of the symmetric example cost 0.25: a tie, zero gap.
  TransportPlan tie;
  tie.flows = {{0, 1, 0.5}, {1, 0, 0.5}};
  EXPECT_NEAR(w1_dual_certificate(kT2, pair(0.0, 0.5), pair(0.25, 0.75), tie).gap, 0.0, 1e-15);
}

TEST(W1Exact, MetricAxiomsAndDualGap) {
  Rng rng(6);
  for (ManifoldKind kind : {ManifoldKind::Torus2, ManifoldKind::Torus3, ManifoldKind::Sphere2}) {
    const Manifold m(kind);
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = random_measure(m, 25, rng), b = random_measure(m, 18, rng), c = random_measure(m, 30, rng);
      const W1Result ab = w1_exact(m, a, b);
      EXPECT_NEAR(ab.value, w1_exact(m, b, a).value, 1e-12);
      EXPECT_LE(w1_exact(m, a, c).value, ab.value + w1_exact(m, b, c).value + 1e-12);
      const DualCertificate cert = w1_dual_certificate(m, a, b, ab.plan);
      EXPECT_LE(std::abs(cert.gap), 1e-9);
      EXPECT_LE(cert.lipschitz_violation, 1e-9);
      EXPECT_LE(cert.marginal_error, 1e-12);
    }
  }
}

TEST(W1Exact, RejectsBadInput) {
  DiscreteMeasure bad = pair(0.1, 0.2);
  bad.weights = {0.7, 0.7};
  EXPECT_THROW((void)w1_exact(kT2, bad, pair(0.1, 0.2)), std::invalid_argument);
  bad.weights = {-0.5, 1.5};
  EXPECT_THROW((void)w1_exact(kT2, bad, pair(0.1, 0.2)), std::invalid_argument);
  const DiscreteMeasure big = DiscreteMeasure::from_grid(build_grid(kT2, 72));
  EXPECT_THROW((void)w1_exact(kT2, big, pair(0.1, 0.2)), std::invalid_argument);
}

TEST(W1ToEquilibrium, DiracAgainstUniformGrid) {
  const QuadratureGrid g = build_grid(kT2, 64);
  double mean_distance = 0.0;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      const double a = std::min(i, 64 - i) / 64.0, b = std::min(j, 64 - j) / 64.0;
      mean_distance += std::hypot(a, b) / 4096.0;
    }
  const W1Estimate w = w1_to_equilibrium(kT2, DiscreteMeasure::empirical({torus2(0, 0)}), g);
  EXPECT_NEAR(w.value, mean_distance, 1e-12);
  EXPECT_NEAR(w.value, 0.3826, 0.001);
  EXPECT_NEAR(w.error_bound, std::sqrt(2.0) / 128.0, 1e-15);
  EXPECT_NEAR(w1_to_equilibrium(kT2, DiscreteMeasure::from_grid(g), g).value, 0.0, 1e-15);
}

TEST(W1Entropic, BracketContainsExact) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_measure(kT2, 100, rng), b = random_measure(kT2, 100, rng);
    const double exact = w1_exact(kT2, a, b).value;
    const EntropicBracket br = w1_entropic(kT2, a, b, 0.02);
    EXPECT_LE(br.lower, exact + 1e-12);
    EXPECT_GE(br.upper, exact - 1e-12);
  }
}

TEST(W1Entropic, SelfBracketAndRefinement) {
  Rng rng(13);
  const auto a = random_measure(kT2, 60, rng), b = random_measure(kT2, 60, rng);
  const EntropicBracket self = w1_entropic(kT2, a, a, 0.05);
  EXPECT_NEAR(self.lower, 0.0, 1e-9);
  EXPECT_LE(self.upper, 0.05 * std::log(60.0));
  double previous = std::numeric_limits<double>::infinity();
  for (double eps : {0.1, 0.03, 0.01}) {
    const EntropicBracket br = w1_entropic(kT2, a, b, eps);
    EXPECT_LT(br.upper - br.lower, previous);
    previous = br.upper - br.lower;
  }
  EXPECT_THROW((void)w1_entropic(kT2, a, b, 0.0), std::invalid_argument);
}

TEST(EnergyDistance, SingleModeClosedForm) {
  const QuadratureGrid g = build_grid(kT2, 64);
  std::vector<double> rho(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) rho[k] = 1.0 + 0.5 * std::cos(2.0 * kPi * g.nodes[k][0]);
  const DiscreteMeasure mu = DiscreteMeasure::from_grid(g, &rho), pi = DiscreteMeasure::from_grid(g);
  const double e = energy_distance_squared(t2(), mu, pi);
  EXPECT_NEAR(e, 1.0 / (32.0 * kPi * kPi), 0.02 / (32.0 * kPi * kPi));
  EXPECT_EQ(energy_distance_squared(t2(), mu, mu), 0.0);
  EXPECT_LE(w1_exact(kT2, mu, pi).value, 0.05627 * 1.02);
}

TEST(EnergyDistance, FourierAgreesWithDoubleSum) {
  const QuadratureGrid g = build_grid(kT2, 64);
  Rng rng(21);
  const auto ra = random_smooth_density(kT2, g, rng), rb = random_smooth_density(kT2, g, rng);
  const DiscreteMeasure mu = DiscreteMeasure::from_grid(g, &ra), nu = DiscreteMeasure::from_grid(g, &rb);
  const double fourier = energy_distance_squared(t2(), mu, nu, {EnergyPath::Fourier, true});
  const double direct = energy_distance_squared(t2(), mu, nu, {EnergyPath::DoubleSum, true});
  EXPECT_NEAR(fourier, direct, 1e-4);
  EXPECT_GT(fourier, 0.0);
}

TEST(EnergyDistance, DominatesW1OnSmoothPairs) {
  Rng rng(31);
  const DistanceEnergyReport r = verify_distance_energy_comparison(t2(), 10, 48, rng);
  EXPECT_LE(r.worst_ratio, 1.02);
  EXPECT_LE(r.worst_energy_excess, 1e-4);
}
