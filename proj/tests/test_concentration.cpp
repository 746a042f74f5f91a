#include <gtest/gtest.h>

#include <atomic>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "coulomb/concentration.hpp"
#include "test_util.hpp"

using namespace coulomb;
using coulomb::test::torus2;

namespace {

const SpectralModel& t2() {
  static const SpectralModel sm{Manifold(ManifoldKind::Torus2)};
  return sm;
}

// int_0^1 (1 + g cos 2 pi x) log(1 + g cos 2 pi x) dx.
double cosine_entropy(double g) {
  auto f = [g](double x) {
    const double rho = 1.0 + g * std::cos(2.0 * kPi * x);
    return rho * std::log(rho);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14);
}

}  // namespace

TEST(Theorem1Bound, ZeroRadiusIsTrivial) {
  for (int n : {2, 16, 64})
    for (double beta : {0.0, 1.0, 256.0}) EXPECT_GE(theorem1_bound(n, beta, 0.0, 2, 0.0), 1.0);
}

TEST(Theorem1Bound, WorkedExampleTwoDimensions) {
  // -256/16 + (256/(8 pi)) log(16)/16 + 256/16 = 2 log(16)/pi.
  const double exponent = 256.0 / (8.0 * kPi) * std::log(16.0) / 16.0;
  EXPECT_NEAR(exponent, 1.7651, 5e-5);
  EXPECT_NEAR(theorem1_bound(16, 256.0, 0.5, 2, 1.0), std::exp(exponent), 1e-12);
  EXPECT_NEAR(theorem1_bound(16, 256.0, 0.5, 2, 1.0), 5.842, 1e-3);
}

TEST(Theorem1Bound, ThreeDimensionsVacuousExample) {
  const double b = theorem1_bound(27, 729.0, 0.4, 3, 1.0);
  EXPECT_NEAR(std::log(b), -29.16 + 81.0, 1e-10);
  EXPECT_GT(b, 1.0);
}

TEST(Theorem1Bound, RejectsBadArguments) {
  EXPECT_THROW(theorem1_bound(1, 1.0, 0.1, 2, 1.0), std::invalid_argument);
  EXPECT_THROW(theorem1_bound(4, -1.0, 0.1, 2, 1.0), std::invalid_argument);
  EXPECT_THROW(theorem1_bound(4, 1.0, -0.1, 2, 1.0), std::invalid_argument);
  EXPECT_THROW(theorem1_bound(4, 1.0, 0.1, 1, 1.0), std::invalid_argument);
}

TEST(Theorem2Bound, ReducesToTheorem1AndScalesWithN) {
  EXPECT_DOUBLE_EQ(theorem2_bound(16, 256.0, 0.3, 2, 0.0, 2.0), theorem1_bound(16, 256.0, 0.3, 2, 2.0));
  const double d = 0.01;
  for (int n : {8, 16, 32}) {
    const double ratio = theorem2_bound(n, 100.0, 0.3, 2, d, 2.0) / theorem1_bound(n, 100.0, 0.3, 2, 2.0);
    EXPECT_NEAR(std::log(ratio), n * d, 1e-12);
  }
  EXPECT_THROW(theorem2_bound(16, 1.0, 0.1, 2, -0.1, 1.0), std::invalid_argument);
}

TEST(GeneralBound, AssemblyDominatedByTheorem1) {
  for (double ca : {0.0, 0.5, 2.0})
    for (double cb : {0.5, 1.5, 3.0})
      for (int n : {8, 32}) {
        const double beta = static_cast<double>(n) * n;
        const BoundParameters bp = theorem1_parameters(n, beta, 2, ca, cb);
        for (double r : {0.1, 0.4}) {
          EXPECT_LE(general_bound_exponent(bp, r), theorem1_log_bound(n, beta, r, 2, bp.fitted_c) + 1e-12);
          EXPECT_NEAR(general_bound_assembly(bp, r), std::exp(general_bound_exponent(bp, r)), 1e-12);
        }
      }
}

TEST(GeneralBound, EntropyAndEnergyGapTerms) {
  BoundParameters bp;
  bp.n = 10;
  bp.beta = 50.0;
  bp.entropy = 0.02;
  bp.e_n = 0.3;
  bp.e = 0.1;
  EXPECT_NEAR(general_bound_exponent(bp, 0.2), -50.0 * 0.01 + 0.2 + 10.0, 1e-12);
  bp.entropy = -1.0;
  EXPECT_THROW(general_bound_exponent(bp, 0.2), std::invalid_argument);
}

TEST(EquilibriumMeasure, ZeroPotentialIsUniform) {
  const QuadratureGrid grid = build_grid(t2().manifold(), 16);
  const EquilibriumMeasure eq = equilibrium_measure(t2(), nullptr, grid);
  for (double rho : eq.density) EXPECT_EQ(rho, 1.0);
  EXPECT_EQ(eq.entropy, 0.0);
}

TEST(EquilibriumMeasure, CosinePotentialClosedForm) {
  const double eps = 1.0 / (8.0 * kPi * kPi);
  const Potential v = Potential::torus_cosine(eps);
  const QuadratureGrid grid = build_grid(t2().manifold(), 64);
  const EquilibriumMeasure eq = equilibrium_measure(t2(), &v, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    EXPECT_NEAR(eq.density[k], 1.0 - 0.5 * std::cos(2.0 * kPi * grid.nodes[k][0]), 1e-14);
  EXPECT_NEAR(eq.entropy, cosine_entropy(0.5), 1e-12);
}

TEST(EquilibriumMeasure, SmallAmplitudeEntropySecondOrder) {
  const double eps = 0.01, g = kFourPiSq * eps;
  EXPECT_NEAR(g, 0.3948, 1e-4);
  const QuadratureGrid grid = build_grid(t2().manifold(), 256);
  const Potential v = Potential::torus_cosine(eps);
  const EquilibriumMeasure eq = equilibrium_measure(t2(), &v, grid);
  EXPECT_NEAR(eq.entropy, cosine_entropy(g), 1e-12);
  EXPECT_NEAR(eq.entropy / (g * g / 4.0), 1.0, 0.05);
}

TEST(EquilibriumMeasure, TooStrongPotentialThrows) {
  const Potential v = Potential::torus_cosine(0.05);  // 1 + Laplacian V dips to 1 - 1.97
  const QuadratureGrid grid = build_grid(t2().manifold(), 16);
  EXPECT_THROW(equilibrium_measure(t2(), &v, grid), std::invalid_argument);
}

TEST(EquilibriumMeasure, EulerLagrangeResidualSmall) {
  const Potential v = Potential::torus_cosine(1.0 / (8.0 * kPi * kPi));
  std::vector<Point> nodes;
  for (int k = 0; k < 9; ++k) nodes.push_back(torus2(k / 9.0, 0.37 * k));
  EXPECT_LT(euler_lagrange_residual(t2(), v, build_grid(t2().manifold(), 48), nodes), 1e-6);
}

TEST(EquilibriumMeasure, MinimizationOracleAgrees) {
  const Potential v = Potential::torus_cosine(1.0 / (8.0 * kPi * kPi));
  const int res = 16;
  const QuadratureGrid grid = build_grid(t2().manifold(), res);
  const EquilibriumMeasure eq = equilibrium_measure(t2(), &v, grid);
  Rng rng(4);
  const MinimizationOracle o = equilibrium_minimization_oracle(t2(), v, res, eq.density, rng, 3);
  EXPECT_LT(o.sup_error, 1e-3);
  EXPECT_LT(o.worst_disagreement, 1e-3);
}

TEST(PartitionFunction, BetaZeroIsOne) {
  const PartitionCheck p = partition_lower_bound_check(t2(), 2, 0.0, 16);
  EXPECT_NEAR(p.z, 1.0, 1e-12);
  EXPECT_TRUE(p.satisfied());
}

TEST(PartitionFunction, LowerBoundHolds) {
  for (double beta : {2.0, 8.0}) {
    const PartitionCheck p = partition_lower_bound_check(t2(), 2, beta, 16);
    EXPECT_TRUE(p.satisfied()) << "beta=" << beta << " z=" << p.z << " bound=" << p.lower_bound;
    EXPECT_GT(p.z, 1.0);  // e_n = 0 for the uniform equilibrium, and int G = 0 makes Z >= 1 by Jensen
  }
  EXPECT_THROW(partition_lower_bound_check(t2(), 4, 1.0, 8), std::invalid_argument);
}

TEST(EstimateTail, BetaZeroSmallTailAndImpossibleRadius) {
  const QuadratureGrid grid = build_grid(t2().manifold(), 16);
  const EquilibriumMeasure eq = equilibrium_measure(t2(), nullptr, grid);
  GibbsParams params;
  params.beta = 0.0;
  TailOptions opt;
  opt.chains = 60;
  opt.sweeps = 5;
  opt.burn_in = 0;
  const double diam = t2().manifold().diameter();
  const TailEstimate est = estimate_tail(t2(), params, 16, {0.4, 2.0 * diam}, eq, Rng(12), opt);
  ASSERT_EQ(est.rows.size(), 2u);
  EXPECT_LT(est.rows[0].p_hat, 0.05);
  EXPECT_EQ(est.rows[1].exceed_upper, 0u);
  EXPECT_EQ(est.rows[1].exceed_lower, 0u);
  EXPECT_EQ(est.accepted, est.proposed);
  EXPECT_EQ(est.mesh, grid.mesh);
}

TEST(EstimateTail, RejectsTooFewChains) {
  const QuadratureGrid grid = build_grid(t2().manifold(), 8);
  const EquilibriumMeasure eq = equilibrium_measure(t2(), nullptr, grid);
  TailOptions opt;
  opt.chains = 1;
  EXPECT_THROW(estimate_tail(t2(), {}, 4, {0.1}, eq, Rng(1), opt), std::invalid_argument);
}

TEST(Wilson, KnownIntervals) {
  const stats::Interval a = stats::wilson_interval(0, 10);
  EXPECT_EQ(a.lower, 0.0);
  EXPECT_NEAR(a.upper, 0.27753, 1e-5);
  const stats::Interval b = stats::wilson_interval(5, 10);
  EXPECT_NEAR(b.lower, 0.23659, 1e-5);
  EXPECT_NEAR(b.upper, 0.76341, 1e-5);
  EXPECT_EQ(stats::wilson_interval(10, 10).upper, 1.0);
  EXPECT_THROW(stats::wilson_interval(3, 0), std::invalid_argument);
  EXPECT_THROW(stats::wilson_interval(4, 3), std::invalid_argument);
}

TEST(Rates, EmpiricalRateAndTrend) {
  TailRow row;
  row.beta = 64.0;
  row.chains = 100;
  row.exceed_upper = 10;
  row.p_hat = 0.1;
  row.ci_upper = stats::wilson_interval(10, 100);
  EXPECT_NEAR(empirical_rate(row), std::log(10.0) / 64.0, 1e-15);
  TailRow none = row;
  none.exceed_upper = 0;
  none.p_hat = 0.0;
  none.ci_upper = stats::wilson_interval(0, 100);
  EXPECT_TRUE(std::isinf(empirical_rate(none)));
  TailRow all = row;
  all.exceed_upper = 100;
  all.p_hat = 1.0;
  all.ci_upper = stats::wilson_interval(100, 100);
  EXPECT_TRUE(std::isnan(empirical_rate(all)));

  // Larger n with a disjoint, smaller rate interval breaks the trend.
  EXPECT_FALSE(rate_trend_monotone({none}, {all}));
  EXPECT_TRUE(rate_trend_monotone({all}, {none}));
  TailRow other_r = all;
  other_r.r = 0.5;
  EXPECT_TRUE(rate_trend_monotone({none}, {other_r}));
  EXPECT_TRUE(rate_trend_monotone({row}, {row}));
}

TEST(ParallelFor, VisitsEachIndexAndPropagatesErrors) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(TheoremConstant, Formula) {
  EXPECT_DOUBLE_EQ(theorem_constant(0.0, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(theorem_constant(1.0, 3.0), 7.5);
  EXPECT_DOUBLE_EQ(theorem_constant(-2.0, -1.0), 0.0);
}
