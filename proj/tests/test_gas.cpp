#include <gtest/gtest.h>

#include <set>

#include "coulomb/gas.hpp"
#include "test_util.hpp"

using namespace coulomb;
using coulomb::test::sphere;
using coulomb::test::torus2;

namespace {

const SpectralModel& t2() {
  static const SpectralModel sm{Manifold(ManifoldKind::Torus2)};
  return sm;
}
const SpectralModel& s2() {
  static const SpectralModel sm{Manifold(ManifoldKind::Sphere2)};
  return sm;
}

}  // namespace

TEST(Hamiltonian, TwoParticlesIsQuarterGreen) {
  const std::vector<Point> pts{torus2(0.1, 0.2), torus2(0.45, 0.9)};
  EXPECT_NEAR(hamiltonian(t2(), pts), test::torus2_green_oracle(0.35, 0.7) / 4.0, 1e-12);
}

TEST(Hamiltonian, ThreeParticlesPairSum) {
  const std::vector<Point> pts{torus2(0.1, 0.2), torus2(0.45, 0.9), torus2(0.8, 0.5)};
  const double expect = (test::torus2_green_oracle(0.35, 0.7) + test::torus2_green_oracle(0.7, 0.3) +
                         test::torus2_green_oracle(0.35, -0.4)) /
                        9.0;
  EXPECT_NEAR(hamiltonian(t2(), pts), expect, 1e-12);
}

TEST(Hamiltonian, CollisionIsInfinite) {
  const std::vector<Point> pts{torus2(0.3, 0.3), torus2(0.7, 0.1), torus2(0.3, 0.3)};
  EXPECT_TRUE(std::isinf(hamiltonian(t2(), pts)));
  const std::vector<Point> sp{sphere(0, 0, 1), sphere(0, 0, 1)};
  EXPECT_TRUE(std::isinf(hamiltonian(s2(), sp)));
}

TEST(Hamiltonian, NeedsTwoParticles) {
  EXPECT_THROW(hamiltonian(t2(), {torus2(0.1, 0.1)}), std::invalid_argument);
}

TEST(Hamiltonian, ConstantPotentialShiftsByConstant) {
  Rng rng(11);
  const auto pts = random_configuration(t2().manifold(), 7, rng);
  const Potential c = Potential::constant(2.5);
  EXPECT_NEAR(hamiltonian(t2(), pts, &c), hamiltonian(t2(), pts) + 2.5, 1e-12);
}

TEST(Hamiltonian, SphereAntipodalPair) {
  // Closed form on the unit-area sphere: G = -(1 + 2 log(chord/2))/(4 pi); chord 2 gives -1/(4 pi).
  const std::vector<Point> pts{sphere(0, 0, 1), sphere(0, 0, -1)};
  EXPECT_NEAR(hamiltonian(s2(), pts), -1.0 / (16.0 * kPi), 1e-14);
}

TEST(MeanFieldEnergy, TwoDiracsOffDiagonal) {
  DiscreteMeasure mu = DiscreteMeasure::empirical({torus2(0.0, 0.0), torus2(0.25, 0.5)});
  EXPECT_NEAR(mean_field_energy(t2(), mu, nullptr, true), test::torus2_green_oracle(0.25, 0.5) / 4.0, 1e-12);
  EXPECT_TRUE(std::isinf(mean_field_energy(t2(), mu)));
}

TEST(Potential, LaplaciansMatchFiniteDifferences) {
  Rng rng(3);
  std::vector<Point> tp, sp;
  for (int k = 0; k < 50; ++k) {
    tp.push_back(t2().manifold().sample_uniform(rng));
    sp.push_back(s2().manifold().sample_uniform(rng));
  }
  EXPECT_LT(potential_laplacian_residual(t2().manifold(), Potential::torus_cosine(0.3), tp), 1e-4);
  EXPECT_LT(potential_laplacian_residual(s2().manifold(), Potential::sphere_zonal(0.3), sp), 1e-3);
  EXPECT_EQ(potential_laplacian_residual(t2().manifold(), Potential::constant(4.0), tp), 0.0);
}

TEST(Potential, NamedRejectsWrongManifold) {
  EXPECT_THROW(Potential::named("zonal", 0.1, t2().manifold()), std::invalid_argument);
  EXPECT_THROW(Potential::named("cosine", 0.1, s2().manifold()), std::invalid_argument);
  EXPECT_THROW(Potential::named("quartic", 0.1, t2().manifold()), std::invalid_argument);
  EXPECT_EQ(Potential::named("cosine", 0.1, t2().manifold()).name, "cosine");
}

TEST(RandomConfiguration, DistinctPointsOnManifold) {
  Rng rng(5);
  const auto pts = random_configuration(s2().manifold(), 40, rng);
  ASSERT_EQ(pts.size(), 40u);
  std::set<std::array<double, 3>> seen;
  for (const Point& p : pts) {
    EXPECT_TRUE(s2().manifold().contains(p));
    seen.insert({p[0], p[1], p[2]});
  }
  EXPECT_EQ(seen.size(), 40u);
}

TEST(GibbsChain, BetaZeroAcceptsEverything) {
  Rng rng(8);
  GibbsParams params;
  params.beta = 0.0;
  params.step = 0.2;
  GibbsChain chain(t2(), params, random_configuration(t2().manifold(), 6, rng), rng.split(1));
  chain.run(50);
  EXPECT_EQ(chain.stats().accepted, chain.stats().proposed);
  EXPECT_EQ(chain.stats().proposed, 300u);
  EXPECT_EQ(chain.stats().sweeps, 50u);
}

TEST(GibbsChain, IncrementalEnergyMatchesRecomputation) {
  for (const SpectralModel* sm : {&t2(), &s2()}) {
    Rng rng(9);
    GibbsParams params;
    params.beta = 64.0;
    params.step = 0.15;
    params.potential = sm->manifold().is_torus() ? Potential::torus_cosine(0.01) : Potential::sphere_zonal(0.01);
    GibbsChain chain(*sm, params, random_configuration(sm->manifold(), 8, rng), rng.split(2));
    chain.run(20);
    EXPECT_LT(chain.incremental_energy_check(200), 1e-12);
    EXPECT_NEAR(chain.energy(), hamiltonian(*sm, chain.points(), &*params.potential), 1e-12);
  }
}

TEST(GibbsChain, NearCollisionStaysFinite) {
  GibbsParams params;
  params.beta = 16.0;
  params.step = 0.05;
  GibbsChain chain(t2(), params, {torus2(0.5, 0.5), torus2(0.5, 0.5 + 1e-9), torus2(0.1, 0.1)}, Rng(1));
  EXPECT_TRUE(std::isfinite(chain.energy()));
  chain.run(100);
  EXPECT_TRUE(std::isfinite(chain.energy()));
  EXPECT_NEAR(chain.energy(), hamiltonian(t2(), chain.points()), 1e-9);
}

TEST(GibbsChain, DeterministicForFixedSeed) {
  auto run = [] {
    Rng rng(77);
    GibbsParams params;
    params.beta = 36.0;
    GibbsChain chain(t2(), params, random_configuration(t2().manifold(), 6, rng), rng.split(3));
    chain.burn_in(30);
    chain.run(30);
    return chain.points();
  };
  EXPECT_EQ(run(), run());
}

TEST(GibbsChain, RejectsBadParameters) {
  const std::vector<Point> pts{torus2(0.1, 0.1), torus2(0.6, 0.2)};
  GibbsParams params;
  params.beta = -1.0;
  EXPECT_THROW(GibbsChain(t2(), params, pts, Rng(1)), std::invalid_argument);
  params.beta = 4.0;
  params.step = 0.0;
  EXPECT_THROW(GibbsChain(t2(), params, pts, Rng(1)), std::invalid_argument);
  params.step = 0.1;
  EXPECT_THROW(GibbsChain(t2(), params, {torus2(0.1, 0.1)}, Rng(1)), std::invalid_argument);
  EXPECT_THROW(GibbsChain(t2(), params, {torus2(0.1, 0.1), torus2(0.1, 0.1)}, Rng(1)), std::invalid_argument);
}

TEST(GibbsChain, BurnInTunesStepTowardTarget) {
  Rng rng(21);
  GibbsParams params;
  params.beta = 256.0;
  params.step = 0.5;
  GibbsChain chain(t2(), params, random_configuration(t2().manifold(), 16, rng), rng.split(4));
  chain.burn_in(300);
  const std::size_t p0 = chain.stats().proposed, a0 = chain.stats().accepted;
  chain.run(200);
  const double rate = static_cast<double>(chain.stats().accepted - a0) / static_cast<double>(chain.stats().proposed - p0);
  EXPECT_GT(rate, 0.15);
  EXPECT_LE(chain.step(), t2().manifold().diameter());
}
