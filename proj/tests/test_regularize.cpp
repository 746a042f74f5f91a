#include <gtest/gtest.h>

#include <complex>

#include <boost/math/special_functions/legendre.hpp>

#include "coulomb/regularize.hpp"
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

// sum_{k != 0} exp(-2 lambda_k t) cos(2 pi k.u) / lambda_k, |k_i| <= K.
double torus2_smoothed_green(double t, double u1, double u2, int K = 30) {
  double s = 0.0;
  for (int a = -K; a <= K; ++a)
    for (int b = -K; b <= K; ++b) {
      if (!a && !b) continue;
      const double lam = kFourPiSq * (a * a + b * b);
      s += std::exp(-2.0 * lam * t) * std::cos(2.0 * kPi * (a * u1 + b * u2)) / lam;
    }
  return s;
}

// (1/2) sum_{k != 0} |hat mu(k)|^2 / lambda_k with hat mu(k) = (1/n) sum_i e^{-lambda t} e^{-2 pi i k.x_i}.
double torus2_fourier_energy(double t, const std::vector<Point>& xs, int K = 30) {
  double s = 0.0;
  for (int a = -K; a <= K; ++a)
    for (int b = -K; b <= K; ++b) {
      if (!a && !b) continue;
      const double lam = kFourPiSq * (a * a + b * b);
      std::complex<double> c = 0.0;
      for (const Point& x : xs) c += std::polar(1.0, -2.0 * kPi * (a * x[0] + b * x[1]));
      c *= std::exp(-lam * t) / static_cast<double>(xs.size());
      s += std::norm(c) / lam;
    }
  return 0.5 * s;
}

}  // namespace

TEST(RegularizedGreen, TorusMatchesFourierSeries) {
  for (double t : {0.002, 0.01, 0.03, 0.2}) {
    for (auto [a, b] : {std::pair{0.1, 0.3}, {0.5, 0.5}, {0.0, 0.0}, {0.93, 0.02}}) {
      EXPECT_NEAR(t2().regularized_green(t, torus2(0, 0), torus2(a, b)).value, torus2_smoothed_green(t, a, b), 1e-11)
          << "t=" << t << " u=(" << a << "," << b << ")";
    }
  }
}

TEST(RegularizedGreen, SphereMatchesLegendreSeries) {
  const Point x = sphere(0, 0, 1);
  for (double t : {0.001, 0.01, 0.1}) {
    for (const Point& y : {sphere(0, 0, 1), sphere(0.2, 0.1, 0.7), sphere(0, 1, 0), sphere(0.1, 0, -1)}) {
      const double c = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
      double s = 0.0;
      for (int l = 1; l <= 400; ++l) {
        const double lam = 4.0 * kPi * l * (l + 1.0);
        s += (2.0 * l + 1.0) * std::exp(-2.0 * lam * t) * boost::math::legendre_p(l, c) / lam;
      }
      EXPECT_NEAR(s2().regularized_green(t, x, y).value, s, 1e-10) << "t=" << t;
    }
  }
}

TEST(RegularizedEnergy, SingleParticleIsHalfDiagonal) {
  const Point x = torus2(0.3, 0.8);
  for (double t : {0.001, 0.05}) {
    EXPECT_NEAR(regularized_energy(t2(), {x}, t), 0.5 * torus2_smoothed_green(t, 0, 0, 60), 1e-10);
  }
}

TEST(RegularizedEnergy, MatchesFourierOracle) {
  Rng rng(31);
  for (int n : {2, 5, 12}) {
    const auto xs = random_configuration(t2().manifold(), static_cast<std::size_t>(n), rng);
    for (double t : {0.003, 0.02}) EXPECT_NEAR(regularized_energy(t2(), xs, t), torus2_fourier_energy(t, xs), 1e-10);
  }
}

TEST(RegularizedEnergy, GridQuadratureOfSmoothedMeasure) {
  // H(R_t) = (1/2) int int G dR dR with R_t on a lattice; Fourier energy of
  // the lattice measure is exact up to aliasing of exp(-lambda t).
  const std::vector<Point> xs{torus2(0.1, 0.2), torus2(0.6, 0.7), torus2(0.35, 0.15)};
  const double t = 0.05;
  const QuadratureGrid grid = build_grid(t2().manifold(), 64);
  const RegularizedMeasure r = regularize(t2(), xs, t, grid);
  double s = 0.0;
  for (int a = -31; a <= 31; ++a)
    for (int b = -31; b <= 31; ++b) {
      if (!a && !b) continue;
      std::complex<double> c = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k)
        c += r.grid_measure->weights[k] * std::polar(1.0, -2.0 * kPi * (a * grid.nodes[k][0] + b * grid.nodes[k][1]));
      s += std::norm(c) / (kFourPiSq * (a * a + b * b));
    }
  EXPECT_NEAR(regularized_energy(t2(), xs, t), 0.5 * s, 1e-9);
}

TEST(RegularizedEnergy, PotentialNeedsGrid) {
  const Potential v = Potential::torus_cosine(0.01);
  EXPECT_THROW(regularized_energy(t2(), {torus2(0.1, 0.1)}, 0.01, &v), std::invalid_argument);
  // int V d mu^t = eps e^{-4 pi^2 t} cos(2 pi x1) for the single heat-smoothed mode.
  const QuadratureGrid grid = build_grid(t2().manifold(), 32);
  const double t = 0.01;
  const Point x = torus2(0.2, 0.4);
  const double with = regularized_energy(t2(), {x}, t, &v, &grid);
  const double without = regularized_energy(t2(), {x}, t);
  EXPECT_NEAR(with - without, 0.01 * std::exp(-kFourPiSq * t) * std::cos(2.0 * kPi * 0.2), 1e-12);
}

TEST(Regularize, LargeTimeIsUniform) {
  const QuadratureGrid grid = build_grid(s2().manifold(), 16);
  const RegularizedMeasure r = regularize(s2(), {sphere(0, 0, 1), sphere(1, 0, 0)}, 10.0, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_NEAR(r.grid_measure->weights[k], grid.weights[k], 1e-14);
  EXPECT_LT(r.mass_deviation, 1e-12);
}

TEST(Regularize, MassOfSingleKernel) {
  const QuadratureGrid grid = build_grid(t2().manifold(), 48);
  const RegularizedMeasure r = regularize(t2(), {torus2(0.37, 0.81)}, 0.005, grid);
  EXPECT_LT(r.mass_deviation, 1e-10);
}

TEST(Regularize, TooCoarseGridThrows) {
  const QuadratureGrid grid = build_grid(t2().manifold(), 8);
  EXPECT_THROW(regularize(t2(), {torus2(0.37, 0.81)}, 1e-4, grid), std::runtime_error);
  EXPECT_THROW(regularize(t2(), {torus2(0.37, 0.81)}, 0.0, grid), std::invalid_argument);
  EXPECT_THROW(regularize(t2(), {}, 0.1, grid), std::invalid_argument);
}

TEST(LogLogSlope, ExactPowerLaw) {
  const std::vector<double> x{0.001, 0.004, 0.016, 0.064};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::sqrt(v));
  EXPECT_NEAR(log_log_slope(x, y), 0.5, 1e-12);
  EXPECT_THROW(log_log_slope({1.0}, {1.0}), std::invalid_argument);
}

TEST(OffDiagonalMargin, NonNegativeOnAllManifolds) {
  for (ManifoldKind kind : {ManifoldKind::Torus2, ManifoldKind::Torus3, ManifoldKind::Sphere2}) {
    const SpectralModel sm{Manifold(kind)};
    Rng rng(2);
    // G - G_t = int_0^{2t} (p_s - 1) ds >= -2t; equality up to rounding for distant pairs.
    EXPECT_GE(offdiagonal_kernel_margin(sm, 200, {1e-3, 1e-2, 0.1}, rng), -1e-12);
  }
}

TEST(DiagonalProfile, DecreasingInT) {
  const std::vector<double> ts{1e-4, 1e-3, 1e-2, 0.1, 1.0};
  for (int t_index = 1; t_index < 5; ++t_index) {
    EXPECT_GT(t2().regularized_green(ts[t_index - 1], torus2(0.2, 0.2), torus2(0.2, 0.2)).value,
              t2().regularized_green(ts[t_index], torus2(0.2, 0.2), torus2(0.2, 0.2)).value);
  }
  // d/dt G_t(x, x) = -2 (p_{2t}(x, x) - 1), and p_s(x, x) = 1/(4 pi s) up to
  // exp(-1/(4 s)) at small s, so G_t(x, x) = -log(t)/(4 pi) + 2t + const.
  const double g1 = t2().regularized_green(1e-5, torus2(0, 0), torus2(0, 0)).value;
  const double g2 = t2().regularized_green(1e-4, torus2(0, 0), torus2(0, 0)).value;
  EXPECT_NEAR(g1 - g2, std::log(10.0) / (4.0 * kPi) - 2.0 * (1e-4 - 1e-5), 1e-11);
}
