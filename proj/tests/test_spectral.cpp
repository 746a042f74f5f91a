#include <gtest/gtest.h>

#include <boost/math/special_functions/legendre.hpp>

#include "coulomb/green_quadrature.hpp"
#include "coulomb/spectral.hpp"
#include "coulomb/transport.hpp"
#include "test_util.hpp"

using namespace coulomb;
using coulomb::test::sphere;
using coulomb::test::torus2;
using coulomb::test::torus3;

namespace {

const SpectralModel& t2() {
  static const SpectralModel sm{Manifold(ManifoldKind::Torus2)};
  return sm;
}
const SpectralModel& t3() {
  static const SpectralModel sm{Manifold(ManifoldKind::Torus3)};
  return sm;
}
const SpectralModel& s2() {
  static const SpectralModel sm{Manifold(ManifoldKind::Sphere2)};
  return sm;
}

double image_sum_oracle(double t, double u1, double u2) {
  double s = 0.0;
  for (int a = -12; a <= 12; ++a)
    for (int b = -12; b <= 12; ++b) {
      const double r2 = (u1 + a) * (u1 + a) + (u2 + b) * (u2 + b);
      s += std::exp(-r2 / (4.0 * t));
    }
  return s / (4.0 * kPi * t);
}

// sum_l (2l+1) w_l P_l(c) with the sphere eigenvalues 4 pi l(l+1).
template <class Weight>
double legendre_oracle(double c, int degree, Weight w) {
  double s = 0.0;
  for (int l = 1; l <= degree; ++l) s += (2.0 * l + 1.0) * w(4.0 * kPi * l * (l + 1.0)) * boost::math::legendre_p(l, c);
  return s;
}

}  // namespace

TEST(HeatKernel, TorusMatchesDirectImageSum) {
  for (double t : {1e-3, 0.01, 0.04, 0.1, 0.7}) {
    for (auto [a, b] : {std::pair{0.1, 0.3}, {0.5, 0.5}, {0.0, 0.0}, {0.9, 0.05}}) {
      const double expect = image_sum_oracle(t, a, b);
      EXPECT_NEAR(t2().heat_kernel(t, torus2(0, 0), torus2(a, b)).value, expect, 1e-12 * expect) << t;
    }
  }
}

TEST(HeatKernel, SphereMatchesLegendreSeries) {
  const Point x = sphere(0, 0, 1), y = sphere(0.3, 0.4, 0.5);
  const double c = y[2];
  for (double t : {0.02, 0.1, 0.5}) {
    const double expect = 1.0 + legendre_oracle(c, 200, [&](double lambda) { return std::exp(-lambda * t); });
    EXPECT_NEAR(s2().heat_kernel(t, x, y).value, expect, 1e-11) << t;
  }
}

TEST(HeatKernel, LargeTimeLimitAndSmallTimeDiagonal) {
  Rng rng(1);
  for (const SpectralModel* sm : {&t2(), &t3(), &s2()}) {
    const Manifold& m = sm->manifold();
    for (int k = 0; k < 50; ++k)
      EXPECT_NEAR(sm->heat_kernel(10.0, m.sample_uniform(rng), m.sample_uniform(rng)).value, 1.0, 1e-10);
  }
  const double t = 0.005;
  EXPECT_NEAR(t2().heat_kernel(t, torus2(0.2, 0.7), torus2(0.2, 0.7)).value, 1.0 / (4.0 * kPi * t),
              0.01 / (4.0 * kPi * t));
}

TEST(HeatKernel, MassOnResolution64Grid) {
  const QuadratureGrid g = build_grid(Manifold(ManifoldKind::Torus2), 64);
  for (double t : {0.01, 0.1, 1.0}) {
    double mass = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) mass += g.weights[k] * t2().heat_kernel(t, torus2(0.3, 0.8), g.nodes[k]).value;
    EXPECT_NEAR(mass, 1.0, 1e-8);
  }
}

TEST(HeatKernel, RejectsNonPositiveTime) {
  for (double t : {0.0, -1.0, std::nan("")}) {
    EXPECT_THROW((void)t2().heat_kernel(t, torus2(0, 0), torus2(0, 0)), std::invalid_argument);
    EXPECT_THROW((void)s2().regularized_green(t, sphere(0, 0, 1), sphere(0, 0, 1)), std::invalid_argument);
  }
  EXPECT_THROW((void)s2().heat_kernel_images(0.1, sphere(0, 0, 1), sphere(0, 0, 1)), std::invalid_argument);
}

TEST(Green, Torus2AgainstClosedFormLatticeDirection) {
  EXPECT_NEAR(t2().green(torus2(0, 0), torus2(0.1, 0.3)).value, test::torus2_green_oracle(0.1, 0.3), 1e-12);
  EXPECT_NEAR(t2().green(torus2(0.7, 0.2), torus2(0.05, 0.9)).value, test::torus2_green_oracle(0.65, -0.7), 1e-12);
  EXPECT_NEAR(t2().green(torus2(0.3, 0.3), torus2(0.3, 0.31)).value, test::torus2_green_oracle(0.0, 0.01), 1e-12);
}

TEST(Green, Torus2HalfHalfAgainstAlternatingLatticeSum) {
  // sum_{0 < |k|_inf <= K} (-1)^{k1+k2} / (4 pi^2 |k|^2), Richardson-checked.
  auto lattice = [](int k_max) {
    double s = 0.0;
    for (int a = -k_max; a <= k_max; ++a)
      for (int b = -k_max; b <= k_max; ++b)
        if (a || b) s += ((a + b) % 2 ? -1.0 : 1.0) / (kFourPiSq * (a * a + b * b));
    return s;
  };
  const double s200 = lattice(200), s400 = lattice(400);
  EXPECT_LT(std::abs(s400 - s200), 1e-5);
  const double g = t2().green(torus2(0, 0), torus2(0.5, 0.5)).value;
  EXPECT_NEAR(g, s400, 2e-6);
  EXPECT_NEAR(g, test::torus2_green_oracle(0.5, 0.5), 1e-12);
}

TEST(Green, SymmetricAndInfiniteOnDiagonal) {
  Rng rng(4);
  for (const SpectralModel* sm : {&t2(), &t3(), &s2()}) {
    const Manifold& m = sm->manifold();
    for (int k = 0; k < 1000; ++k) {
      const Point x = m.sample_uniform(rng), y = m.sample_uniform(rng);
      ASSERT_EQ(sm->green(x, y).value, sm->green(y, x).value);
    }
    const Point x = m.sample_uniform(rng);
    EXPECT_TRUE(std::isinf(sm->green(x, x).value));
  }
}

TEST(Green, SphereClosedFormAgainstLegendreSeries) {
  const Point x = sphere(0, 0, 1), y = sphere(std::sqrt(0.5), 0, std::sqrt(0.5));
  // Partial sums oscillate with amplitude O(1/L); average two cutoffs.
  const double a = legendre_oracle(y[2], 4000, [](double lambda) { return 1.0 / lambda; });
  const double b = legendre_oracle(y[2], 4001, [](double lambda) { return 1.0 / lambda; });
  EXPECT_NEAR(s2().green(x, y).value, 0.5 * (a + b), 1e-5);
}

TEST(RegularizedGreen, SphereAgainstLegendreSeries) {
  const Point x = sphere(0, 0, 1), y = sphere(0.2, -0.5, 0.1);
  for (double t : {1e-3, 0.01, 0.2}) {
    const double expect = legendre_oracle(y[2], 400, [&](double lambda) { return std::exp(-2.0 * t * lambda) / lambda; });
    EXPECT_NEAR(s2().regularized_green(t, x, y).value, expect, 1e-12) << t;
  }
}

TEST(RegularizedGreen, Torus3AgainstLatticeSum) {
  const Point x = torus3(0, 0, 0), y = torus3(0.2, 0.1, 0.4);
  const double t = 0.05;
  double s = 0.0;
  for (int a = -20; a <= 20; ++a)
    for (int b = -20; b <= 20; ++b)
      for (int c = -20; c <= 20; ++c) {
        if (!a && !b && !c) continue;
        const double lambda = kFourPiSq * (a * a + b * b + c * c);
        s += std::exp(-2.0 * t * lambda) * std::cos(2.0 * kPi * (0.2 * a + 0.1 * b + 0.4 * c)) / lambda;
      }
  EXPECT_NEAR(t3().regularized_green(t, x, y).value, s, 1e-13);
}

TEST(RegularizedGreen, LimitsInTime) {
  Rng rng(9);
  for (const SpectralModel* sm : {&t2(), &t3(), &s2()}) {
    const Manifold& m = sm->manifold();
    int done = 0;
    while (done < 100) {
      const Point x = m.sample_uniform(rng), y = m.sample_uniform(rng);
      if (m.distance(x, y) < 0.1) continue;
      ++done;
      const double g = sm->green(x, y).value;
      EXPECT_LE(std::abs(sm->regularized_green(1e-4, x, y).value - g), 2e-4 + 1e-12);
      EXPECT_LT(std::abs(sm->regularized_green(10.0, x, y).value), 1e-8);
    }
  }
}

TEST(RegularizedGreen, DoubleGridIntegralOfGreen) {
  // G_t(x,y) = int int G(z,w) p_t(x,z) p_t(y,w); lattice double sum with the
  // diagonal cells replaced by their cell-averaged Green function.
  const int n = 64;
  const double t = 0.05;
  const QuadratureGrid g = build_grid(Manifold(ManifoldKind::Torus2), n);
  const Point x = torus2(0.1, 0.2), y = torus2(0.55, 0.7);
  std::vector<double> a(g.size()), b(g.size()), table(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    a[k] = t2().heat_kernel(t, x, g.nodes[k]).value / g.size();
    b[k] = t2().heat_kernel(t, y, g.nodes[k]).value / g.size();
    table[k] = k ? test::torus2_green_oracle(g.nodes[k][0], g.nodes[k][1]) : 0.0;
  }
  // Cell average of G around 0 by a fine midpoint rule.
  double self = 0.0;
  const int sub = 200;
  for (int i = 0; i < sub; ++i)
    for (int j = 0; j < sub; ++j) {
      const double u = ((i + 0.5) / sub - 0.5) / n, v = ((j + 0.5) / sub - 0.5) / n;
      self += test::torus2_green_oracle(u, v) / (sub * sub);
    }
  table[0] = self;
  double s = 0.0;
  for (int z1 = 0; z1 < n; ++z1)
    for (int z2 = 0; z2 < n; ++z2) {
      const double az = a[z1 * n + z2];
      double inner = 0.0;
      for (int w1 = 0; w1 < n; ++w1) {
        const int d1 = ((z1 - w1) % n + n) % n;
        for (int w2 = 0; w2 < n; ++w2) inner += b[w1 * n + w2] * table[d1 * n + ((z2 - w2) % n + n) % n];
      }
      s += az * inner;
    }
  EXPECT_NEAR(t2().regularized_green(t, x, y).value, s, 1e-4);
}

TEST(GreenQuadrature, ZeroMeanAndWeakIdentity) {
  const Manifold m(ManifoldKind::Torus2);
  const QuadratureGrid g64 = build_grid(m, 64);
  const GreenQuadrature q64(t2(), g64);
  EXPECT_NEAR(q64.integrate(torus2(0.3, 0.6), [](const Point&) { return 1.0; }), 0.0, 1e-6);
  const auto fs = standard_test_functions(m);
  EXPECT_EQ(green_weak_identity_residual(t2(), fs[0], torus2(0.2, 0.2), g64), 0.0);

  // psi = int G f = f / (4 pi^2) for f = cos(2 pi y1).
  const QuadratureGrid g128 = build_grid(m, 128);
  const GreenQuadrature q128(t2(), g128);
  const Point x = torus2(0.37, 0.81);
  const double psi = q128.integrate(x, [](const Point& p) { return std::cos(2.0 * kPi * p[0]); });
  EXPECT_NEAR(psi, std::cos(2.0 * kPi * x[0]) / kFourPiSq, 1e-6);

  const Manifold s(ManifoldKind::Sphere2);
  const QuadratureGrid gs = build_grid(s, 32);
  for (const auto& f : standard_test_functions(s))
    EXPECT_LT(green_weak_identity_residual(s2(), f, sphere(0.1, 0.7, -0.2), gs), 1e-5) << f.name;
}

TEST(SpectralModel, TableValidation) {
  EXPECT_THROW((void)SpectralModel::from_table(Manifold(ManifoldKind::Torus2), {0.0, 1.0}), std::invalid_argument);
  const SpectralModel copy = SpectralModel::from_table(Manifold(ManifoldKind::Torus2),
                                                       std::vector<double>(t2().eigenvalues().begin(), t2().eigenvalues().end()));
  EXPECT_EQ(copy.heat_kernel(0.2, torus2(0, 0), torus2(0.3, 0.1)).value,
            t2().heat_kernel(0.2, torus2(0, 0), torus2(0.3, 0.1)).value);
}
