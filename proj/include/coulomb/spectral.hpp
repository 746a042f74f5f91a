#ifndef COULOMB_SPECTRAL_HPP
#define COULOMB_SPECTRAL_HPP

// Heat kernel p_t, Green function G and regularized Green function
// G_t = int_{2t}^inf (p_s - 1) ds on the model manifolds.
//
// Torus: p_t factorizes over coordinates into 1-D theta functions, each
// evaluated either by its Fourier series (large t) or its Gaussian image sum
// (small t). G and G_t use an Ewald split of the time integral at a fixed
// time T (0.01 in 2-D, 0.02 in 3-D): the image part is integrated in closed form (exponential
// integral in 2-D, erfc in 3-D) and the remainder is a fast Fourier series.
// Sphere: Legendre series with the degree cutoff raised until the tail bound
// is negligible; G has the closed form -(1 + 2 log(|x-y|/2)) / (4 pi) in
// terms of the unit-sphere chord.
//
// Eigenvalues come from a table (torus: 1-D values 4 pi^2 k^2, combined
// additively across coordinates; sphere: 4 pi l(l+1)). Degrees beyond the
// table use the analytic formula.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/expint.hpp>

#include "coulomb/manifold.hpp"

namespace coulomb {

struct KernelValue {
  double value = 0.0;
  // Rigorous bound on the omitted series tail.
  double truncation_bound = 0.0;

  [[nodiscard]] bool is_infinite() const { return std::isinf(value); }
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

class SpectralModel {
 public:
  static constexpr double kTailTarget = 1e-13;

  explicit SpectralModel(Manifold manifold, int eigen_cutoff = 0, double crossover_time = 0.0)
      : manifold_(manifold) {
    if (eigen_cutoff <= 0) eigen_cutoff = manifold.is_torus() ? 64 : 128;
    if (crossover_time <= 0.0) crossover_time = manifold.is_torus() ? 0.05 : 0.02;
    if (eigen_cutoff < 8) throw std::invalid_argument("SpectralModel: eigen_cutoff must be >= 8");
    crossover_ = crossover_time;
    eigenvalues_.resize(static_cast<std::size_t>(eigen_cutoff) + 1);
    for (int k = 0; k <= eigen_cutoff; ++k) eigenvalues_[k] = analytic_eigenvalue(k);
    rebuild_ewald_table();
  }

  // Model with an explicit eigenvalue table (e.g. loaded from disk).
  static SpectralModel from_table(Manifold manifold, std::vector<double> eigenvalues,
                                  double crossover_time = 0.0) {
    if (eigenvalues.size() < 9) throw std::invalid_argument("eigenvalue table too short");
    SpectralModel model(manifold, static_cast<int>(eigenvalues.size()) - 1, crossover_time);
    model.eigenvalues_ = std::move(eigenvalues);
    model.rebuild_ewald_table();
    return model;
  }

  [[nodiscard]] const Manifold& manifold() const { return manifold_; }
  [[nodiscard]] int eigen_cutoff() const { return static_cast<int>(eigenvalues_.size()) - 1; }
  [[nodiscard]] double crossover_time() const { return crossover_; }
  [[nodiscard]] std::span<const double> eigenvalues() const { return eigenvalues_; }

  // Torus: 1-D eigenvalue of frequency k. Sphere: eigenvalue of degree k.
  [[nodiscard]] double analytic_eigenvalue(int k) const {
    const double kd = k;
    return manifold_.is_torus() ? kFourPiSq * kd * kd : 4.0 * kPi * kd * (kd + 1.0);
  }

  [[nodiscard]] double eigenvalue(int k) const {
    return k <= eigen_cutoff() ? eigenvalues_[k] : analytic_eigenvalue(k);
  }

  // Smallest nonzero eigenvalue of the Laplacian.
  [[nodiscard]] double spectral_gap() const { return eigenvalue(1); }

  KernelValue heat_kernel(double t, const Point& x, const Point& y) const {
    check_time(t, "heat_kernel");
    if (manifold_.is_torus()) {
      return t >= crossover_ ? torus_heat(t, x, y, /*images=*/false)
                             : torus_heat(t, x, y, /*images=*/true);
    }
    return sphere_heat(t, cosine(x, y));
  }

  // Torus only: forced eigen-series / image-sum evaluation.
  KernelValue heat_kernel_eigen(double t, const Point& x, const Point& y) const {
    check_time(t, "heat_kernel_eigen");
    if (!manifold_.is_torus()) return sphere_heat(t, cosine(x, y));
    return torus_heat(t, x, y, false);
  }
  KernelValue heat_kernel_images(double t, const Point& x, const Point& y) const {
    check_time(t, "heat_kernel_images");
    if (!manifold_.is_torus()) throw std::invalid_argument("heat_kernel_images: torus only");
    return torus_heat(t, x, y, true);
  }

  // +infinity on the diagonal.
  KernelValue green(const Point& x, const Point& y) const {
    if (manifold_.is_torus()) return torus_time_integral(deltas(x, y), 0.0);
    const double chord = Manifold::unit_chord(x, y);
    if (chord == 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
    return {-(1.0 + 2.0 * std::log(0.5 * chord)) / (4.0 * kPi), 0.0};
  }

  KernelValue regularized_green(double t, const Point& x, const Point& y) const {
    check_time(t, "regularized_green");
    if (manifold_.is_torus()) return torus_time_integral(deltas(x, y), 2.0 * t);
    return sphere_regularized_green(t, cosine(x, y));
  }

  // Sphere Green function by its Legendre series truncated at `degree`
  // (reference evaluation; the closed form is used by green()).
  [[nodiscard]] double sphere_green_series(double c, int degree) const {
    double sum = 0.0, p_prev = 1.0, p = c;
    for (int l = 1; l <= degree; ++l) {
      sum += (2.0 * l + 1.0) * p / eigenvalue(l);
      const double next = ((2.0 * l + 1.0) * c * p - l * p_prev) / (l + 1.0);
      p_prev = p;
      p = next;
    }
    return sum;
  }

 private:
  static void check_time(double t, const char* what) {
    if (!(t > 0.0) || !std::isfinite(t))
      throw std::invalid_argument(std::string(what) + ": time must be positive and finite");
  }

  static double cosine(const Point& x, const Point& y) {
    const double c = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    return std::clamp(c, -1.0, 1.0);
  }

  // Absolute minimal-image coordinate differences; exact under swapping x, y.
  [[nodiscard]] std::array<double, 3> deltas(const Point& x, const Point& y) const {
    std::array<double, 3> u{};
    for (int i = 0; i < manifold_.dim(); ++i) u[i] = std::abs(torus_delta(x[i], y[i]));
    return u;
  }

  // Frequency count K with exp(-4 pi^2 K^2 s) below ~1e-18.
  static int frequencies_needed(double s) {
    return static_cast<int>(std::ceil(std::sqrt(42.0 / (kFourPiSq * s))));
  }

  // sum_{|k| > K} exp(-a k^2), a = 4 pi^2 s.
  static double gaussian_tail(double s, int k_max) {
    const double a = kFourPiSq * s;
    const double k1 = k_max + 1.0;
    return 2.0 * std::exp(-a * k1 * k1) / (1.0 - std::exp(-a * (2.0 * k1 + 1.0)));
  }

  // 1-D theta function value and bound by Fourier series or by images.
  [[nodiscard]] KernelValue theta(double t, double u, bool images) const {
    if (images) {
      const double norm = 1.0 / std::sqrt(4.0 * kPi * t);
      double sum = 0.0;
      for (int m = -2; m <= 2; ++m) {
        const double r = u + m;
        sum += std::exp(-r * r / (4.0 * t));
      }
      // Images |m| >= 3 sit at distance >= 2.5 for |u| <= 1/2.
      const double lead = std::exp(-6.25 / (4.0 * t));
      const double ratio = std::exp(-6.0 / (4.0 * t));
      return {norm * sum, norm * 2.0 * lead / (1.0 - ratio)};
    }
    const int k_max = std::min(eigen_cutoff(), frequencies_needed(t));
    const double w = 2.0 * kPi * u;
    const double c1 = std::cos(w);
    double c_prev = 1.0, c_k = c1, sum = 1.0;
    for (int k = 1; k <= k_max; ++k) {
      sum += 2.0 * std::exp(-eigenvalues_[k] * t) * c_k;
      const double next = 2.0 * c1 * c_k - c_prev;
      c_prev = c_k;
      c_k = next;
    }
    return {sum, gaussian_tail(t, k_max)};
  }

  [[nodiscard]] KernelValue torus_heat(double t, const Point& x, const Point& y, bool images) const {
    const auto u = deltas(x, y);
    double value = 1.0, upper = 1.0;
    for (int i = 0; i < manifold_.dim(); ++i) {
      const KernelValue f = theta(t, u[i], images);
      value *= f.value;
      upper *= std::abs(f.value) + f.truncation_bound;
    }
    return {value, std::max(0.0, upper - std::abs(value))};
  }

  // int_a^b (4 pi s)^{-d/2} exp(-r^2 / 4s) ds, with a >= 0.
  [[nodiscard]] double image_time_integral(double r, double a, double b) const {
    if (manifold_.dim() == 2) {
      if (r == 0.0) {
        if (a == 0.0) return std::numeric_limits<double>::infinity();
        return std::log(b / a) / (4.0 * kPi);
      }
      const double r2 = r * r;
      const double upper = boost::math::expint(1, r2 / (4.0 * b));
      const double lower = a > 0.0 ? boost::math::expint(1, r2 / (4.0 * a)) : 0.0;
      return (upper - lower) / (4.0 * kPi);
    }
    const double norm = std::pow(4.0 * kPi, -1.5);
    if (a > 0.0 && r < 1e-7 * std::sqrt(a)) return norm * 2.0 * (1.0 / std::sqrt(a) - 1.0 / std::sqrt(b));
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    const double upper = std::erfc(r / (2.0 * std::sqrt(b)));
    const double lower = a > 0.0 ? std::erfc(r / (2.0 * std::sqrt(a))) : 0.0;
    return (upper - lower) / (4.0 * kPi * r);
  }

  // Coefficients mult(k) exp(-lambda_k s) / lambda_k over the nonnegative
  // orthant |k|_inf <= K, k != 0, flattened with the last index fastest.
  static constexpr int kMaxSide = 40;

  struct FourierTable {
    int k_max = 0;
    double time = 0.0;
    std::vector<double> coeff;
    double tail = 0.0;
  };

  [[nodiscard]] FourierTable make_fourier_table(double s) const {
    FourierTable table;
    table.time = s;
    table.k_max = std::min(eigen_cutoff(), frequencies_needed(s));
    const int d = manifold_.dim();
    const int side = table.k_max + 1;
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(side);
    table.coeff.assign(count, 0.0);
    for (std::size_t idx = 1; idx < count; ++idx) {
      std::size_t rest = idx;
      double lambda = 0.0, mult = 1.0;
      for (int i = 0; i < d; ++i) {
        const int k = static_cast<int>(rest % side);
        rest /= side;
        lambda += eigenvalues_[k];
        if (k != 0) mult *= 2.0;
      }
      table.coeff[idx] = mult * std::exp(-lambda * s) / lambda;
    }
    // Omitted frequencies: some |k_i| > K, so lambda >= 4 pi^2 (K+1)^2.
    const double k1 = table.k_max + 1.0;
    const double full = 1.0 + std::sqrt(kPi / (kFourPiSq * s));
    table.tail = d * gaussian_tail(s, table.k_max) * std::pow(full, d - 1) / (kFourPiSq * k1 * k1);
    return table;
  }

  [[nodiscard]] double fourier_sum(const FourierTable& table, const std::array<double, 3>& u) const {
    const int d = manifold_.dim();
    const int side = table.k_max + 1;
    if (side > kMaxSide) throw std::logic_error("fourier_sum: table too large");
    std::array<std::array<double, kMaxSide>, 3> cosines{};
    for (int i = 0; i < d; ++i) {
      auto& c = cosines[i];
      c[0] = 1.0;
      const double c1 = std::cos(2.0 * kPi * u[i]);
      if (side > 1) c[1] = c1;
      for (int k = 2; k < side; ++k) c[k] = 2.0 * c1 * c[k - 1] - c[k - 2];
    }
    double sum = 0.0;
    if (d == 2) {
      for (int a = 0; a < side; ++a) {
        double row = 0.0;
        const double* coeff = table.coeff.data() + static_cast<std::size_t>(a) * side;
        for (int b = 0; b < side; ++b) row += coeff[b] * cosines[0][b];
        sum += row * cosines[1][a];
      }
      return sum;
    }
    for (int a = 0; a < side; ++a) {
      for (int b = 0; b < side; ++b) {
        double row = 0.0;
        const double* coeff = table.coeff.data() + (static_cast<std::size_t>(a) * side + b) * side;
        for (int c = 0; c < side; ++c) row += coeff[c] * cosines[0][c];
        sum += row * cosines[1][b] * cosines[2][a];
      }
    }
    return sum;
  }

  // int_{s0}^inf (p_s(u) - 1) ds on the torus, u in [0, 1/2]^d.
  [[nodiscard]] KernelValue torus_time_integral(const std::array<double, 3>& u, double s0) const {
    const int d = manifold_.dim();
    const double T = ewald_time();
    if (s0 >= T) {
      const FourierTable& table = fourier_table(s0);
      return {fourier_sum(table, u), table.tail};
    }
    // 2-D: offsets {-1, 0}; omitted images lie at distance >= 1.
    // 3-D: offsets {-1, 0, 1}; omitted images lie at distance >= 3/2.
    const int base = d == 2 ? 2 : 3;
    const int count = d == 2 ? 4 : 27;
    double images = 0.0;
    for (int code = 0; code < count; ++code) {
      int rest = code;
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) {
        const int shift = d == 2 ? -(rest % base) : rest % base - 1;
        rest /= base;
        const double shifted = u[i] + shift;
        r2 += shifted * shifted;
      }
      const double term = image_time_integral(std::sqrt(r2), s0, T);
      if (std::isinf(term)) return {std::numeric_limits<double>::infinity(), 0.0};
      images += term;
    }
    const double value = images - (T - s0) + fourier_sum(ewald_table_, u);
    return {value, image_tail_ + ewald_table_.tail};
  }

  [[nodiscard]] double ewald_time() const { return manifold_.dim() == 2 ? 0.01 : 0.02; }

  // Bound on the omitted images: each has integrand increasing on [0, T]
  // (r^2 >= 2 d T), so contributes at most T (4 pi T)^{-d/2} exp(-r^2/4T).
  [[nodiscard]] double omitted_image_bound() const {
    const int d = manifold_.dim();
    const double T = ewald_time();
    const double nearest = d == 2 ? 1.0 : 1.5;
    // Omitted per-coordinate distances are >= nearest + j/2, j = 0, 1, ...
    const double omitted = std::exp(-nearest * nearest / (4.0 * T)) / (1.0 - std::exp(-nearest / (4.0 * T)));
    const double all = (d == 2 ? 2.0 : 3.0) + omitted;
    return T * std::pow(4.0 * kPi * T, -0.5 * d) * d * omitted * std::pow(all, d - 1);
  }

  const FourierTable& fourier_table(double s) const {
    struct Cache {
      std::uint64_t owner = 0;
      double time = -1.0;
      FourierTable table;
    };
    thread_local Cache cache;
    if (cache.owner != id_ || cache.time != s) {
      cache.table = make_fourier_table(s);
      cache.owner = id_;
      cache.time = s;
    }
    return cache.table;
  }

  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
  }

  [[nodiscard]] KernelValue sphere_heat(double t, double c) const {
    const double rate = 4.0 * kPi * t;
    int degree = 1;
    // Tail bound exp(-rate L(L+1)) / rate holds once (2L+1)^2 > 2 / rate.
    while (true) {
      const double ld = degree;
      const bool monotone = (2.0 * ld + 1.0) * (2.0 * ld + 1.0) * rate > 2.0;
      if (monotone && std::exp(-rate * ld * (ld + 1.0)) / rate < kTailTarget) break;
      ++degree;
      if (degree > 200000) break;
    }
    double sum = 1.0, p_prev = 1.0, p = c;
    for (int l = 1; l <= degree; ++l) {
      sum += (2.0 * l + 1.0) * std::exp(-eigenvalue(l) * t) * p;
      const double next = ((2.0 * l + 1.0) * c * p - l * p_prev) / (l + 1.0);
      p_prev = p;
      p = next;
    }
    const double ld = degree;
    return {sum, std::exp(-rate * ld * (ld + 1.0)) / rate};
  }

  [[nodiscard]] KernelValue sphere_regularized_green(double t, double c) const {
    const double rate = 8.0 * kPi * t;
    int degree = 1;
    while (true) {
      const double ld = degree;
      const bool monotone = (2.0 * ld + 1.0) * (2.0 * ld + 1.0) * rate > 2.0;
      const double tail = std::exp(-rate * ld * (ld + 1.0)) / (rate * analytic_eigenvalue(degree + 1));
      if (monotone && tail < kTailTarget) break;
      ++degree;
      if (degree > 200000) break;
    }
    double sum = 0.0, p_prev = 1.0, p = c;
    for (int l = 1; l <= degree; ++l) {
      const double lambda = eigenvalue(l);
      sum += (2.0 * l + 1.0) * std::exp(-2.0 * t * lambda) * p / lambda;
      const double next = ((2.0 * l + 1.0) * c * p - l * p_prev) / (l + 1.0);
      p_prev = p;
      p = next;
    }
    const double ld = degree;
    return {sum, std::exp(-rate * ld * (ld + 1.0)) / (rate * analytic_eigenvalue(degree + 1))};
  }

  void rebuild_ewald_table() {
    id_ = next_id();
    if (manifold_.is_torus()) {
      ewald_table_ = make_fourier_table(ewald_time());
      image_tail_ = omitted_image_bound();
    }
  }

  Manifold manifold_;
  double crossover_ = 0.0;
  std::vector<double> eigenvalues_;
  FourierTable ewald_table_;
  double image_tail_ = 0.0;
  std::uint64_t id_ = 0;
};

}  // namespace coulomb

#endif  // COULOMB_SPECTRAL_HPP
