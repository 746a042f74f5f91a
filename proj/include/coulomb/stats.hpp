#ifndef COULOMB_STATS_HPP
#define COULOMB_STATS_HPP

// Small statistics helpers for the Monte Carlo checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace coulomb::stats {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_survival(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// One-sample KS test of `samples` against U[0, 1], with Stephens' small-sample
// correction in the asymptotic p-value.
inline KsResult ks_uniform(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("ks_uniform: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double u = std::clamp(samples[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  const double root = std::sqrt(n);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
};

// Wilson score interval for `successes` out of `trials` at two-sided `level`.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double level = 0.95) {
  if (trials == 0) throw std::invalid_argument("wilson_interval: zero trials");
  if (successes > trials) throw std::invalid_argument("wilson_interval: successes exceed trials");
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) ci.lower = 0.0;
  if (successes == trials) ci.upper = 1.0;
  return ci;
}

inline double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  if (x.size() < 2) throw std::invalid_argument("variance: need >= 2 samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// Gelman-Rubin potential scale reduction over equal-length chains.
inline double r_hat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("r_hat: need >= 2 chains");
  const std::size_t len = chains.front().size();
  if (len < 2) throw std::invalid_argument("r_hat: chains too short");
  for (const auto& c : chains)
    if (c.size() != len) throw std::invalid_argument("r_hat: chains differ in length");
  std::vector<double> means;
  double within = 0.0;
  for (const auto& c : chains) {
    means.push_back(mean(c));
    within += variance(c);
  }
  within /= static_cast<double>(chains.size());
  const double n = static_cast<double>(len);
  const double between = n * variance(means);
  if (within == 0.0) return between == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double pooled = (n - 1.0) / n * within + between / n;
  return std::sqrt(pooled / within);
}

// Total-variation distance between two histograms (each normalized here).
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size() || p.empty()) throw std::invalid_argument("total_variation: size mismatch");
  const double sp = std::accumulate(p.begin(), p.end(), 0.0), sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (!(sp > 0.0) || !(sq > 0.0)) throw std::invalid_argument("total_variation: empty histogram");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] / sp - q[i] / sq);
  return 0.5 * tv;
}

struct DriftResult {
  double first_mean = 0.0;
  double second_mean = 0.0;
  double standard_error = 0.0;  // of the difference, batch-means estimate
  bool stable = false;          // |difference| < 2 standard errors
};

// Split-half drift check on a trace. Standard errors use batch means
// (`batches` per half) to account for autocorrelation.
inline DriftResult split_half_drift(const std::vector<double>& trace, std::size_t batches = 10) {
  if (trace.size() < 4 * batches) throw std::invalid_argument("split_half_drift: trace too short");
  const std::size_t half = trace.size() / 2;
  auto batch_se = [&](std::size_t begin, double& m) {
    const std::size_t width = half / batches;
    std::vector<double> b;
    for (std::size_t k = 0; k < batches; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < width; ++i) s += trace[begin + k * width + i];
      b.push_back(s / static_cast<double>(width));
    }
    m = mean(b);
    return variance(b) / static_cast<double>(batches);
  };
  DriftResult r;
  const double v1 = batch_se(0, r.first_mean);
  const double v2 = batch_se(half, r.second_mean);
  r.standard_error = std::sqrt(v1 + v2);
  r.stable = std::abs(r.first_mean - r.second_mean) < 2.0 * r.standard_error;
  return r;
}

}  // namespace coulomb::stats

#endif  // COULOMB_STATS_HPP
