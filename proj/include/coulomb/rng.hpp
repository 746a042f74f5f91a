#ifndef COULOMB_RNG_HPP
#define COULOMB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace coulomb {

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based generator: output i is mix64(key + (i+1) * golden). The state
// is (key, counter) so a stream can be split into independent children by
// deriving new keys. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept : key_(detail::mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Child stream `index`; does not advance this stream.
  [[nodiscard]] Rng split(std::uint64_t index) const noexcept {
    Rng child;
    child.key_ = detail::mix64(key_ ^ detail::mix64(index + 0x3c6ef372fe94f82bULL));
    child.counter_ = 0;
    return child;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

  // Full state, including the cached normal variate, for checkpoints.
  struct State {
    std::uint64_t key = 0;
    std::uint64_t counter = 0;
    double spare = 0.0;
    bool has_spare = false;
  };
  [[nodiscard]] State state() const noexcept { return {key_, counter_, spare_, has_spare_}; }
  static Rng from_state(const State& s) noexcept {
    Rng r;
    r.key_ = s.key;
    r.counter_ = s.counter;
    r.spare_ = s.spare;
    r.has_spare_ = s.has_spare;
    return r;
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace coulomb

#endif  // COULOMB_RNG_HPP
