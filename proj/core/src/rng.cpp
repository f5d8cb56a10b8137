#include "fedsentry/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedsentry {

std::uint64_t derive_seed(std::uint64_t base,
                          std::uint64_t tag0,
                          std::uint64_t tag1,
                          std::uint64_t tag2) noexcept {
  std::uint64_t s = base;
  for (std::uint64_t tag : {tag0, tag1, tag2}) {
    s ^= tag + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    std::uint64_t state = s;
    s = splitmix64_next(state);
  }
  return s;
}

Rng::Rng(std::uint64_t seed) noexcept {
  std::uint64_t state = seed;
  for (auto& word : state_) {
    word = splitmix64_next(state);
  }
}

static inline std::uint64_t rotl64(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

std::uint64_t Rng::next_u64() noexcept {
  // xoshiro256++ step.
  const std::uint64_t result = rotl64(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl64(state_[3], 45);
  return result;
}

double Rng::next_double() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t bound) noexcept {
  // Multiply-shift mapping; deterministic and bias is negligible for the
  // bounds used here (shuffles, client picks).
  return static_cast<std::uint64_t>(
      (static_cast<__uint128_t>(next_u64()) * bound) >> 64);
}

bool Rng::next_bernoulli(double p) noexcept {
  return next_double() < p;
}

double Rng::next_gaussian() noexcept {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - next_double();
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = radius * std::sin(angle);
  has_cached_gaussian_ = true;
  return radius * std::cos(angle);
}

double Rng::next_gaussian(double mean, double stddev) noexcept {
  return mean + stddev * next_gaussian();
}

double Rng::next_gamma(double shape) {
  if (!(shape > 0.0)) {
    throw std::invalid_argument("gamma shape must be positive");
  }
  if (shape < 1.0) {
    // Boost the shape and correct with a power of a uniform.
    const double u = 1.0 - next_double();
    return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = next_gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - next_double();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return d * v;
    }
  }
}

std::vector<double> Rng::next_dirichlet(std::size_t n, double concentration) {
  if (n == 0) {
    throw std::invalid_argument("dirichlet dimension must be positive");
  }
  if (!(concentration > 0.0)) {
    throw std::invalid_argument("dirichlet concentration must be positive");
  }
  std::vector<double> draws(n);
  double total = 0.0;
  for (auto& value : draws) {
    value = next_gamma(concentration);
    total += value;
  }
  if (total <= 0.0) {
    // All gammas underflowed (tiny concentration); fall back to one-hot.
    draws.assign(n, 0.0);
    draws[next_below(n)] = 1.0;
    return draws;
  }
  for (auto& value : draws) {
    value /= total;
  }
  return draws;
}

}  // namespace fedsentry
