#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fedsentry {

// Deterministic random number generation for the simulator.
//
// Standard-library distributions are implementation-defined, so seeded runs
// would not reproduce across toolchains. Everything random in this project
// goes through Rng (xoshiro256++ seeded via splitmix64) and the explicit
// transforms below, which are pinned by regression tests.

inline constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and up to three tags
// (stream kind, entity id, round). Distinct tag tuples give decorrelated
// streams, so clients can draw noise concurrently without coordination.
std::uint64_t derive_seed(std::uint64_t base,
                          std::uint64_t tag0,
                          std::uint64_t tag1 = 0,
                          std::uint64_t tag2 = 0) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;

  // Uniform in [0, 1) with 53 random bits.
  double next_double() noexcept;

  // Uniform in [0, bound); bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound) noexcept;

  bool next_bernoulli(double p) noexcept;

  // Box-Muller transform; the paired variate is cached.
  double next_gaussian() noexcept;
  double next_gaussian(double mean, double stddev) noexcept;

  // Marsaglia-Tsang; shape must be positive.
  double next_gamma(double shape);

  // Symmetric Dirichlet(concentration, ..., concentration) of length n.
  std::vector<double> next_dirichlet(std::size_t n, double concentration);

  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_[4];
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

}  // namespace fedsentry
