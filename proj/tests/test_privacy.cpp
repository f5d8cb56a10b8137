#include <doctest.h>

#include <fedsentry/param_vector.hpp>
#include <fedsentry/privacy.hpp>
#include <fedsentry/rng.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace fedsentry;

TEST_CASE("clip rescales onto the ball and leaves interior points alone") {
  ParamVector v = ParamVector::from_values({3.0, 4.0});
  ParamVector clipped = clip(v, 1.0);
  CHECK(clipped[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(clipped[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(clipped.l2_norm() == doctest::Approx(1.0).epsilon(1e-15));

  ParamVector inside = ParamVector::from_values({0.3, 0.4});
  CHECK(clip(inside, 1.0) == inside);

  ParamVector boundary = ParamVector::from_values({1.0, 0.0});
  CHECK(clip(boundary, 1.0) == boundary);

  CHECK_THROWS_AS(clip(v, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(clip(v, -1.0), std::invalid_argument);
}

TEST_CASE("clipping is idempotent and direction-preserving") {
  Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(1 + rng.next_below(8));
    for (double& x : raw) x = rng.next_gaussian(0.0, 5.0);
    ParamVector v = ParamVector::from_values(raw);
    ParamVector once = clip(v, 2.0);
    CHECK(once.l2_norm() <= 2.0 + 1e-12);
    // Re-clipping may rescale by one ulp when the clipped norm rounds
    // just above the bound, so compare coordinates, not bits.
    ParamVector twice = clip(once, 2.0);
    for (std::size_t i = 0; i < once.dim(); ++i)
      CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-12));
    if (v.l2_norm() > 1e-9) {
      double ratio0 = once[0] / v[0];
      for (std::size_t i = 0; i < v.dim(); ++i) {
        if (std::abs(v[i]) > 1e-9)
          CHECK(once[i] / v[i] == doctest::Approx(ratio0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("zero sigma returns the input bit for bit") {
  Rng rng(73);
  std::vector<double> raw(64);
  for (double& x : raw) x = rng.next_gaussian(0.0, 10.0);
  ParamVector v = ParamVector::from_values(raw);

  Rng noise(9);
  ParamVector out = perturb(v, 0.0, noise);
  CHECK(out == v);
  // The generator must be untouched.
  Rng fresh(9);
  CHECK(noise.next_u64() == fresh.next_u64());

  DpConfig cfg;
  cfg.enabled = true;
  cfg.sigma = 0.0;
  CHECK_FALSE(cfg.active());
  CHECK(perturb(v, cfg, 1234) == v);
}

TEST_CASE("noise has the configured spread") {
  const std::size_t dim = 1000;
  const int repeats = 1000;
  const double sigma = 1.5;
  ParamVector zeros(dim);
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(77, static_cast<std::uint64_t>(r)));
    ParamVector noisy = perturb(zeros, sigma, rng);
    for (std::size_t i = 0; i < dim; ++i) {
      sum += noisy[i];
      sum_sq += noisy[i] * noisy[i];
    }
  }
  const double n = static_cast<double>(dim) * repeats;
  double mean = sum / n;
  double sd = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(mean) < 4.0 * sigma / std::sqrt(n));
  CHECK(sd == doctest::Approx(sigma).epsilon(0.01));
}

TEST_CASE("seeded perturb replays exactly") {
  ParamVector v = ParamVector::from_values({1.0, -2.0, 3.0});
  DpConfig cfg;
  cfg.enabled = true;
  cfg.sigma = 0.5;
  ParamVector a = perturb(v, cfg, 99);
  ParamVector b = perturb(v, cfg, 99);
  ParamVector c = perturb(v, cfg, 100);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a != v);
}

TEST_CASE("privacy loss follows the gaussian mechanism bound") {
  DpConfig cfg;
  cfg.enabled = true;
  cfg.sigma = 4.8446;
  cfg.clip_norm = 1.0;
  cfg.delta = 1e-5;
  cfg.validate();
  CHECK(epsilon_per_round(cfg) ==
        doctest::Approx(1.0000423693608118).epsilon(1e-12));
  CHECK(epsilon_total(cfg, 10) ==
        doctest::Approx(10.000423693608118).epsilon(1e-12));

  DpConfig wide = cfg;
  wide.clip_norm = 2.0;
  CHECK(epsilon_per_round(wide) ==
        doctest::Approx(2.0000847387216236).epsilon(1e-12));

  // Halving sigma doubles the spend.
  DpConfig tight = cfg;
  tight.sigma = cfg.sigma / 2.0;
  CHECK(epsilon_per_round(tight) ==
        doctest::Approx(2.0 * epsilon_per_round(cfg)).epsilon(1e-12));

  DpConfig off;
  CHECK_THROWS_AS(epsilon_per_round(off), std::invalid_argument);
}

TEST_CASE("dp config validation rejects bad settings") {
  DpConfig cfg;
  cfg.enabled = true;
  cfg.sigma = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.sigma = 1.0;
  cfg.clip_norm = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.clip_norm = 1.0;
  cfg.delta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.delta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.delta = 1e-5;
  cfg.validate();
  CHECK(cfg.active());
}
