#include <doctest.h>

#include <fedsentry/rng.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

using namespace fedsentry;

TEST_CASE("splitmix64 matches the reference sequence") {
  std::uint64_t state = 0;
  CHECK(splitmix64_next(state) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64_next(state) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("generator output is pinned for seed 42") {
  Rng rng(42);
  CHECK(rng.next_u64() == 15021278609987233951ULL);
  CHECK(rng.next_u64() == 5881210131331364753ULL);
  CHECK(rng.next_u64() == 18149643915985481100ULL);
  CHECK(rng.next_u64() == 12933668939759105464ULL);

  Rng doubles(42);
  CHECK(doubles.next_double() == doctest::Approx(0.81430514512290986).epsilon(1e-15));
  CHECK(doubles.next_double() == doctest::Approx(0.31882104006166112).epsilon(1e-15));
  CHECK(doubles.next_double() == doctest::Approx(0.98389416817748876).epsilon(1e-15));
}

TEST_CASE("same seed replays, different seeds diverge") {
  Rng a(123), b(123), c(124);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) {
    std::uint64_t va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_diff = any_diff || (va != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("derive_seed is pinned and tag-sensitive") {
  CHECK(derive_seed(42, 1) == 18376695904243760247ULL);
  CHECK(derive_seed(42, 1, 2, 3) == 1622863778541085735ULL);
  CHECK(derive_seed(42, 1, 2, 4) == 7462469262979134573ULL);

  CHECK(derive_seed(42, 1) != derive_seed(42, 2));
  CHECK(derive_seed(42, 1, 0, 0) != derive_seed(42, 0, 1, 0));
  CHECK(derive_seed(42, 0, 0, 1) != derive_seed(42, 0, 1, 0));
  CHECK(derive_seed(1, 7, 8, 9) != derive_seed(2, 7, 8, 9));
}

TEST_CASE("next_double stays in the unit interval") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("next_below is unbiased over a small range") {
  Rng rng(11);
  std::array<int, 5> counts{};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[rng.next_below(5)]++;
  for (int c : counts) {
    CHECK(c > draws / 5 - 1500);
    CHECK(c < draws / 5 + 1500);
  }
}

TEST_CASE("bernoulli respects the probability") {
  Rng rng(13);
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += rng.next_bernoulli(0.3) ? 1 : 0;
  CHECK(hits > 28500);
  CHECK(hits < 31500);

  Rng degenerate(5);
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(degenerate.next_bernoulli(0.0));
    CHECK(degenerate.next_bernoulli(1.0));
  }
}

TEST_CASE("gaussian draws have the requested moments") {
  Rng rng(17);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.next_gaussian(2.0, 3.0);
    sum += x;
    sum_sq += x * x;
  }
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  CHECK(mean == doctest::Approx(2.0).epsilon(0.02));
  CHECK(std::sqrt(var) == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("gamma draws match the shape mean") {
  Rng rng(19);
  const int n = 100000;
  for (double shape : {0.5, 2.0, 9.0}) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.next_gamma(shape);
    CHECK(sum / n == doctest::Approx(shape).epsilon(0.03));
  }
}

TEST_CASE("dirichlet draws form a distribution") {
  Rng rng(23);
  for (double conc : {0.1, 1.0, 100.0}) {
    std::vector<double> p = rng.next_dirichlet(6, conc);
    REQUIRE(p.size() == 6);
    double total = std::accumulate(p.begin(), p.end(), 0.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : p) CHECK(v >= 0.0);
  }

  // Large concentration pins shares near uniform.
  Rng tight(29);
  std::vector<double> p = tight.next_dirichlet(4, 10000.0);
  for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("shuffle permutes without losing elements") {
  Rng rng(31);
  std::vector<int> items(100);
  std::iota(items.begin(), items.end(), 0);
  std::vector<int> shuffled = items;
  rng.shuffle(shuffled);
  CHECK(shuffled != items);
  std::vector<int> sorted = shuffled;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == items);
}

TEST_CASE("shuffle visits arrangements uniformly enough") {
  std::map<std::array<int, 3>, int> counts;
  const int trials = 60000;
  Rng rng(37);
  for (int t = 0; t < trials; ++t) {
    std::vector<int> v{0, 1, 2};
    rng.shuffle(v);
    counts[{v[0], v[1], v[2]}]++;
  }
  REQUIRE(counts.size() == 6);
  for (const auto& [perm, c] : counts) {
    CHECK(c > trials / 6 - 1200);
    CHECK(c < trials / 6 + 1200);
  }
}
