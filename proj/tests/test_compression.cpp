#include <doctest.h>

#include <fedsentry/compression.hpp>
#include <fedsentry/param_vector.hpp>
#include <fedsentry/rng.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace fedsentry;

TEST_CASE("topk keeps the largest magnitudes") {
  ParamVector v = ParamVector::from_values({0.1, -5.0, 3.0});
  SparseUpdate s = compress_topk(v, 2);
  CHECK(s.dim == 3);
  CHECK(s.indices == std::vector<std::uint32_t>{1, 2});
  CHECK(s.values == std::vector<double>{-5.0, 3.0});
}

TEST_CASE("topk ties break toward the lower index") {
  ParamVector v = ParamVector::from_values({1.0, -1.0, 1.0});
  SparseUpdate s = compress_topk(v, 2);
  CHECK(s.indices == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("topk with k at or above the dimension keeps everything") {
  ParamVector v = ParamVector::from_values({1.0, 2.0});
  SparseUpdate s = compress_topk(v, 5);
  CHECK(s.indices == std::vector<std::uint32_t>{0, 1});
  CHECK(decompress(s) == v);
}

TEST_CASE("topk rejects k of zero") {
  ParamVector v = ParamVector::from_values({1.0});
  CHECK_THROWS_AS(compress_topk(v, 0), std::invalid_argument);
}

TEST_CASE("decompress scatters into zeros") {
  SparseUpdate s;
  s.dim = 4;
  s.indices = {1, 3};
  s.values = {2.5, -1.5};
  ParamVector dense = decompress(s);
  CHECK(dense.values()[0] == 0.0);
  CHECK(dense.values()[1] == 2.5);
  CHECK(dense.values()[2] == 0.0);
  CHECK(dense.values()[3] == -1.5);

  SparseUpdate bad = s;
  bad.indices = {1, 9};
  CHECK_THROWS_AS(decompress(bad), std::invalid_argument);
  bad = s;
  bad.values = {2.5};
  CHECK_THROWS_AS(decompress(bad), std::invalid_argument);
}

TEST_CASE("round trip preserves the kept coordinates and zeroes the rest") {
  Rng rng(91);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t dim = 1 + rng.next_below(32);
    std::vector<double> raw(dim);
    for (double& x : raw) x = rng.next_gaussian(0.0, 2.0);
    ParamVector v = ParamVector::from_values(raw);
    std::uint32_t k = 1 + static_cast<std::uint32_t>(rng.next_below(dim));

    SparseUpdate s = compress_topk(v, k);
    CHECK(s.indices.size() == std::min<std::size_t>(k, dim));
    CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));

    ParamVector dense = decompress(s);
    double kept_min = 1e300;
    for (std::size_t i = 0; i < s.indices.size(); ++i) {
      CHECK(dense[s.indices[i]] == v[s.indices[i]]);
      kept_min = std::min(kept_min, std::abs(s.values[i]));
    }
    for (std::size_t i = 0; i < dim; ++i) {
      bool kept = std::binary_search(s.indices.begin(), s.indices.end(),
                                     static_cast<std::uint32_t>(i));
      if (!kept) {
        CHECK(dense[i] == 0.0);
        CHECK(std::abs(v[i]) <= kept_min + 1e-12);
      }
    }
  }
}

TEST_CASE("apply_compression is the identity when disabled") {
  ParamVector v = ParamVector::from_values({1.0, -2.0, 0.5});
  CompressionSpec off;
  CHECK(apply_compression(v, off) == v);

  CompressionSpec on;
  on.mode = CompressionMode::topk;
  on.k = 1;
  on.validate();
  ParamVector sparse = apply_compression(v, on);
  CHECK(sparse.values()[0] == 0.0);
  CHECK(sparse.values()[1] == -2.0);
  CHECK(sparse.values()[2] == 0.0);
}

TEST_CASE("compression spec validation and naming") {
  CompressionSpec bad;
  bad.mode = CompressionMode::topk;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  CHECK(to_string(CompressionMode::none) == "none");
  CHECK(to_string(CompressionMode::topk) == "topk");
  CHECK(compression_mode_from_string("none") == CompressionMode::none);
  CHECK(compression_mode_from_string("topk") == CompressionMode::topk);
  CHECK_THROWS_AS(compression_mode_from_string("gzip"), std::invalid_argument);
}
