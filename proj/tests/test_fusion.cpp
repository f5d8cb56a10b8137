#include <doctest.h>

#include <fedsentry/fusion.hpp>
#include <fedsentry/rng.hpp>

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

using namespace fedsentry;

TEST_CASE("fusion is the weighted sum of modality vectors") {
  std::vector<ModalityFeature> feats{
      {0, {1.0, 3.0}},
      {1, {1.0, -1.0}},
  };
  FusionWeights w{{0.5, 0.5}};
  std::vector<double> fused = fuse(feats, w);
  REQUIRE(fused.size() == 2);
  CHECK(fused[0] == doctest::Approx(1.0));
  CHECK(fused[1] == doctest::Approx(1.0));
}

TEST_CASE("fusion is invariant to input order") {
  std::vector<ModalityFeature> a{{0, {1.0, 2.0}}, {1, {3.0, 4.0}}, {2, {5.0, 6.0}}};
  std::vector<ModalityFeature> b{a[2], a[0], a[1]};
  FusionWeights w{{0.2, 0.3, 0.5}};
  CHECK(fuse(a, w) == fuse(b, w));
}

TEST_CASE("one hot weights select a single modality") {
  std::vector<ModalityFeature> feats{{0, {1.0}}, {1, {10.0}}, {2, {100.0}}};
  FusionWeights pick = FusionWeights::one_hot(3, 1);
  std::vector<double> fused = fuse(feats, pick);
  CHECK(fused[0] == doctest::Approx(10.0));
}

TEST_CASE("fusion is linear in the weights") {
  Rng rng(55);
  std::vector<ModalityFeature> feats;
  for (std::uint32_t m = 0; m < 4; ++m) {
    std::vector<double> v(3);
    for (double& x : v) x = rng.next_gaussian();
    feats.push_back({m, v});
  }
  FusionWeights wa{{1.0, 0.0, 2.0, 0.5}};
  FusionWeights wb{{0.0, 3.0, 1.0, 0.5}};
  FusionWeights wsum{{1.0, 3.0, 3.0, 1.0}};
  std::vector<double> fa = fuse(feats, wa);
  std::vector<double> fb = fuse(feats, wb);
  std::vector<double> fs = fuse(feats, wsum);
  for (std::size_t i = 0; i < fs.size(); ++i)
    CHECK(fs[i] == doctest::Approx(fa[i] + fb[i]).epsilon(1e-12));
}

TEST_CASE("fusion validates coverage and dimensions") {
  FusionWeights w{{0.5, 0.5}};
  std::vector<ModalityFeature> dup{{0, {1.0}}, {0, {2.0}}};
  CHECK_THROWS_AS(fuse(dup, w), std::invalid_argument);
  std::vector<ModalityFeature> gap{{0, {1.0}}, {2, {2.0}}};
  CHECK_THROWS_AS(fuse(gap, w), std::invalid_argument);
  std::vector<ModalityFeature> ragged{{0, {1.0}}, {1, {2.0, 3.0}}};
  CHECK_THROWS_AS(fuse(ragged, w), std::invalid_argument);
  std::vector<ModalityFeature> ok{{0, {1.0}}, {1, {2.0}}};
  CHECK_THROWS_AS(fuse(ok, FusionWeights{{1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(fuse(std::vector<ModalityFeature>{}, FusionWeights{{}}),
                  std::invalid_argument);
}

TEST_CASE("weights must be finite and non-negative") {
  CHECK_THROWS_AS((FusionWeights{{-0.1, 1.1}}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((FusionWeights{{}}.validate()), std::invalid_argument);
  FusionWeights u = FusionWeights::uniform(4);
  u.validate();
  CHECK(u.weights == std::vector<double>{0.25, 0.25, 0.25, 0.25});
}

TEST_CASE("normalize_weights scales to a unit sum") {
  FusionWeights w{{1.0, 0.0, 1.0}};
  FusionWeights n = normalize_weights(w);
  CHECK(n.weights[0] == doctest::Approx(0.5));
  CHECK(n.weights[1] == doctest::Approx(0.0));
  CHECK(n.weights[2] == doctest::Approx(0.5));
  CHECK_THROWS_AS(normalize_weights(FusionWeights{{0.0, 0.0}}),
                  std::invalid_argument);
}

TEST_CASE("identity extractor passes numeric records through") {
  ExtractorSpec spec;
  spec.modality_id = 3;
  spec.kind = ExtractorSpec::Kind::identity;
  ModalityFeature f = extract(spec, RawRecord{std::vector<double>{1.0, 2.0}});
  CHECK(f.modality_id == 3);
  CHECK(f.vector == std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(extract(spec, RawRecord{std::string{"text"}}),
                  std::invalid_argument);
}

TEST_CASE("affine extractor applies matrix and offset") {
  ExtractorSpec spec;
  spec.kind = ExtractorSpec::Kind::affine;
  spec.matrix = {{1.0, 1.0}, {2.0, 0.0}};
  spec.offset = {0.5, -0.5};
  spec.validate();
  ModalityFeature f = extract(spec, RawRecord{std::vector<double>{3.0, 4.0}});
  REQUIRE(f.vector.size() == 2);
  CHECK(f.vector[0] == doctest::Approx(7.5));
  CHECK(f.vector[1] == doctest::Approx(5.5));

  CHECK_THROWS_AS(extract(spec, RawRecord{std::vector<double>{1.0}}),
                  std::invalid_argument);

  ExtractorSpec ragged = spec;
  ragged.matrix[1] = {1.0};
  CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);
  ExtractorSpec short_offset = spec;
  short_offset.offset = {0.5};
  CHECK_THROWS_AS(short_offset.validate(), std::invalid_argument);
}

TEST_CASE("hash extractor is deterministic and bounded") {
  ExtractorSpec spec;
  spec.kind = ExtractorSpec::Kind::hash_text;
  spec.buckets = 8;
  spec.validate();

  ModalityFeature a = extract(spec, RawRecord{std::string{"scan port scan"}});
  ModalityFeature b = extract(spec, RawRecord{std::string{"scan port scan"}});
  REQUIRE(a.vector.size() == 8);
  CHECK(a.vector == b.vector);
  double total = std::accumulate(a.vector.begin(), a.vector.end(), 0.0);
  CHECK(total == doctest::Approx(3.0));
  for (double v : a.vector) CHECK(v >= 0.0);

  ModalityFeature spaced = extract(spec, RawRecord{std::string{"  scan   port scan "}});
  CHECK(spaced.vector == a.vector);

  ModalityFeature empty = extract(spec, RawRecord{std::string{""}});
  CHECK(std::accumulate(empty.vector.begin(), empty.vector.end(), 0.0) ==
        doctest::Approx(0.0));

  CHECK_THROWS_AS(extract(spec, RawRecord{std::vector<double>{1.0}}),
                  std::invalid_argument);
  ExtractorSpec no_buckets = spec;
  no_buckets.buckets = 0;
  CHECK_THROWS_AS(no_buckets.validate(), std::invalid_argument);
}

TEST_CASE("extractor kinds round trip through names") {
  for (auto kind : {ExtractorSpec::Kind::identity, ExtractorSpec::Kind::affine,
                    ExtractorSpec::Kind::hash_text}) {
    CHECK(extractor_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(extractor_kind_from_string("bogus"), std::invalid_argument);
}
