#include <doctest.h>

#include <fedsentry/dataset_io.hpp>
#include <fedsentry/synthetic.hpp>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

using namespace fedsentry;

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const char* stem) {
  return fs::temp_directory_path() /
         (std::string("fedsentry_test_") + stem + "_" +
          std::to_string(::getpid()) + ".bin");
}

}  // namespace

TEST_CASE("normal cdf and quantile hit standard anchors") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(3.0) == doctest::Approx(0.9986501019683699).epsilon(1e-12));
  CHECK(normal_cdf(-3.0) ==
        doctest::Approx(1.0 - 0.9986501019683699).epsilon(1e-12));
  CHECK(normal_quantile(0.75) ==
        doctest::Approx(0.67448975019608159).epsilon(1e-9));
  CHECK(std::abs(normal_quantile(0.5)) < 1e-9);
  for (double p : {0.01, 0.2, 0.6, 0.99})
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("complementary scenarios meet their per-modality target") {
  SyntheticSpec two = make_complementary(2, 8, 0.75, 1.0, 100, 0.5, 1);
  REQUIRE(two.class_means.size() == 2);
  CHECK(two.class_means[0].threat[0] - two.class_means[0].benign[0] ==
        doctest::Approx(1.3489795003921632).epsilon(1e-9));
  for (std::size_t d = 1; d < 8; ++d) {
    CHECK(two.class_means[0].benign[d] == 0.0);
    CHECK(two.class_means[0].threat[d] == 0.0);
  }
  CHECK(unimodal_bayes_accuracy(two, 0) == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(unimodal_bayes_accuracy(two, 1) == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(fused_bayes_accuracy(two, FusionWeights::uniform(2)) ==
        doctest::Approx(0.82992592069966675).epsilon(1e-9));

  SyntheticSpec six = make_complementary(6, 8, 0.76, 1.0, 100, 0.5, 1);
  CHECK(unimodal_bayes_accuracy(six, 3) == doctest::Approx(0.76).epsilon(1e-9));
  CHECK(fused_bayes_accuracy(six, FusionWeights::uniform(6)) ==
        doctest::Approx(0.9581920873695422).epsilon(1e-9));

  // A one-hot fusion collapses back to the single-modality optimum.
  CHECK(fused_bayes_accuracy(six, FusionWeights::one_hot(6, 2)) ==
        doctest::Approx(0.76).epsilon(1e-9));

  // Unbalanced priors shift the optimal threshold; the optimum improves.
  SyntheticSpec skew = six;
  skew.threat_fraction = 0.3;
  CHECK(fused_bayes_accuracy(skew, FusionWeights::uniform(6)) ==
        doctest::Approx(0.9624810017231813).epsilon(1e-9));

  CHECK_THROWS_AS(make_complementary(2, 8, 0.5, 1.0, 100, 0.5, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_complementary(2, 8, 1.0, 1.0, 100, 0.5, 1),
                  std::invalid_argument);
}

TEST_CASE("fusing more complementary modalities raises the ceiling") {
  double prev = 0.5;
  for (std::uint32_t m : {1u, 2u, 4u, 8u}) {
    SyntheticSpec spec = make_complementary(m, 4, 0.7, 1.0, 10, 0.5, 1);
    double acc = fused_bayes_accuracy(spec, FusionWeights::uniform(m));
    CHECK(acc > prev);
    prev = acc;
  }
}

TEST_CASE("generation matches the requested geometry") {
  SyntheticSpec spec = make_complementary(3, 4, 0.8, 1.0, 20000, 0.4, 99);
  RawDataset data = generate(spec);
  CHECK(data.modalities == 3);
  CHECK(data.feature_dim == 4);
  CHECK(data.size() == 20000);
  CHECK(data.values.size() == 20000u * 3u * 4u);

  double threat = std::accumulate(data.labels.begin(), data.labels.end(), 0.0) /
                  data.size();
  CHECK(threat == doctest::Approx(0.4).epsilon(0.03));

  // Class-conditional means on the separating coordinate.
  for (std::uint32_t m = 0; m < 3; ++m) {
    double sum0 = 0.0, sum1 = 0.0;
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i]) {
        sum1 += data.modality(i, m)[0];
        ++n1;
      } else {
        sum0 += data.modality(i, m)[0];
        ++n0;
      }
    }
    CHECK(sum1 / n1 - sum0 / n0 ==
          doctest::Approx(spec.class_means[m].threat[0] -
                          spec.class_means[m].benign[0])
              .epsilon(0.05));
  }

  RawDataset again = generate(spec);
  CHECK(again.values == data.values);
  CHECK(again.labels == data.labels);

  SyntheticSpec reseeded = spec;
  reseeded.seed = 100;
  RawDataset other = generate(reseeded);
  CHECK(other.values != data.values);
}

TEST_CASE("partition covers every sample exactly once") {
  SyntheticSpec spec = make_complementary(2, 2, 0.75, 1.0, 997, 0.5, 5);
  RawDataset data = generate(spec);

  for (double beta : {0.1, 1.0, 100.0}) {
    auto shards = partition(data.labels, 7, beta, 42);
    REQUIRE(shards.size() == 7);
    std::set<std::uint32_t> seen;
    for (const auto& shard : shards) {
      CHECK(!shard.empty());
      CHECK(std::is_sorted(shard.begin(), shard.end()));
      for (std::uint32_t idx : shard) {
        CHECK(idx < data.size());
        CHECK(seen.insert(idx).second);
      }
    }
    CHECK(seen.size() == data.size());
  }
}

TEST_CASE("partition skew responds to the concentration") {
  std::vector<std::uint8_t> labels(1000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;

  auto spread = [](const std::vector<std::vector<std::uint32_t>>& shards) {
    std::size_t lo = shards[0].size(), hi = shards[0].size();
    for (const auto& s : shards) {
      lo = std::min(lo, s.size());
      hi = std::max(hi, s.size());
    }
    return hi - lo;
  };

  auto even = partition(labels, 10, 10000.0, 7);
  auto skewed = partition(labels, 10, 0.1, 7);
  CHECK(spread(even) <= 4);
  CHECK(spread(skewed) > 30);

  auto replay = partition(labels, 10, 0.1, 7);
  CHECK(replay == skewed);

  // Concentrations this extreme starve some client on every bounded redraw.
  CHECK_THROWS_AS(partition(labels, 10, 0.05, 7), std::runtime_error);

  CHECK_THROWS_AS(partition(labels, 0, 1.0, 7), std::invalid_argument);
  CHECK_THROWS_AS(partition(labels, 1001, 1.0, 7), std::invalid_argument);
  CHECK_THROWS_AS(partition(labels, 10, 0.0, 7), std::invalid_argument);
  std::vector<std::uint8_t> bad{0, 1, 2};
  CHECK_THROWS_AS(partition(bad, 2, 1.0, 7), std::invalid_argument);
}

TEST_CASE("train test split is a disjoint sorted cover") {
  TrainTestSplit split = split_indices(10000, 0.7, 11);
  CHECK(split.train.size() == 7000);
  CHECK(split.test.size() == 3000);
  CHECK(std::is_sorted(split.train.begin(), split.train.end()));
  CHECK(std::is_sorted(split.test.begin(), split.test.end()));

  std::vector<std::uint32_t> all;
  all.insert(all.end(), split.train.begin(), split.train.end());
  all.insert(all.end(), split.test.begin(), split.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i)
    CHECK(all[i] == static_cast<std::uint32_t>(i));

  TrainTestSplit replay = split_indices(10000, 0.7, 11);
  CHECK(replay.train == split.train);

  TrainTestSplit other = split_indices(10000, 0.7, 12);
  CHECK(other.train != split.train);

  CHECK_THROWS_AS(split_indices(2, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_indices(10, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_indices(10, 1.0, 1), std::invalid_argument);
}

TEST_CASE("fused batches average modalities under uniform weights") {
  RawDataset data;
  data.modalities = 2;
  data.feature_dim = 2;
  data.values = {1.0, 2.0, 10.0, 20.0,
                 3.0, 4.0, 30.0, 40.0};
  data.labels = {1, 0};

  std::vector<ExtractorSpec> extractors(2);
  extractors[0].modality_id = 0;
  extractors[1].modality_id = 1;

  LabeledBatch batch = build_fused_batch(data, extractors, FusionWeights::uniform(2));
  REQUIRE(batch.size() == 2);
  REQUIRE(batch.feature_dim() == 2);
  CHECK(batch.feature(0)[0] == doctest::Approx(5.5));
  CHECK(batch.feature(0)[1] == doctest::Approx(11.0));
  CHECK(batch.feature(1)[0] == doctest::Approx(16.5));
  CHECK(batch.feature(1)[1] == doctest::Approx(22.0));
  CHECK(batch.label(0) == 1);
  CHECK(batch.label(1) == 0);

  CHECK_THROWS_AS(
      build_fused_batch(data, extractors, FusionWeights::uniform(3)),
      std::invalid_argument);
  std::vector<ExtractorSpec> short_list(1);
  CHECK_THROWS_AS(
      build_fused_batch(data, short_list, FusionWeights::uniform(2)),
      std::invalid_argument);
}

TEST_CASE("datasets round trip through disk") {
  SyntheticSpec spec = make_complementary(2, 3, 0.8, 0.5, 200, 0.5, 17);
  RawDataset data = generate(spec);

  fs::path path = temp_file("roundtrip");
  save_dataset(data, path);
  RawDataset loaded = load_dataset(path);
  CHECK(loaded.modalities == data.modalities);
  CHECK(loaded.feature_dim == data.feature_dim);
  CHECK(loaded.values == data.values);
  CHECK(loaded.labels == data.labels);

  // Truncation must be detected.
  fs::resize_file(path, fs::file_size(path) - 8);
  CHECK_THROWS_AS(load_dataset(path), std::runtime_error);

  fs::remove(path);
  fs::path meta = path;
  meta += ".meta";
  fs::remove(meta);
  CHECK_THROWS_AS(load_dataset(path), std::runtime_error);
}

TEST_CASE("corrupt labels are rejected on load") {
  RawDataset data;
  data.modalities = 1;
  data.feature_dim = 1;
  data.values = {0.5, -0.5};
  data.labels = {0, 1};

  fs::path path = temp_file("labels");
  save_dataset(data, path);

  // Overwrite the second sample's label with 2.0.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.good());
    double two = 2.0;
    f.seekp(3 * sizeof(double));
    f.write(reinterpret_cast<const char*>(&two), sizeof(two));
  }
  CHECK_THROWS_AS(load_dataset(path), std::runtime_error);

  fs::remove(path);
  fs::path meta = path;
  meta += ".meta";
  fs::remove(meta);
}
