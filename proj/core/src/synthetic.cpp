#include "fedsentry/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fedsentry/rng.hpp"

namespace fedsentry {
namespace {

constexpr std::uint64_t kStreamPartition = 3;

void check_mean(const std::vector<double>& mean, std::size_t dim,
                const char* which, std::size_t modality) {
  if (mean.size() != dim) {
    throw std::invalid_argument("synthetic: " + std::string(which) + " mean of modality " +
                                std::to_string(modality) + " has wrong dimension");
  }
  for (double v : mean) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("synthetic: non-finite class mean");
    }
  }
}

// Accuracy of the likelihood-ratio detector for two spherical Gaussians
// separated by `distance` standard deviations, with threat prior pi1.
double bayes_accuracy(double distance, double pi1) {
  if (distance <= 0.0) {
    return std::max(pi1, 1.0 - pi1);
  }
  const double pi0 = 1.0 - pi1;
  const double threshold = std::log(pi0 / pi1) / distance;
  return pi1 * normal_cdf(distance / 2.0 - threshold) +
         pi0 * normal_cdf(distance / 2.0 + threshold);
}

}  // namespace

void SyntheticSpec::validate() const {
  if (modalities == 0) {
    throw std::invalid_argument("synthetic: modalities must be positive");
  }
  if (feature_dim == 0) {
    throw std::invalid_argument("synthetic: feature_dim must be positive");
  }
  if (class_means.size() != modalities) {
    throw std::invalid_argument("synthetic: class_means must have one entry per modality");
  }
  for (std::size_t m = 0; m < class_means.size(); ++m) {
    check_mean(class_means[m].benign, feature_dim, "benign", m);
    check_mean(class_means[m].threat, feature_dim, "threat", m);
  }
  if (!std::isfinite(noise_std) || noise_std <= 0.0) {
    throw std::invalid_argument("synthetic: noise_std must be positive");
  }
  if (n_samples == 0) {
    throw std::invalid_argument("synthetic: n_samples must be positive");
  }
  if (!std::isfinite(threat_fraction) || threat_fraction <= 0.0 ||
      threat_fraction >= 1.0) {
    throw std::invalid_argument("synthetic: threat_fraction must be in (0, 1)");
  }
}

RawDataset generate(const SyntheticSpec& spec) {
  spec.validate();
  RawDataset data;
  data.modalities = spec.modalities;
  data.feature_dim = spec.feature_dim;
  data.labels.resize(spec.n_samples);
  data.values.resize(static_cast<std::size_t>(spec.n_samples) * spec.modalities *
                     spec.feature_dim);

  Rng rng(spec.seed);
  std::size_t pos = 0;
  for (std::uint32_t i = 0; i < spec.n_samples; ++i) {
    const bool threat = rng.next_bernoulli(spec.threat_fraction);
    data.labels[i] = threat ? 1 : 0;
    for (std::uint32_t m = 0; m < spec.modalities; ++m) {
      const std::vector<double>& mean =
          threat ? spec.class_means[m].threat : spec.class_means[m].benign;
      for (std::uint32_t k = 0; k < spec.feature_dim; ++k) {
        data.values[pos++] = rng.next_gaussian(mean[k], spec.noise_std);
      }
    }
  }
  return data;
}

SyntheticSpec make_complementary(std::uint32_t modalities,
                                 std::uint32_t feature_dim,
                                 double unimodal_accuracy,
                                 double noise_std,
                                 std::uint32_t n_samples,
                                 double threat_fraction,
                                 std::uint64_t seed) {
  if (unimodal_accuracy <= 0.5 || unimodal_accuracy >= 1.0) {
    throw std::invalid_argument("make_complementary: unimodal_accuracy must be in (0.5, 1)");
  }
  const double delta = 2.0 * normal_quantile(unimodal_accuracy) * noise_std;

  SyntheticSpec spec;
  spec.modalities = modalities;
  spec.feature_dim = feature_dim;
  spec.noise_std = noise_std;
  spec.n_samples = n_samples;
  spec.threat_fraction = threat_fraction;
  spec.seed = seed;
  spec.class_means.resize(modalities);
  for (std::uint32_t m = 0; m < modalities; ++m) {
    spec.class_means[m].benign.assign(feature_dim, 0.0);
    spec.class_means[m].threat.assign(feature_dim, 0.0);
    spec.class_means[m].benign[0] = -delta / 2.0;
    spec.class_means[m].threat[0] = delta / 2.0;
  }
  spec.validate();
  return spec;
}

double normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must be in (0, 1)");
  }
  double lo = -12.0;
  double hi = 12.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double unimodal_bayes_accuracy(const SyntheticSpec& spec, std::uint32_t modality) {
  spec.validate();
  if (modality >= spec.modalities) {
    throw std::invalid_argument("unimodal_bayes_accuracy: modality out of range");
  }
  const ModalityMeans& mm = spec.class_means[modality];
  double sq = 0.0;
  for (std::size_t k = 0; k < mm.benign.size(); ++k) {
    const double d = mm.threat[k] - mm.benign[k];
    sq += d * d;
  }
  return bayes_accuracy(std::sqrt(sq) / spec.noise_std, spec.threat_fraction);
}

double fused_bayes_accuracy(const SyntheticSpec& spec, const FusionWeights& weights) {
  spec.validate();
  weights.validate();
  if (weights.weights.size() != spec.modalities) {
    throw std::invalid_argument("fused_bayes_accuracy: weight count mismatch");
  }
  std::vector<double> gap(spec.feature_dim, 0.0);
  double weight_sq = 0.0;
  for (std::uint32_t m = 0; m < spec.modalities; ++m) {
    const double w = weights.weights[m];
    weight_sq += w * w;
    for (std::uint32_t k = 0; k < spec.feature_dim; ++k) {
      gap[k] += w * (spec.class_means[m].threat[k] - spec.class_means[m].benign[k]);
    }
  }
  if (weight_sq == 0.0) {
    throw std::invalid_argument("fused_bayes_accuracy: all-zero weights");
  }
  double sq = 0.0;
  for (double g : gap) sq += g * g;
  const double fused_std = spec.noise_std * std::sqrt(weight_sq);
  return bayes_accuracy(std::sqrt(sq) / fused_std, spec.threat_fraction);
}

std::vector<std::vector<std::uint32_t>> partition(std::span<const std::uint8_t> labels,
                                                  std::uint32_t n_clients,
                                                  double beta,
                                                  std::uint64_t seed) {
  if (n_clients == 0) {
    throw std::invalid_argument("partition: n_clients must be positive");
  }
  if (labels.size() < n_clients) {
    throw std::invalid_argument("partition: fewer samples than clients");
  }
  if (!std::isfinite(beta) || beta <= 0.0) {
    throw std::invalid_argument("partition: beta must be positive");
  }

  std::vector<std::uint32_t> class_indices[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) {
      throw std::invalid_argument("partition: labels must be 0 or 1");
    }
    class_indices[labels[i]].push_back(static_cast<std::uint32_t>(i));
  }

  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    std::vector<std::vector<std::uint32_t>> shards(n_clients);
    for (int c = 0; c < 2; ++c) {
      std::vector<std::uint32_t> pool = class_indices[c];
      if (pool.empty()) continue;
      Rng rng(derive_seed(seed, attempt, static_cast<std::uint64_t>(c), kStreamPartition));
      rng.shuffle(pool);
      const std::vector<double> shares = rng.next_dirichlet(n_clients, beta);

      // Largest-remainder rounding of shares * pool.size().
      const double total = static_cast<double>(pool.size());
      std::vector<std::size_t> counts(n_clients);
      std::vector<std::pair<double, std::uint32_t>> remainders(n_clients);
      std::size_t assigned = 0;
      for (std::uint32_t j = 0; j < n_clients; ++j) {
        const double exact = shares[j] * total;
        counts[j] = static_cast<std::size_t>(exact);
        remainders[j] = {exact - static_cast<double>(counts[j]), j};
        assigned += counts[j];
      }
      std::sort(remainders.begin(), remainders.end(),
                [](const auto& a, const auto& b) {
                  if (a.first != b.first) return a.first > b.first;
                  return a.second < b.second;
                });
      for (std::size_t r = 0; assigned < pool.size(); ++r) {
        counts[remainders[r % n_clients].second] += 1;
        ++assigned;
      }

      std::size_t cursor = 0;
      for (std::uint32_t j = 0; j < n_clients; ++j) {
        for (std::size_t t = 0; t < counts[j]; ++t) {
          shards[j].push_back(pool[cursor++]);
        }
      }
    }

    const bool all_nonempty = std::all_of(
        shards.begin(), shards.end(), [](const auto& s) { return !s.empty(); });
    if (all_nonempty) {
      for (auto& shard : shards) std::sort(shard.begin(), shard.end());
      return shards;
    }
  }
  throw std::runtime_error("partition: could not give every client a sample");
}

LabeledBatch build_fused_batch(const RawDataset& data,
                               std::span<const ExtractorSpec> extractors,
                               const FusionWeights& weights) {
  if (data.size() == 0) {
    throw std::invalid_argument("build_fused_batch: empty dataset");
  }
  if (extractors.size() != data.modalities) {
    throw std::invalid_argument("build_fused_batch: one extractor per modality required");
  }
  weights.validate();
  if (weights.weights.size() != data.modalities) {
    throw std::invalid_argument("build_fused_batch: weight count mismatch");
  }

  std::vector<ModalityFeature> features(data.modalities);
  std::vector<double> flat;
  std::size_t fused_dim = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::uint32_t m = 0; m < data.modalities; ++m) {
      const auto raw = data.modality(i, m);
      features[m] = extract(extractors[m],
                            RawRecord(std::vector<double>(raw.begin(), raw.end())));
    }
    std::vector<double> fused = fuse(features, weights);
    if (i == 0) {
      fused_dim = fused.size();
      flat.reserve(data.size() * fused_dim);
    }
    flat.insert(flat.end(), fused.begin(), fused.end());
  }
  return LabeledBatch(std::move(flat), data.labels, fused_dim);
}

TrainTestSplit split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split_indices: train_fraction must be in (0, 1)");
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t train_count = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * train_fraction));
  if (train_count == 0 || train_count >= n) {
    throw std::invalid_argument("split_indices: split leaves an empty side");
  }
  TrainTestSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace fedsentry
