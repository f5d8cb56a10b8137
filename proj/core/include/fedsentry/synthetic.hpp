#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedsentry/fusion.hpp"
#include "fedsentry/model.hpp"

namespace fedsentry {

struct ModalityMeans {
  std::vector<double> benign;
  std::vector<double> threat;
};

// Gaussian class-conditional generator: each modality draws from
// N(mean[label], noise_std^2 * I). Designed so detection quality has a
// closed-form optimum to test against.
struct SyntheticSpec {
  std::uint32_t modalities = 1;
  std::uint32_t feature_dim = 8;
  std::vector<ModalityMeans> class_means;  // one entry per modality
  double noise_std = 1.0;
  std::uint32_t n_samples = 1000;
  double threat_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RawDataset {
  std::uint32_t modalities = 0;
  std::uint32_t feature_dim = 0;
  std::vector<double> values;  // sample-major, then modality, then coordinate
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> modality(std::size_t sample, std::size_t m) const noexcept {
    const std::size_t stride = static_cast<std::size_t>(modalities) * feature_dim;
    return {values.data() + sample * stride + m * feature_dim, feature_dim};
  }
};

// Draw order per sample is label, then modality-major coordinates; tests
// pin this order so seeds stay stable.
RawDataset generate(const SyntheticSpec& spec);

// Scenario where every modality alone reaches `unimodal_accuracy` at best
// but the modalities carry independent noise, so uniform fusion averages
// it away and the optimum climbs with sqrt(modalities). Means sit at
// -delta/2 and +delta/2 on coordinate 0 of every modality.
SyntheticSpec make_complementary(std::uint32_t modalities,
                                 std::uint32_t feature_dim,
                                 double unimodal_accuracy,
                                 double noise_std,
                                 std::uint32_t n_samples,
                                 double threat_fraction,
                                 std::uint64_t seed);

double normal_cdf(double x) noexcept;
double normal_quantile(double p);

// Best achievable accuracy of any detector that sees one modality alone.
double unimodal_bayes_accuracy(const SyntheticSpec& spec, std::uint32_t modality);

// Best achievable accuracy on the fused features sum_j w_j X_j.
double fused_bayes_accuracy(const SyntheticSpec& spec, const FusionWeights& weights);

// Non-IID shards: per class, client shares come from a symmetric
// Dirichlet(beta). Larger beta approaches an even split. Every client is
// guaranteed at least one sample (retries with re-derived seeds).
std::vector<std::vector<std::uint32_t>> partition(std::span<const std::uint8_t> labels,
                                                  std::uint32_t n_clients,
                                                  double beta,
                                                  std::uint64_t seed);

LabeledBatch build_fused_batch(const RawDataset& data,
                               std::span<const ExtractorSpec> extractors,
                               const FusionWeights& weights);

struct TrainTestSplit {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> test;
};

TrainTestSplit split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

}  // namespace fedsentry
