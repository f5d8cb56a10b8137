#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedsentry/model.hpp"
#include "fedsentry/param_vector.hpp"

namespace fedsentry {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
};

// Threats are the positive class. Rates with an empty denominator are
// left unset rather than forced to 0, so callers can tell "no false
// positives" from "no negatives to get wrong".
struct DetectionMetrics {
  double accuracy = 0.0;
  std::optional<double> false_positive_rate;  // fp / (fp + tn)
  std::optional<double> false_negative_rate;  // fn / (fn + tp), missed threats
};

// 1 when sigmoid(w . x + b) clears the threshold (boundary counts as a
// detection).
std::uint8_t predict(const ParamVector& theta, std::span<const double> x,
                     double threshold);

std::vector<std::uint8_t> predict_batch(const ParamVector& theta,
                                        const LabeledBatch& batch,
                                        double threshold);

ConfusionCounts confusion(std::span<const std::uint8_t> predictions,
                          std::span<const std::uint8_t> labels);

DetectionMetrics metrics_from_counts(const ConfusionCounts& counts);

DetectionMetrics evaluate(const ParamVector& theta, const LabeledBatch& batch,
                          double threshold);

// Modeled multiply-add count for scoring a batch, for the simulated clock.
double detect_flops(std::size_t n_samples, std::size_t dim_features);

}  // namespace fedsentry
