#include "fedsentry/detection.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsentry {
namespace {

void check_threshold(double threshold) {
  if (!std::isfinite(threshold) || threshold < 0.0 || threshold > 1.0) {
    throw std::invalid_argument("detection: threshold must be in [0, 1]");
  }
}

}  // namespace

std::uint8_t predict(const ParamVector& theta, std::span<const double> x,
                     double threshold) {
  check_threshold(threshold);
  if (theta.dim() != x.size() + 1) {
    throw std::invalid_argument("predict: feature dimension mismatch");
  }
  double score = theta[x.size()];
  for (std::size_t i = 0; i < x.size(); ++i) {
    score += theta[i] * x[i];
  }
  return sigmoid(score) >= threshold ? 1 : 0;
}

std::vector<std::uint8_t> predict_batch(const ParamVector& theta,
                                        const LabeledBatch& batch,
                                        double threshold) {
  std::vector<std::uint8_t> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i] = predict(theta, batch.feature(i), threshold);
  }
  return out;
}

ConfusionCounts confusion(std::span<const std::uint8_t> predictions,
                          std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("confusion: prediction/label count mismatch");
  }
  if (predictions.empty()) {
    throw std::invalid_argument("confusion: empty input");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = predictions[i] != 0;
    const bool actual = labels[i] != 0;
    if (predicted && actual) {
      ++c.tp;
    } else if (predicted && !actual) {
      ++c.fp;
    } else if (!predicted && actual) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

DetectionMetrics metrics_from_counts(const ConfusionCounts& counts) {
  if (counts.total() == 0) {
    throw std::invalid_argument("metrics_from_counts: empty counts");
  }
  DetectionMetrics m;
  m.accuracy = static_cast<double>(counts.tp + counts.tn) /
               static_cast<double>(counts.total());
  if (counts.fp + counts.tn > 0) {
    m.false_positive_rate =
        static_cast<double>(counts.fp) / static_cast<double>(counts.fp + counts.tn);
  }
  if (counts.fn + counts.tp > 0) {
    m.false_negative_rate =
        static_cast<double>(counts.fn) / static_cast<double>(counts.fn + counts.tp);
  }
  return m;
}

DetectionMetrics evaluate(const ParamVector& theta, const LabeledBatch& batch,
                          double threshold) {
  const std::vector<std::uint8_t> predictions = predict_batch(theta, batch, threshold);
  return metrics_from_counts(confusion(predictions, batch.labels()));
}

double detect_flops(std::size_t n_samples, std::size_t dim_features) {
  return static_cast<double>(n_samples) *
         (2.0 * static_cast<double>(dim_features + 1) + 8.0);
}

}  // namespace fedsentry
