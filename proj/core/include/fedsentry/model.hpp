#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedsentry/param_vector.hpp"

namespace fedsentry {

// Inverse-decay learning rate: rate(t) = alpha0 / (1 + lambda * t).
// Positive and non-increasing in t for lambda >= 0.
struct LrSchedule {
  double alpha0 = 0.1;
  double lambda = 0.0;

  LrSchedule() = default;
  LrSchedule(double alpha0_in, double lambda_in);
};

double lr_at(const LrSchedule& schedule, std::uint64_t step);

// Non-owning view over a contiguous run of labeled samples.
struct BatchView {
  std::span<const double> features;  // row-major, size() == count * dim
  std::span<const std::uint8_t> labels;
  std::size_t dim = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> feature(std::size_t i) const noexcept {
    return features.subspan(i * dim, dim);
  }
};

// Owning labeled sample set: fused feature vectors plus binary threat labels
// (1 = threat). At least one sample; all rows share one dimension.
class LabeledBatch {
 public:
  LabeledBatch(std::vector<double> features_flat,
               std::vector<std::uint8_t> labels,
               std::size_t feature_dim);

  static LabeledBatch from_rows(const std::vector<std::vector<double>>& rows,
                                const std::vector<std::uint8_t>& labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t feature_dim() const noexcept { return dim_; }

  std::span<const double> feature(std::size_t i) const noexcept {
    return {features_.data() + i * dim_, dim_};
  }
  std::uint8_t label(std::size_t i) const noexcept { return labels_[i]; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }

  BatchView view() const noexcept {
    return {{features_.data(), features_.size()}, {labels_.data(), labels_.size()}, dim_};
  }
  BatchView view(std::size_t start, std::size_t count) const;

  LabeledBatch select(std::span<const std::uint32_t> indices) const;

 private:
  std::vector<double> features_;
  std::vector<std::uint8_t> labels_;
  std::size_t dim_;
};

// Mean binary logistic loss of a linear scorer over the batch. The parameter
// layout is [w_0 .. w_{d-1}, bias], so theta.dim() must be feature_dim + 1.
double local_loss(const ParamVector& theta, const BatchView& batch);
double local_loss(const ParamVector& theta, const LabeledBatch& batch);

// Analytic gradient of local_loss with respect to theta.
ParamVector local_gradient(const ParamVector& theta, const BatchView& batch);
ParamVector local_gradient(const ParamVector& theta, const LabeledBatch& batch);

// theta - rate * grad. Rate must be non-negative.
ParamVector sgd_step(const ParamVector& theta, const ParamVector& grad, double rate);

// Arithmetic mean of per-client losses; the sequence must be non-empty.
double global_loss(std::span<const double> local_losses);

double sigmoid(double x) noexcept;

}  // namespace fedsentry
