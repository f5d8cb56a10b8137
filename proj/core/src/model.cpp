#include "fedsentry/model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace fedsentry {

LrSchedule::LrSchedule(double alpha0_in, double lambda_in)
    : alpha0(alpha0_in), lambda(lambda_in) {
  if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) {
    throw std::invalid_argument("alpha0 must be positive and finite");
  }
  if (lambda < 0.0 || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be non-negative and finite");
  }
}

double lr_at(const LrSchedule& schedule, std::uint64_t step) {
  return schedule.alpha0 / (1.0 + schedule.lambda * static_cast<double>(step));
}

LabeledBatch::LabeledBatch(std::vector<double> features_flat,
                           std::vector<std::uint8_t> labels,
                           std::size_t feature_dim)
    : features_(std::move(features_flat)), labels_(std::move(labels)), dim_(feature_dim) {
  if (labels_.empty()) {
    throw std::invalid_argument("batch must contain at least one sample");
  }
  if (dim_ == 0) {
    throw std::invalid_argument("feature dimension must be positive");
  }
  if (features_.size() != labels_.size() * dim_) {
    throw std::invalid_argument("feature buffer size does not match samples x dim");
  }
  for (double v : features_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("features must be finite");
    }
  }
  for (std::uint8_t label : labels_) {
    if (label > 1) {
      throw std::invalid_argument("labels must be 0 or 1");
    }
  }
}

LabeledBatch LabeledBatch::from_rows(const std::vector<std::vector<double>>& rows,
                                     const std::vector<std::uint8_t>& labels) {
  if (rows.size() != labels.size()) {
    throw std::invalid_argument("features and labels must have equal length");
  }
  if (rows.empty()) {
    throw std::invalid_argument("batch must contain at least one sample");
  }
  const std::size_t dim = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * dim);
  for (const auto& row : rows) {
    if (row.size() != dim) {
      throw std::invalid_argument("all feature vectors must share one dimension");
    }
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return LabeledBatch(std::move(flat), labels, dim);
}

BatchView LabeledBatch::view(std::size_t start, std::size_t count) const {
  if (start + count > labels_.size()) {
    throw std::out_of_range("batch view out of range");
  }
  return {{features_.data() + start * dim_, count * dim_},
          {labels_.data() + start, count},
          dim_};
}

LabeledBatch LabeledBatch::select(std::span<const std::uint32_t> indices) const {
  std::vector<double> flat;
  flat.reserve(indices.size() * dim_);
  std::vector<std::uint8_t> labels;
  labels.reserve(indices.size());
  for (std::uint32_t idx : indices) {
    if (idx >= labels_.size()) {
      throw std::out_of_range("sample index out of range");
    }
    auto row = feature(idx);
    flat.insert(flat.end(), row.begin(), row.end());
    labels.push_back(labels_[idx]);
  }
  return LabeledBatch(std::move(flat), std::move(labels), dim_);
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
static double softplus(double x) noexcept {
  if (x > 0.0) {
    return x + std::log1p(std::exp(-x));
  }
  return std::log1p(std::exp(x));
}

static void check_model_batch(const ParamVector& theta, const BatchView& batch) {
  if (batch.size() == 0) {
    throw std::invalid_argument("batch must contain at least one sample");
  }
  if (theta.dim() != batch.dim + 1) {
    throw std::invalid_argument("theta dimension must be feature_dim + 1");
  }
}

double local_loss(const ParamVector& theta, const BatchView& batch) {
  check_model_batch(theta, batch);
  const std::size_t d = batch.dim;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto x = batch.feature(i);
    double score = theta[d];
    for (std::size_t j = 0; j < d; ++j) {
      score += theta[j] * x[j];
    }
    const double ysign = batch.labels[i] ? 1.0 : -1.0;
    total += softplus(-ysign * score);
  }
  return total / static_cast<double>(batch.size());
}

double local_loss(const ParamVector& theta, const LabeledBatch& batch) {
  return local_loss(theta, batch.view());
}

ParamVector local_gradient(const ParamVector& theta, const BatchView& batch) {
  check_model_batch(theta, batch);
  const std::size_t d = batch.dim;
  ParamVector grad(d + 1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto x = batch.feature(i);
    double score = theta[d];
    for (std::size_t j = 0; j < d; ++j) {
      score += theta[j] * x[j];
    }
    const double ysign = batch.labels[i] ? 1.0 : -1.0;
    // d/ds softplus(-ysign * s) = -ysign * sigmoid(-ysign * s)
    const double factor = -ysign * sigmoid(-ysign * score);
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] += factor * x[j];
    }
    grad[d] += factor;
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  grad.scale(inv_n);
  return grad;
}

ParamVector local_gradient(const ParamVector& theta, const LabeledBatch& batch) {
  return local_gradient(theta, batch.view());
}

ParamVector sgd_step(const ParamVector& theta, const ParamVector& grad, double rate) {
  require_same_dim(theta, grad);
  if (rate < 0.0 || !std::isfinite(rate)) {
    throw std::invalid_argument("learning rate must be non-negative and finite");
  }
  ParamVector out = theta;
  out.add_scaled(grad, -rate);
  return out;
}

double global_loss(std::span<const double> local_losses) {
  if (local_losses.empty()) {
    throw std::invalid_argument("global loss requires at least one local loss");
  }
  double total = 0.0;
  for (double loss : local_losses) {
    total += loss;
  }
  return total / static_cast<double>(local_losses.size());
}

}  // namespace fedsentry
