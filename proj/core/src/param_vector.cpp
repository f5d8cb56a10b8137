#include "fedsentry/param_vector.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace fedsentry {

ParamVector ParamVector::from_values(std::vector<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("parameter vector entries must be finite");
    }
  }
  ParamVector out;
  out.values_ = std::move(values);
  return out;
}

double ParamVector::l2_norm() const noexcept {
  double sum = 0.0;
  for (double v : values_) {
    sum += v * v;
  }
  return std::sqrt(sum);
}

bool ParamVector::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

ParamVector& ParamVector::add_scaled(const ParamVector& other, double scale) {
  require_same_dim(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] += scale * other.values_[i];
  }
  return *this;
}

ParamVector& ParamVector::scale(double factor) noexcept {
  for (double& v : values_) {
    v *= factor;
  }
  return *this;
}

ParamVector operator+(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b);
  ParamVector out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    out.values_[i] = a.values_[i] + b.values_[i];
  }
  return out;
}

ParamVector operator-(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b);
  ParamVector out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    out.values_[i] = a.values_[i] - b.values_[i];
  }
  return out;
}

ParamVector operator*(double scale, const ParamVector& v) {
  ParamVector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) {
    out.values_[i] = scale * v.values_[i];
  }
  return out;
}

void require_same_dim(const ParamVector& a, const ParamVector& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("parameter vector dimension mismatch");
  }
}

}  // namespace fedsentry
