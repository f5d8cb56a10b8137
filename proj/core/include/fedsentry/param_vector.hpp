#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedsentry {

// Flat vector of model parameters. The dimension is fixed at construction
// and every entry is finite; all arithmetic checks dimensions.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim) : values_(dim, 0.0) {}

  // Validates that every entry is finite.
  static ParamVector from_values(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }

  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  double l2_norm() const noexcept;
  bool all_finite() const noexcept;

  // this += scale * other
  ParamVector& add_scaled(const ParamVector& other, double scale);
  ParamVector& scale(double factor) noexcept;

  friend ParamVector operator+(const ParamVector& a, const ParamVector& b);
  friend ParamVector operator-(const ParamVector& a, const ParamVector& b);
  friend ParamVector operator*(double scale, const ParamVector& v);

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<double> values_;
};

// Throws std::invalid_argument unless both vectors share a dimension.
void require_same_dim(const ParamVector& a, const ParamVector& b);

}  // namespace fedsentry
