#include "fedsentry/aggregate.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace fedsentry {

ParamVector aggregate(std::span<const ParamVector> updates,
                      std::span<const double> weights) {
  if (updates.empty()) {
    throw std::invalid_argument("aggregate: no updates");
  }
  if (weights.size() != updates.size()) {
    throw std::invalid_argument("aggregate: weight count does not match update count");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("aggregate: weights must be finite and non-negative");
    }
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("aggregate: weights must sum to 1");
  }
  const std::size_t dim = updates[0].dim();
  ParamVector out(dim);
  for (std::size_t i = 0; i < updates.size(); ++i) {
    require_same_dim(out, updates[i]);
    out.add_scaled(updates[i], weights[i]);
  }
  return out;
}

std::vector<double> uniform_weights(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("uniform_weights: n must be positive");
  }
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

double sync_error(std::span<const ParamVector> clients,
                  const ParamVector& theta_global) {
  double total = 0.0;
  for (const ParamVector& c : clients) {
    require_same_dim(c, theta_global);
    double sq = 0.0;
    for (std::size_t j = 0; j < c.dim(); ++j) {
      const double d = c[j] - theta_global[j];
      sq += d * d;
    }
    total += sq;
  }
  return total;
}

}  // namespace fedsentry
