#pragma once

#include <span>
#include <vector>

#include "fedsentry/param_vector.hpp"

namespace fedsentry {

// Weighted average sum_i p_i * theta_i. Weights must be non-negative and
// sum to 1 within 1e-9; uniform weights give the plain arithmetic mean.
// Summation runs in input order, so callers fix the order (ascending
// client id) to keep floating-point results deterministic.
ParamVector aggregate(std::span<const ParamVector> updates,
                      std::span<const double> weights);

std::vector<double> uniform_weights(std::size_t n);

// Dispersion of client models around the global model:
// sum_i ||theta_i - theta_global||^2.
double sync_error(std::span<const ParamVector> clients,
                  const ParamVector& theta_global);

}  // namespace fedsentry
