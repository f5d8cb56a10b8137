#include "fedsentry/privacy.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsentry {

void DpConfig::validate() const {
  if (sigma < 0.0 || !std::isfinite(sigma)) {
    throw std::invalid_argument("sigma must be non-negative and finite");
  }
  if (!(clip_norm > 0.0) || !std::isfinite(clip_norm)) {
    throw std::invalid_argument("clip_norm must be positive and finite");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
}

ParamVector clip(const ParamVector& v, double max_norm) {
  if (!(max_norm > 0.0) || !std::isfinite(max_norm)) {
    throw std::invalid_argument("clip norm must be positive and finite");
  }
  const double norm = v.l2_norm();
  if (norm <= max_norm) {
    return v;
  }
  ParamVector out = v;
  out.scale(max_norm / norm);
  return out;
}

ParamVector perturb(const ParamVector& v, double sigma, Rng& rng) {
  if (sigma < 0.0 || !std::isfinite(sigma)) {
    throw std::invalid_argument("sigma must be non-negative and finite");
  }
  if (sigma == 0.0) {
    return v;
  }
  ParamVector out = v;
  for (std::size_t i = 0; i < out.dim(); ++i) {
    out[i] += rng.next_gaussian(0.0, sigma);
  }
  return out;
}

ParamVector perturb(const ParamVector& v, const DpConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (!cfg.active()) {
    return v;
  }
  Rng rng(seed);
  return perturb(v, cfg.sigma, rng);
}

double epsilon_per_round(const DpConfig& cfg) {
  cfg.validate();
  if (!cfg.enabled || cfg.sigma == 0.0) {
    throw std::invalid_argument("epsilon is undefined without positive noise");
  }
  return cfg.clip_norm * std::sqrt(2.0 * std::log(1.25 / cfg.delta)) / cfg.sigma;
}

double epsilon_total(const DpConfig& cfg, std::uint64_t rounds) {
  return static_cast<double>(rounds) * epsilon_per_round(cfg);
}

}  // namespace fedsentry
