#pragma once

#include <cstdint>

#include "fedsentry/param_vector.hpp"
#include "fedsentry/rng.hpp"

namespace fedsentry {

// Gaussian-mechanism settings for client update perturbation.
//
// A config with enabled == true and sigma == 0 behaves exactly like a
// disabled one (no clipping, no noise): the zero-noise path must be
// bit-identical to the privacy-off pipeline.
struct DpConfig {
  bool enabled = false;
  double sigma = 0.0;      // noise standard deviation
  double clip_norm = 1.0;  // L2 bound applied to updates before noising
  double delta = 1e-5;

  void validate() const;
  bool active() const noexcept { return enabled && sigma > 0.0; }
};

// Rescales v onto the L2 ball of radius max_norm; vectors already inside
// are returned unchanged.
ParamVector clip(const ParamVector& v, double max_norm);

// Adds i.i.d. N(0, sigma^2) noise per coordinate. sigma == 0 returns the
// input exactly without touching the generator.
ParamVector perturb(const ParamVector& v, double sigma, Rng& rng);

// Seeded convenience overload; the stream is derived per (client, round)
// by the federation layer.
ParamVector perturb(const ParamVector& v, const DpConfig& cfg, std::uint64_t seed);

// Per-round privacy loss of the Gaussian mechanism,
// epsilon = clip_norm * sqrt(2 ln(1.25/delta)) / sigma,
// with the L2 sensitivity taken as clip_norm. Requires an active config.
double epsilon_per_round(const DpConfig& cfg);

// Simple (linear) composition over rounds; a loose upper bound.
double epsilon_total(const DpConfig& cfg, std::uint64_t rounds);

}  // namespace fedsentry
