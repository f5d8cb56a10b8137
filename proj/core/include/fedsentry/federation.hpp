#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedsentry/compression.hpp"
#include "fedsentry/model.hpp"
#include "fedsentry/param_vector.hpp"
#include "fedsentry/privacy.hpp"
#include "fedsentry/protocol.hpp"

namespace fedsentry {

// Raised when a peer violates round sequencing or sends inconsistent
// state (duplicate client ids, wrong dimensions, future rounds).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stream tags for per-client randomness. Draws are keyed by the client
// seed and its send counter, never by scheduling, so any worker count or
// arrival order reproduces the same numbers.
namespace rng_streams {
inline constexpr std::uint64_t shuffle = 1;
inline constexpr std::uint64_t noise = 2;
}  // namespace rng_streams

struct LocalTrainConfig {
  std::uint32_t epochs = 1;
  std::uint32_t batch_size = 0;  // 0 trains on the full shard each step

  void validate() const;
};

struct ClientState {
  std::uint32_t client_id = 0;
  LabeledBatch shard;
  ParamVector theta;
  LrSchedule schedule;
  std::uint64_t local_step = 0;  // cumulative SGD steps, drives the lr decay
  std::uint64_t sends = 0;       // completed local rounds, salts the rng streams
  std::uint64_t seed = 0;
};

struct GlobalState {
  ParamVector theta;
  std::uint32_t round = 0;
  std::vector<double> node_weights;  // indexed by client_id, sums to 1
};

// Runs one local training pass: adopt the broadcast model, take the
// configured SGD steps, then emit the model delta with clipping, noise
// and sparsification applied in that order. train_seconds is left at 0
// for the caller to fill in.
ClientUpdate client_round(ClientState& client,
                          const ParamVector& broadcast,
                          std::uint32_t round,
                          const LocalTrainConfig& train,
                          const DpConfig& dp,
                          const CompressionSpec& compression);

// Folds a complete set of updates for global.round into the global model
// and advances the round. Every client id in [0, N) must appear exactly
// once; aggregation runs in ascending client_id order.
void apply_sync_updates(GlobalState& global, std::span<const ClientUpdate> updates);

struct SyncRoundResult {
  std::vector<ClientUpdate> updates;  // ordered by client_id
  double sync_error = 0.0;            // dispersion around the new global model
};

// One synchronous round over all clients. Client work is spread over
// `workers` threads; results are identical for any worker count because
// each client's randomness is derived from its own seed.
SyncRoundResult run_round_sync(GlobalState& global,
                               std::span<ClientState> clients,
                               const LocalTrainConfig& train,
                               const DpConfig& dp,
                               const CompressionSpec& compression,
                               unsigned workers = 1);

// Modeled multiply-add count for one local training pass, used by the
// simulated clock.
double train_flops(std::size_t n_samples, std::size_t dim_features,
                   const LocalTrainConfig& train);

enum class AsyncSchedule { wave, event };

std::string to_string(AsyncSchedule schedule);
AsyncSchedule async_schedule_from_string(const std::string& s);

struct AsyncOptions {
  AsyncSchedule schedule = AsyncSchedule::wave;
  double base_mix = 1.0;             // numerator of the staleness discount
  std::uint32_t max_staleness = 50;  // updates older than this are dropped

  void validate() const;
};

// Staleness-discounted mixing weight: base_mix / (1 + staleness).
double mixing_coefficient(double base_mix, std::uint32_t staleness);

struct AsyncApplyResult {
  bool applied = false;
  std::uint32_t staleness = 0;
  double mix = 0.0;
  ParamVector reconstructed;  // sender's model estimate, when applied
};

// Applies client updates one at a time. Each accepted update moves the
// global model toward the sender's reconstructed model (its base round's
// global model plus the delta), discounted by staleness. The server round
// advances once per accepted update, and a bounded history of past global
// models anchors the reconstruction.
class AsyncAggregator {
 public:
  AsyncAggregator(ParamVector theta0, AsyncOptions options);

  const ParamVector& theta() const noexcept { return theta_; }
  std::uint32_t round() const noexcept { return round_; }
  std::uint64_t dropped() const noexcept { return dropped_; }

  AsyncApplyResult apply(const ClientUpdate& update);

 private:
  ParamVector theta_;
  std::uint32_t round_ = 0;
  std::uint64_t dropped_ = 0;
  AsyncOptions options_;
  std::map<std::uint32_t, ParamVector> history_;  // round -> model at that round
};

}  // namespace fedsentry
