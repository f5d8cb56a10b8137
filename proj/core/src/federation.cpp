#include "fedsentry/federation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "fedsentry/aggregate.hpp"
#include "fedsentry/rng.hpp"

namespace fedsentry {
namespace {

void sgd_step_in_place(ParamVector& theta, const ParamVector& grad, double rate) {
  theta.add_scaled(grad, -rate);
}

}  // namespace

void LocalTrainConfig::validate() const {
  if (epochs == 0) {
    throw std::invalid_argument("local training: epochs must be positive");
  }
}

ClientUpdate client_round(ClientState& client,
                          const ParamVector& broadcast,
                          std::uint32_t round,
                          const LocalTrainConfig& train,
                          const DpConfig& dp,
                          const CompressionSpec& compression) {
  train.validate();
  dp.validate();
  compression.validate();
  if (broadcast.dim() != client.shard.feature_dim() + 1) {
    throw std::invalid_argument("client_round: model/shard dimension mismatch");
  }

  client.theta = broadcast;
  const std::size_t n = client.shard.size();
  const std::size_t batch =
      train.batch_size == 0 ? n : std::min<std::size_t>(train.batch_size, n);

  std::vector<std::uint32_t> order(n);
  for (std::uint32_t epoch = 0; epoch < train.epochs; ++epoch) {
    if (batch == n) {
      const ParamVector grad = local_gradient(client.theta, client.shard);
      sgd_step_in_place(client.theta, grad,
                        lr_at(client.schedule, client.local_step));
      ++client.local_step;
      continue;
    }
    std::iota(order.begin(), order.end(), 0u);
    Rng shuffle_rng(derive_seed(client.seed, client.sends, epoch, rng_streams::shuffle));
    shuffle_rng.shuffle(order);
    const LabeledBatch shuffled = client.shard.select(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      const ParamVector grad =
          local_gradient(client.theta, shuffled.view(start, count));
      sgd_step_in_place(client.theta, grad,
                        lr_at(client.schedule, client.local_step));
      ++client.local_step;
    }
  }

  ParamVector delta = client.theta - broadcast;
  if (dp.active()) {
    delta = clip(delta, dp.clip_norm);
    Rng noise_rng(derive_seed(client.seed, client.sends, 0, rng_streams::noise));
    delta = perturb(delta, dp.sigma, noise_rng);
  }
  delta = apply_compression(delta, compression);
  ++client.sends;

  ClientUpdate update;
  update.client_id = client.client_id;
  update.round = round;
  update.update = std::move(delta);
  update.n_samples = static_cast<std::uint32_t>(n);
  update.train_seconds = 0.0;
  return update;
}

void apply_sync_updates(GlobalState& global, std::span<const ClientUpdate> updates) {
  const std::size_t n = global.node_weights.size();
  if (updates.size() != n) {
    throw ProtocolError("expected " + std::to_string(n) + " updates, got " +
                        std::to_string(updates.size()));
  }
  std::vector<const ClientUpdate*> by_id(n, nullptr);
  for (const ClientUpdate& u : updates) {
    if (u.round != global.round) {
      throw ProtocolError("client " + std::to_string(u.client_id) +
                          " sent round " + std::to_string(u.round) +
                          " during round " + std::to_string(global.round));
    }
    if (u.client_id >= n) {
      throw ProtocolError("client id " + std::to_string(u.client_id) +
                          " out of range");
    }
    if (by_id[u.client_id] != nullptr) {
      throw ProtocolError("duplicate update from client " +
                          std::to_string(u.client_id));
    }
    by_id[u.client_id] = &u;
  }

  std::vector<ParamVector> deltas;
  deltas.reserve(n);
  for (const ClientUpdate* u : by_id) {
    require_same_dim(u->update, global.theta);
    deltas.push_back(u->update);
  }
  const ParamVector merged = aggregate(deltas, global.node_weights);
  global.theta.add_scaled(merged, 1.0);
  global.round += 1;
}

SyncRoundResult run_round_sync(GlobalState& global,
                               std::span<ClientState> clients,
                               const LocalTrainConfig& train,
                               const DpConfig& dp,
                               const CompressionSpec& compression,
                               unsigned workers) {
  const std::size_t n = clients.size();
  if (n == 0) {
    throw std::invalid_argument("run_round_sync: no clients");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (clients[i].client_id != i) {
      throw std::invalid_argument("run_round_sync: clients must be ordered by id");
    }
  }

  const ParamVector broadcast = global.theta;
  const std::uint32_t round = global.round;
  std::vector<ClientUpdate> updates(n);

  const unsigned threads =
      std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      updates[i] = client_round(clients[i], broadcast, round, train, dp, compression);
    }
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t per = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = static_cast<std::size_t>(t) * per;
      const std::size_t end = std::min(n, begin + per);
      if (begin >= end) break;
      pool.emplace_back([&, t, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) {
            updates[i] =
                client_round(clients[i], broadcast, round, train, dp, compression);
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  apply_sync_updates(global, updates);

  std::vector<ParamVector> models;
  models.reserve(n);
  for (const ClientState& c : clients) models.push_back(c.theta);
  SyncRoundResult result;
  result.sync_error = sync_error(models, global.theta);
  result.updates = std::move(updates);
  return result;
}

double train_flops(std::size_t n_samples, std::size_t dim_features,
                   const LocalTrainConfig& train) {
  // Forward and backward passes of the linear scorer cost about four
  // multiply-adds per weight per sample.
  const double per_sample = 4.0 * static_cast<double>(dim_features + 1) + 16.0;
  return static_cast<double>(train.epochs) * static_cast<double>(n_samples) *
         per_sample;
}

std::string to_string(AsyncSchedule schedule) {
  switch (schedule) {
    case AsyncSchedule::wave:
      return "wave";
    case AsyncSchedule::event:
      return "event";
  }
  throw std::logic_error("to_string: bad AsyncSchedule");
}

AsyncSchedule async_schedule_from_string(const std::string& s) {
  if (s == "wave") return AsyncSchedule::wave;
  if (s == "event") return AsyncSchedule::event;
  throw std::invalid_argument("unknown async schedule: " + s);
}

void AsyncOptions::validate() const {
  if (!std::isfinite(base_mix) || base_mix <= 0.0 || base_mix > 1.0) {
    throw std::invalid_argument("async: base_mix must be in (0, 1]");
  }
}

double mixing_coefficient(double base_mix, std::uint32_t staleness) {
  return base_mix / (1.0 + static_cast<double>(staleness));
}

AsyncAggregator::AsyncAggregator(ParamVector theta0, AsyncOptions options)
    : theta_(std::move(theta0)), options_(options) {
  options_.validate();
  history_.emplace(0u, theta_);
}

AsyncApplyResult AsyncAggregator::apply(const ClientUpdate& update) {
  if (update.round > round_) {
    throw ProtocolError("client " + std::to_string(update.client_id) +
                        " sent future round " + std::to_string(update.round));
  }
  require_same_dim(update.update, theta_);
  const std::uint32_t staleness = round_ - update.round;
  if (staleness > options_.max_staleness) {
    ++dropped_;
    return {false, staleness, 0.0, ParamVector()};
  }
  const auto base = history_.find(update.round);
  if (base == history_.end()) {
    ++dropped_;
    return {false, staleness, 0.0, ParamVector()};
  }

  const double mix = mixing_coefficient(options_.base_mix, staleness);
  ParamVector reconstructed = base->second;
  reconstructed.add_scaled(update.update, 1.0);
  theta_.scale(1.0 - mix);
  theta_.add_scaled(reconstructed, mix);
  round_ += 1;
  history_.emplace(round_, theta_);
  while (!history_.empty() &&
         history_.begin()->first + options_.max_staleness < round_) {
    history_.erase(history_.begin());
  }
  return {true, staleness, mix, std::move(reconstructed)};
}

}  // namespace fedsentry
