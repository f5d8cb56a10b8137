#include "fedsentry/runner.hpp"

#include <poll.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <thread>
#include <utility>

#include "fedsentry/aggregate.hpp"
#include "fedsentry/csv.hpp"
#include "fedsentry/dataset_io.hpp"
#include "fedsentry/rng.hpp"
#include "fedsentry/synthetic.hpp"
#include "fedsentry/transport.hpp"

namespace fedsentry {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t frame_bytes(const RoundMessage& message) {
  return encode_message(message).size();
}

struct Prepared {
  ExperimentConfig cfg;  // resolved
  LabeledBatch train_set;
  LabeledBatch test_set;
};

Prepared prepare(const ExperimentConfig& input) {
  ExperimentConfig cfg = resolve(input);
  const RawDataset data = generate(synthetic_spec(cfg));
  const TrainTestSplit split = split_indices(
      data.size(), cfg.data.train_fraction, derive_seed(cfg.seed, seed_tags::split));
  const FusionWeights weights{*cfg.fusion_weights};
  const LabeledBatch all = build_fused_batch(data, cfg.extractors, weights);
  LabeledBatch train_set = all.select(split.train);
  LabeledBatch test_set = all.select(split.test);
  return Prepared{std::move(cfg), std::move(train_set), std::move(test_set)};
}

struct FedSetup {
  std::vector<LabeledBatch> shards;  // one per client, index == client_id
  std::vector<double> weights;
  std::size_t model_dim = 0;
};

FedSetup make_setup(const Prepared& p) {
  const auto assignment =
      partition(p.train_set.labels(), p.cfg.clients, p.cfg.data.dirichlet_beta,
                derive_seed(p.cfg.seed, seed_tags::partition));
  FedSetup setup;
  setup.model_dim = p.train_set.feature_dim() + 1;
  setup.shards.reserve(assignment.size());
  for (const auto& indices : assignment) {
    setup.shards.push_back(p.train_set.select(indices));
  }
  if (p.cfg.node_weight_mode == NodeWeightMode::uniform) {
    setup.weights = uniform_weights(setup.shards.size());
  } else {
    double total = 0.0;
    for (const LabeledBatch& shard : setup.shards) {
      total += static_cast<double>(shard.size());
    }
    setup.weights.reserve(setup.shards.size());
    for (const LabeledBatch& shard : setup.shards) {
      setup.weights.push_back(static_cast<double>(shard.size()) / total);
    }
  }
  return setup;
}

std::vector<ClientState> make_clients(const Prepared& p, const FedSetup& setup) {
  std::vector<ClientState> clients;
  clients.reserve(setup.shards.size());
  for (std::uint32_t j = 0; j < p.cfg.clients; ++j) {
    clients.push_back(ClientState{j, setup.shards[j], ParamVector(setup.model_dim),
                                  p.cfg.lr, 0, 0,
                                  derive_seed(p.cfg.seed, seed_tags::client, j)});
  }
  return clients;
}

double loss_over_shards(const ParamVector& theta, std::span<const LabeledBatch> shards) {
  std::vector<double> losses;
  losses.reserve(shards.size());
  for (const LabeledBatch& shard : shards) {
    losses.push_back(local_loss(theta, shard));
  }
  return global_loss(losses);
}

void fill_eval(RoundRow& row, const DetectionMetrics& m) {
  row.accuracy = m.accuracy;
  row.false_positive_rate = m.false_positive_rate;
  row.false_negative_rate = m.false_negative_rate;
}

std::optional<double> cumulative_epsilon(const DpConfig& dp, std::uint64_t releases) {
  if (!dp.active()) {
    return std::nullopt;
  }
  return epsilon_total(dp, releases);
}

double max_train_flops(const FedSetup& setup, std::size_t feature_dim,
                       const LocalTrainConfig& train) {
  double best = 0.0;
  for (const LabeledBatch& shard : setup.shards) {
    best = std::max(best, train_flops(shard.size(), feature_dim, train));
  }
  return best;
}

void drive_sim_sync(const Prepared& p, const FedSetup& setup,
                    std::vector<ClientState>& clients, RunReport& report) {
  GlobalState global{ParamVector(setup.model_dim), 0, setup.weights};
  const std::size_t feature_dim = p.train_set.feature_dim();
  const double detect_seconds =
      detect_flops(p.test_set.size(), feature_dim) / kSimFlopsPerSecond;

  for (std::uint32_t r = 0; r < p.cfg.rounds; ++r) {
    const std::uint64_t broadcast_frame =
        frame_bytes(GlobalBroadcast{global.round, global.theta});
    SyncRoundResult result = run_round_sync(global, clients, p.cfg.train, p.cfg.dp,
                                            p.cfg.compression, p.cfg.workers);
    RoundRow row;
    row.round = r + 1;
    row.bytes_down = broadcast_frame * clients.size();
    double flops = 0.0;
    for (const ClientUpdate& u : result.updates) {
      row.bytes_up += frame_bytes(u);
      flops = std::max(flops, train_flops(u.n_samples, feature_dim, p.cfg.train));
    }
    row.train_seconds = flops / kSimFlopsPerSecond;
    row.detect_seconds = detect_seconds;
    row.round_seconds =
        row.train_seconds + detect_seconds + 2.0 * kSimLatencySeconds +
        static_cast<double>(row.bytes_up + row.bytes_down) / kSimBytesPerSecond;
    row.sync_error = result.sync_error;
    row.global_loss = loss_over_shards(global.theta, setup.shards);
    fill_eval(row, evaluate(global.theta, p.test_set, p.cfg.threshold));
    row.epsilon_total = cumulative_epsilon(p.cfg.dp, r + 1);
    report.rounds.push_back(std::move(row));
  }
  report.theta = std::move(global.theta);
}

double client_sync_error(std::span<const ClientState> clients, const ParamVector& theta) {
  std::vector<ParamVector> models;
  models.reserve(clients.size());
  for (const ClientState& c : clients) {
    models.push_back(c.theta);
  }
  return sync_error(models, theta);
}

std::uint64_t max_sends(std::span<const ClientState> clients) {
  std::uint64_t best = 0;
  for (const ClientState& c : clients) {
    best = std::max(best, c.sends);
  }
  return best;
}

void drive_sim_async(const Prepared& p, const FedSetup& setup,
                     std::vector<ClientState>& clients, RunReport& report) {
  const std::size_t n = clients.size();
  const std::size_t feature_dim = p.train_set.feature_dim();
  AsyncAggregator agg(ParamVector(setup.model_dim), p.cfg.async_options);
  Rng schedule_rng(derive_seed(p.cfg.seed, seed_tags::schedule));
  const double detect_seconds =
      detect_flops(p.test_set.size(), feature_dim) / kSimFlopsPerSecond;
  const bool wave = p.cfg.async_options.schedule == AsyncSchedule::wave;

  // Event mode: each client trains from its most recent fetch.
  std::vector<ParamVector> base_theta(n, ParamVector(setup.model_dim));
  std::vector<std::uint32_t> base_round(n, 0);

  for (std::uint32_t block = 0; block < p.cfg.rounds; ++block) {
    RoundRow row;
    row.round = block + 1;
    double flops = 0.0;
    if (wave) {
      const ParamVector broadcast = agg.theta();
      const std::uint32_t base = agg.round();
      row.bytes_down +=
          static_cast<std::uint64_t>(n) * frame_bytes(GlobalBroadcast{base, broadcast});
      std::vector<ClientUpdate> updates;
      updates.reserve(n);
      for (std::uint32_t j = 0; j < n; ++j) {
        updates.push_back(client_round(clients[j], broadcast, base, p.cfg.train,
                                       p.cfg.dp, p.cfg.compression));
        flops = std::max(flops,
                         train_flops(clients[j].shard.size(), feature_dim, p.cfg.train));
      }
      std::vector<std::uint32_t> order(n);
      for (std::uint32_t j = 0; j < n; ++j) order[j] = j;
      schedule_rng.shuffle(order);
      for (std::uint32_t j : order) {
        row.bytes_up += frame_bytes(updates[j]);
        agg.apply(updates[j]);
      }
    } else {
      for (std::size_t e = 0; e < n; ++e) {
        const std::size_t j = static_cast<std::size_t>(schedule_rng.next_below(n));
        ClientUpdate update = client_round(clients[j], base_theta[j], base_round[j],
                                           p.cfg.train, p.cfg.dp, p.cfg.compression);
        flops = std::max(flops,
                         train_flops(clients[j].shard.size(), feature_dim, p.cfg.train));
        row.bytes_up += frame_bytes(update);
        agg.apply(update);
        base_theta[j] = agg.theta();
        base_round[j] = agg.round();
        row.bytes_down += frame_bytes(GlobalBroadcast{base_round[j], base_theta[j]});
      }
    }
    row.train_seconds = flops / kSimFlopsPerSecond;
    row.detect_seconds = detect_seconds;
    row.round_seconds =
        row.train_seconds + detect_seconds +
        2.0 * kSimLatencySeconds * static_cast<double>(n) +
        static_cast<double>(row.bytes_up + row.bytes_down) / kSimBytesPerSecond;
    row.sync_error = client_sync_error(clients, agg.theta());
    row.global_loss = loss_over_shards(agg.theta(), setup.shards);
    fill_eval(row, evaluate(agg.theta(), p.test_set, p.cfg.threshold));
    row.epsilon_total = cumulative_epsilon(p.cfg.dp, max_sends(clients));
    row.dropped_updates = agg.dropped();
    report.rounds.push_back(std::move(row));
  }
  report.theta = agg.theta();
  report.dropped_updates = agg.dropped();
}

void socket_client_loop(ClientState state, std::uint16_t port,
                        const LocalTrainConfig train, const DpConfig dp,
                        const CompressionSpec compression) {
  Connection conn = Connection::connect_local(port);
  while (true) {
    RoundMessage message = conn.recv();
    if (std::holds_alternative<Shutdown>(message)) {
      break;
    }
    const auto* broadcast = std::get_if<GlobalBroadcast>(&message);
    if (broadcast == nullptr) {
      throw ProtocolError("client received an unexpected message type");
    }
    const auto started = Clock::now();
    ClientUpdate update =
        client_round(state, broadcast->theta, broadcast->round, train, dp, compression);
    update.train_seconds = seconds_since(started);
    conn.send(update);
  }
}

// Client threads plus their deferred errors; join() rethrows the first one.
struct ClientPool {
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors;

  void join() {
    for (std::thread& t : threads) {
      if (t.joinable()) t.join();
    }
    threads.clear();
    for (const std::exception_ptr& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
};

void launch_clients(ClientPool& pool, const Prepared& p,
                    std::vector<ClientState> clients, std::uint16_t port) {
  const std::size_t n = clients.size();
  pool.errors.resize(n);
  pool.threads.reserve(n);
  std::exception_ptr* errors = pool.errors.data();
  for (std::size_t j = 0; j < n; ++j) {
    pool.threads.emplace_back(
        [errors, j, port, &p](ClientState state) {
          try {
            socket_client_loop(std::move(state), port, p.cfg.train, p.cfg.dp,
                               p.cfg.compression);
          } catch (...) {
            errors[j] = std::current_exception();
          }
        },
        std::move(clients[j]));
  }
}

void drive_socket_sync(const Prepared& p, const FedSetup& setup,
                       std::vector<ClientState> clients, RunReport& report) {
  const std::size_t n = clients.size();
  ServerSocket server;
  ClientPool pool;
  launch_clients(pool, p, std::move(clients), server.port());

  std::vector<Connection> conns;
  conns.reserve(n);
  try {
    for (std::size_t j = 0; j < n; ++j) {
      conns.push_back(server.accept_one());
    }

    GlobalState global{ParamVector(setup.model_dim), 0, setup.weights};
    for (std::uint32_t r = 0; r < p.cfg.rounds; ++r) {
      const auto started = Clock::now();
      RoundRow row;
      row.round = r + 1;
      const ParamVector before = global.theta;
      const GlobalBroadcast broadcast{global.round, before};
      for (Connection& conn : conns) {
        conn.send(broadcast);
        row.bytes_down += frame_bytes(broadcast);
      }
      std::vector<ClientUpdate> updates;
      updates.reserve(n);
      double slowest = 0.0;
      for (Connection& conn : conns) {
        RoundMessage message = conn.recv();
        auto* update = std::get_if<ClientUpdate>(&message);
        if (update == nullptr) {
          throw ProtocolError("server expected a client update");
        }
        row.bytes_up += frame_bytes(*update);
        slowest = std::max(slowest, update->train_seconds);
        updates.push_back(std::move(*update));
      }
      apply_sync_updates(global, updates);

      double dispersion = 0.0;
      for (const ClientUpdate& u : updates) {
        ParamVector model = before;
        model.add_scaled(u.update, 1.0);
        model.add_scaled(global.theta, -1.0);
        const double d = model.l2_norm();
        dispersion += d * d;
      }
      row.sync_error = dispersion;
      row.train_seconds = slowest;
      row.global_loss = loss_over_shards(global.theta, setup.shards);
      const auto eval_started = Clock::now();
      fill_eval(row, evaluate(global.theta, p.test_set, p.cfg.threshold));
      row.detect_seconds = seconds_since(eval_started);
      row.epsilon_total = cumulative_epsilon(p.cfg.dp, r + 1);
      row.round_seconds = seconds_since(started);
      report.rounds.push_back(std::move(row));
    }
    for (Connection& conn : conns) {
      conn.send(Shutdown{});
    }
    report.theta = std::move(global.theta);
  } catch (...) {
    // Drop the connections so blocked clients unblock, then reap threads.
    conns.clear();
    try {
      pool.join();
    } catch (...) {
    }
    throw;
  }
  pool.join();
}

void drive_socket_async(const Prepared& p, const FedSetup& setup,
                        std::vector<ClientState> clients, RunReport& report) {
  const std::size_t n = clients.size();
  ServerSocket server;
  ClientPool pool;
  launch_clients(pool, p, std::move(clients), server.port());

  std::vector<Connection> conns;
  conns.reserve(n);
  try {
    for (std::size_t j = 0; j < n; ++j) {
      conns.push_back(server.accept_one());
    }

    AsyncAggregator agg(ParamVector(setup.model_dim), p.cfg.async_options);
    const std::uint64_t target = static_cast<std::uint64_t>(p.cfg.rounds) * n;
    std::uint64_t broadcasts_sent = 0;
    std::uint64_t shutdowns_sent = 0;
    std::uint64_t processed = 0;
    std::vector<bool> active(n, true);
    std::map<std::uint32_t, ParamVector> last_model;
    std::map<std::uint32_t, std::uint64_t> sends_by_client;

    if (target == 0) {
      for (Connection& conn : conns) conn.send(Shutdown{});
      shutdowns_sent = n;
    } else {
      for (Connection& conn : conns) {
        const GlobalBroadcast b{agg.round(), agg.theta()};
        conn.send(b);
        ++broadcasts_sent;
      }
    }

    RoundRow row;
    auto block_started = Clock::now();
    double slowest = 0.0;
    std::uint64_t bytes_up = 0;
    std::uint64_t bytes_down = 0;

    while (shutdowns_sent < n) {
      std::vector<pollfd> fds;
      std::vector<std::size_t> owner;
      for (std::size_t j = 0; j < n; ++j) {
        if (active[j]) {
          fds.push_back(pollfd{conns[j].fd(), POLLIN, 0});
          owner.push_back(j);
        }
      }
      if (::poll(fds.data(), fds.size(), -1) < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("poll failed");
      }
      for (std::size_t k = 0; k < fds.size(); ++k) {
        if ((fds[k].revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
        const std::size_t j = owner[k];
        RoundMessage message = conns[j].recv();
        auto* update = std::get_if<ClientUpdate>(&message);
        if (update == nullptr) {
          throw ProtocolError("server expected a client update");
        }
        bytes_up += frame_bytes(*update);
        slowest = std::max(slowest, update->train_seconds);
        sends_by_client[update->client_id] += 1;
        AsyncApplyResult applied = agg.apply(*update);
        if (applied.applied) {
          last_model[update->client_id] = std::move(applied.reconstructed);
        }
        ++processed;

        if (broadcasts_sent < target) {
          const GlobalBroadcast b{agg.round(), agg.theta()};
          conns[j].send(b);
          bytes_down += frame_bytes(b);
          ++broadcasts_sent;
        } else {
          conns[j].send(Shutdown{});
          active[j] = false;
          ++shutdowns_sent;
        }

        if (processed % n == 0) {
          row.round = static_cast<std::uint32_t>(processed / n);
          row.bytes_up = bytes_up;
          row.bytes_down = bytes_down;
          row.train_seconds = slowest;
          double dispersion = 0.0;
          for (const auto& [id, model] : last_model) {
            ParamVector diff = model;
            diff.add_scaled(agg.theta(), -1.0);
            const double d = diff.l2_norm();
            dispersion += d * d;
          }
          row.sync_error = dispersion;
          row.global_loss = loss_over_shards(agg.theta(), setup.shards);
          const auto eval_started = Clock::now();
          fill_eval(row, evaluate(agg.theta(), p.test_set, p.cfg.threshold));
          row.detect_seconds = seconds_since(eval_started);
          std::uint64_t most = 0;
          for (const auto& [id, count] : sends_by_client) {
            most = std::max(most, count);
          }
          row.epsilon_total = cumulative_epsilon(p.cfg.dp, most);
          row.dropped_updates = agg.dropped();
          row.round_seconds = seconds_since(block_started);
          report.rounds.push_back(row);
          row = RoundRow{};
          block_started = Clock::now();
          slowest = 0.0;
          bytes_up = 0;
          bytes_down = 0;
        }
      }
    }
    report.theta = agg.theta();
    report.dropped_updates = agg.dropped();
  } catch (...) {
    conns.clear();
    try {
      pool.join();
    } catch (...) {
    }
    throw;
  }
  pool.join();
}

bool all_identity(const ExperimentConfig& cfg) {
  return std::all_of(cfg.extractors.begin(), cfg.extractors.end(),
                     [](const ExtractorSpec& e) {
                       return e.kind == ExtractorSpec::Kind::identity;
                     });
}

void write_outputs(const RunReport& report);

}  // namespace

RunReport run_experiment(const ExperimentConfig& input) {
  Prepared p = prepare(input);
  FedSetup setup = make_setup(p);
  std::vector<ClientState> clients = make_clients(p, setup);

  RunReport report;
  report.config = p.cfg;
  report.theta = ParamVector(setup.model_dim);
  report.initial = evaluate(report.theta, p.test_set, p.cfg.threshold);

  if (p.cfg.rounds > 0) {
    if (p.cfg.transport == TransportKind::sim) {
      if (p.cfg.mode == RoundMode::sync) {
        drive_sim_sync(p, setup, clients, report);
      } else {
        drive_sim_async(p, setup, clients, report);
      }
    } else {
      if (p.cfg.mode == RoundMode::sync) {
        drive_socket_sync(p, setup, std::move(clients), report);
      } else {
        drive_socket_async(p, setup, std::move(clients), report);
      }
    }
  }

  if (report.rounds.empty()) {
    report.final_metrics = report.initial;
    report.final_global_loss = loss_over_shards(report.theta, setup.shards);
    report.final_sync_error = std::numeric_limits<double>::quiet_NaN();
  } else {
    const RoundRow& last = report.rounds.back();
    report.final_metrics.accuracy = last.accuracy;
    report.final_metrics.false_positive_rate = last.false_positive_rate;
    report.final_metrics.false_negative_rate = last.false_negative_rate;
    report.final_global_loss = last.global_loss;
    report.final_sync_error = last.sync_error;
    report.epsilon_total = last.epsilon_total;
    report.dropped_updates = last.dropped_updates;
  }
  for (const RoundRow& row : report.rounds) {
    report.total_train_seconds += row.train_seconds;
    report.total_detect_seconds += row.detect_seconds;
    report.total_seconds += row.round_seconds;
    report.total_bytes_up += row.bytes_up;
    report.total_bytes_down += row.bytes_down;
  }
  report.train_flops_per_round =
      max_train_flops(setup, p.train_set.feature_dim(), p.cfg.train);
  report.detect_flops_per_eval =
      detect_flops(p.test_set.size(), p.test_set.feature_dim());
  if (all_identity(p.cfg)) {
    const SyntheticSpec spec = synthetic_spec(p.cfg);
    report.fused_bayes = fused_bayes_accuracy(spec, FusionWeights{*p.cfg.fusion_weights});
    double best = 0.0;
    for (std::uint32_t m = 0; m < spec.modalities; ++m) {
      best = std::max(best, unimodal_bayes_accuracy(spec, m));
    }
    report.best_unimodal_bayes = best;
  } else {
    report.fused_bayes = std::numeric_limits<double>::quiet_NaN();
    report.best_unimodal_bayes = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

namespace {

const std::vector<std::string> kMetricsHeader = {
    "round",          "global_loss",    "sync_error",
    "accuracy",       "false_positive_rate", "false_negative_rate",
    "train_seconds",  "detect_seconds", "round_seconds",
    "bytes_up",       "bytes_down",     "epsilon_total",
    "dropped_updates"};

void write_outputs(const RunReport& report) {
  const fs::path out(report.config.out_dir);
  fs::create_directories(out);

  {
    std::ofstream config_file(out / "resolved_config.json",
                              std::ios::binary | std::ios::trunc);
    if (!config_file) {
      throw std::runtime_error("cannot write " + (out / "resolved_config.json").string());
    }
    config_file << config_to_json(report.config);
    config_file.flush();
    if (!config_file) {
      throw std::runtime_error("write failed: " + (out / "resolved_config.json").string());
    }
  }

  CsvWriter metrics(out / "metrics.csv");
  metrics.row(kMetricsHeader);
  for (const RoundRow& row : report.rounds) {
    const std::vector<std::string> fields = {
        std::to_string(row.round),
        format_double(row.global_loss),
        format_double(row.sync_error),
        format_double(row.accuracy),
        format_double(row.false_positive_rate),
        format_double(row.false_negative_rate),
        format_double(row.train_seconds),
        format_double(row.detect_seconds),
        format_double(row.round_seconds),
        std::to_string(row.bytes_up),
        std::to_string(row.bytes_down),
        format_double(row.epsilon_total),
        std::to_string(row.dropped_updates)};
    metrics.row(fields);
  }
  metrics.close();

  CsvWriter summary(out / "summary.csv");
  const auto put = [&summary](const std::string& metric, const std::string& value) {
    const std::vector<std::string> fields = {metric, value};
    summary.row(fields);
  };
  put("metric", "value");
  put("rounds_completed", std::to_string(report.rounds.size()));
  put("clients", std::to_string(report.config.clients));
  put("initial_accuracy", format_double(report.initial.accuracy));
  put("final_accuracy", format_double(report.final_metrics.accuracy));
  put("final_false_positive_rate",
      format_double(report.final_metrics.false_positive_rate));
  put("final_false_negative_rate",
      format_double(report.final_metrics.false_negative_rate));
  put("final_global_loss", format_double(report.final_global_loss));
  put("final_sync_error", format_double(report.final_sync_error));
  put("total_train_seconds", format_double(report.total_train_seconds));
  put("total_detect_seconds", format_double(report.total_detect_seconds));
  put("total_seconds", format_double(report.total_seconds));
  put("total_bytes_up", std::to_string(report.total_bytes_up));
  put("total_bytes_down", std::to_string(report.total_bytes_down));
  put("train_flops_per_round", format_double(report.train_flops_per_round));
  put("detect_flops_per_eval", format_double(report.detect_flops_per_eval));
  put("epsilon_per_round", format_double(report.config.dp.active()
                                             ? std::optional<double>(epsilon_per_round(
                                                   report.config.dp))
                                             : std::nullopt));
  put("epsilon_total", format_double(report.epsilon_total));
  put("dropped_updates", std::to_string(report.dropped_updates));
  put("fused_bayes_accuracy", format_double(report.fused_bayes));
  put("best_unimodal_bayes_accuracy", format_double(report.best_unimodal_bayes));
  summary.close();

  if (report.config.export_dataset) {
    const RawDataset data = generate(synthetic_spec(report.config));
    save_dataset(data, out / "dataset.bin");
  }
}

}  // namespace

RunReport run_and_write(const ExperimentConfig& cfg) {
  RunReport report = run_experiment(cfg);
  write_outputs(report);
  return report;
}

ParamVector train_centralized(const LabeledBatch& train_set,
                              const LrSchedule& schedule,
                              const LocalTrainConfig& per_round,
                              std::uint32_t rounds,
                              std::uint64_t seed) {
  per_round.validate();
  ParamVector theta(train_set.feature_dim() + 1);
  const std::size_t n = train_set.size();
  const std::size_t batch =
      per_round.batch_size == 0 ? n : std::min<std::size_t>(per_round.batch_size, n);
  std::uint64_t step = 0;
  std::vector<std::uint32_t> order(n);

  for (std::uint32_t r = 0; r < rounds; ++r) {
    for (std::uint32_t epoch = 0; epoch < per_round.epochs; ++epoch) {
      if (batch == n) {
        const ParamVector grad = local_gradient(theta, train_set);
        theta.add_scaled(grad, -lr_at(schedule, step));
        ++step;
        continue;
      }
      for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
      Rng shuffle_rng(derive_seed(seed, r, epoch, rng_streams::shuffle));
      shuffle_rng.shuffle(order);
      const LabeledBatch shuffled = train_set.select(order);
      for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t count = std::min(batch, n - start);
        const ParamVector grad = local_gradient(theta, shuffled.view(start, count));
        theta.add_scaled(grad, -lr_at(schedule, step));
        ++step;
      }
    }
  }
  return theta;
}

namespace {

SweepRow sweep_row_from(std::uint64_t value, const RunReport& report) {
  SweepRow row;
  row.value = value;
  row.accuracy = report.final_metrics.accuracy;
  row.false_positive_rate = report.final_metrics.false_positive_rate;
  row.false_negative_rate = report.final_metrics.false_negative_rate;
  row.global_loss = report.final_global_loss;
  row.train_seconds = report.total_train_seconds;
  return row;
}

void write_sweep(const fs::path& out, const std::string& value_column,
                 std::span<const SweepRow> rows) {
  CsvWriter sweep(out / "sweep.csv");
  const std::vector<std::string> header = {
      value_column,  "accuracy",    "false_positive_rate",
      "false_negative_rate", "global_loss", "train_seconds"};
  sweep.row(header);
  for (const SweepRow& row : rows) {
    const std::vector<std::string> fields = {
        std::to_string(row.value),
        format_double(row.accuracy),
        format_double(row.false_positive_rate),
        format_double(row.false_negative_rate),
        format_double(row.global_loss),
        format_double(row.train_seconds)};
    sweep.row(fields);
  }
  sweep.close();
}

void check_strictly_increasing(std::span<const std::uint32_t> values,
                               const char* what) {
  if (values.empty()) {
    throw std::invalid_argument(std::string(what) + ": no values given");
  }
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= values[i - 1]) {
      throw std::invalid_argument(std::string(what) +
                                  ": values must be strictly increasing");
    }
  }
}

}  // namespace

std::vector<SweepRow> sweep_dataset_size(const ExperimentConfig& base,
                                         std::span<const std::uint32_t> sizes) {
  check_strictly_increasing(sizes, "sweep_dataset_size");
  const ExperimentConfig root = resolve(base);
  const fs::path out(root.out_dir);
  fs::create_directories(out);

  std::vector<SweepRow> rows;
  rows.reserve(sizes.size());
  for (std::uint32_t size : sizes) {
    ExperimentConfig cfg = root;
    cfg.data.n_samples = size;
    cfg.out_dir = (out / ("size_" + std::to_string(size))).string();
    rows.push_back(sweep_row_from(size, run_and_write(cfg)));
  }
  write_sweep(out, "n_samples", rows);
  return rows;
}

std::vector<SweepRow> sweep_nodes(const ExperimentConfig& base,
                                  std::span<const std::uint32_t> node_counts) {
  check_strictly_increasing(node_counts, "sweep_nodes");
  const ExperimentConfig root = resolve(base);
  const fs::path out(root.out_dir);
  fs::create_directories(out);

  std::vector<SweepRow> rows;
  rows.reserve(node_counts.size());
  for (std::uint32_t nodes : node_counts) {
    ExperimentConfig cfg = root;
    cfg.clients = nodes;
    cfg.out_dir = (out / ("nodes_" + std::to_string(nodes))).string();
    rows.push_back(sweep_row_from(nodes, run_and_write(cfg)));
  }
  write_sweep(out, "clients", rows);
  return rows;
}

namespace {

CompareRow compare_row(const std::string& setting, const DetectionMetrics& m,
                       double train_seconds, double detect_seconds) {
  CompareRow row;
  row.setting = setting;
  row.accuracy = m.accuracy;
  row.false_positive_rate = m.false_positive_rate;
  row.false_negative_rate = m.false_negative_rate;
  row.train_seconds = train_seconds;
  row.detect_seconds = detect_seconds;
  return row;
}

// Better accuracy wins; loss breaks ties so the pick is deterministic.
bool improves(const CompareRow& candidate, const CompareRow& best) {
  return candidate.accuracy > best.accuracy;
}

}  // namespace

std::vector<CompareRow> compare_models(const ExperimentConfig& input) {
  const ExperimentConfig cfg = resolve(input);
  const std::uint32_t modalities = cfg.data.modalities;

  const auto centralized = [&](const ExperimentConfig& variant,
                               const std::string& name) {
    const Prepared p = prepare(variant);
    const ParamVector theta =
        train_centralized(p.train_set, p.cfg.lr, p.cfg.train, p.cfg.rounds,
                          derive_seed(p.cfg.seed, seed_tags::client, 0));
    const double train_seconds =
        static_cast<double>(p.cfg.rounds) *
        train_flops(p.train_set.size(), p.train_set.feature_dim(), p.cfg.train) /
        kSimFlopsPerSecond;
    const double detect_seconds =
        detect_flops(p.test_set.size(), p.test_set.feature_dim()) / kSimFlopsPerSecond;
    return compare_row(name, evaluate(theta, p.test_set, p.cfg.threshold),
                       train_seconds, detect_seconds);
  };
  const auto federated = [&](const ExperimentConfig& variant, const std::string& name) {
    const RunReport report = run_experiment(variant);
    return compare_row(name, report.final_metrics, report.total_train_seconds,
                       report.rounds.empty() ? 0.0
                                             : report.rounds.back().detect_seconds);
  };
  const auto unimodal_variant = [&](std::uint32_t m) {
    ExperimentConfig variant = cfg;
    variant.fusion_weights = FusionWeights::one_hot(modalities, m).weights;
    return variant;
  };

  CompareRow best_central_unimodal;
  CompareRow best_fed_unimodal;
  for (std::uint32_t m = 0; m < modalities; ++m) {
    const ExperimentConfig variant = unimodal_variant(m);
    const CompareRow central = centralized(variant, "centralized_unimodal_best");
    const CompareRow fed = federated(variant, "federated_unimodal_best");
    if (m == 0 || improves(central, best_central_unimodal)) {
      best_central_unimodal = central;
    }
    if (m == 0 || improves(fed, best_fed_unimodal)) {
      best_fed_unimodal = fed;
    }
  }

  std::vector<CompareRow> rows;
  rows.push_back(best_central_unimodal);
  rows.push_back(best_fed_unimodal);
  rows.push_back(centralized(cfg, "centralized_fused"));
  rows.push_back(federated(cfg, "federated_fused"));

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  CsvWriter compare(out / "compare.csv");
  const std::vector<std::string> header = {"setting",
                                           "accuracy",
                                           "false_positive_rate",
                                           "false_negative_rate",
                                           "train_seconds",
                                           "detect_seconds"};
  compare.row(header);
  for (const CompareRow& row : rows) {
    const std::vector<std::string> fields = {
        row.setting,
        format_double(row.accuracy),
        format_double(row.false_positive_rate),
        format_double(row.false_negative_rate),
        format_double(row.train_seconds),
        format_double(row.detect_seconds)};
    compare.row(fields);
  }
  compare.close();
  return rows;
}

}  // namespace fedsentry
