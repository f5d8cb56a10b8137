#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsentry/config.hpp"
#include "fedsentry/detection.hpp"
#include "fedsentry/federation.hpp"

namespace fedsentry {

// Modeled hardware for the simulated clock. Sim-mode timing columns are
// computed from these, so output files are identical across machines and
// worker counts; socket runs report measured wall time instead.
inline constexpr double kSimFlopsPerSecond = 1e9;
inline constexpr double kSimLatencySeconds = 1e-3;
inline constexpr double kSimBytesPerSecond = 1e8;

struct RoundRow {
  std::uint32_t round = 0;  // 1-based, recorded after the round completes
  double global_loss = 0.0;
  double sync_error = 0.0;
  double accuracy = 0.0;
  std::optional<double> false_positive_rate;
  std::optional<double> false_negative_rate;
  double train_seconds = 0.0;
  double detect_seconds = 0.0;
  double round_seconds = 0.0;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  std::optional<double> epsilon_total;  // cumulative privacy spend
  std::uint64_t dropped_updates = 0;    // cumulative stale discards (async)
};

struct RunReport {
  ExperimentConfig config;  // resolved
  std::vector<RoundRow> rounds;
  DetectionMetrics initial;
  DetectionMetrics final_metrics;
  double final_global_loss = 0.0;
  double final_sync_error = 0.0;
  ParamVector theta;
  double total_train_seconds = 0.0;
  double total_detect_seconds = 0.0;
  double total_seconds = 0.0;
  std::uint64_t total_bytes_up = 0;
  std::uint64_t total_bytes_down = 0;
  std::optional<double> epsilon_total;
  std::uint64_t dropped_updates = 0;
  double train_flops_per_round = 0.0;   // modeled, slowest client
  double detect_flops_per_eval = 0.0;   // modeled, full test set
  double fused_bayes = 0.0;             // closed-form ceiling (nan if unknown)
  double best_unimodal_bayes = 0.0;
};

// Runs the full experiment in memory. The config is resolved first; the
// resolved form is returned in the report.
RunReport run_experiment(const ExperimentConfig& cfg);

// Same, then writes metrics.csv, summary.csv and resolved_config.json
// (plus dataset.bin when export_dataset is set) under cfg.out_dir.
RunReport run_and_write(const ExperimentConfig& cfg);

// Plain SGD over the pooled training set with the same per-round
// procedure clients use. With one client holding all data, federated
// training reduces to exactly this.
ParamVector train_centralized(const LabeledBatch& train_set,
                              const LrSchedule& schedule,
                              const LocalTrainConfig& per_round,
                              std::uint32_t rounds,
                              std::uint64_t seed);

struct SweepRow {
  std::uint64_t value = 0;  // dataset size or node count
  double accuracy = 0.0;
  std::optional<double> false_positive_rate;
  std::optional<double> false_negative_rate;
  double global_loss = 0.0;
  double train_seconds = 0.0;
};

// Repeats the experiment across dataset sizes (strictly increasing).
// Each point writes a full run under <out_dir>/size_<n>/ and the trend
// lands in <out_dir>/sweep.csv.
std::vector<SweepRow> sweep_dataset_size(const ExperimentConfig& base,
                                         std::span<const std::uint32_t> sizes);

// Same sweep over client counts, one fixed dataset re-sharded per point;
// runs land under <out_dir>/nodes_<n>/.
std::vector<SweepRow> sweep_nodes(const ExperimentConfig& base,
                                  std::span<const std::uint32_t> node_counts);

struct CompareRow {
  std::string setting;
  double accuracy = 0.0;
  std::optional<double> false_positive_rate;
  std::optional<double> false_negative_rate;
  double train_seconds = 0.0;
  double detect_seconds = 0.0;
};

// Four-way comparison on one dataset and split: centralized/federated
// crossed with best-single-modality/fused. Writes <out_dir>/compare.csv.
std::vector<CompareRow> compare_models(const ExperimentConfig& cfg);

}  // namespace fedsentry
