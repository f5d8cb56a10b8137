#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedsentry/compression.hpp"
#include "fedsentry/federation.hpp"
#include "fedsentry/fusion.hpp"
#include "fedsentry/model.hpp"
#include "fedsentry/privacy.hpp"
#include "fedsentry/synthetic.hpp"

namespace fedsentry {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Independent rng streams hung off the experiment seed, one tag each, so
// data generation, splitting, sharding and per-client training never
// share draws. Client j trains with derive_seed(seed, client, j).
namespace seed_tags {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t split = 2;
inline constexpr std::uint64_t partition = 3;
inline constexpr std::uint64_t client = 4;
inline constexpr std::uint64_t schedule = 5;
}  // namespace seed_tags

enum class RoundMode { sync, async };
enum class TransportKind { sim, socket };
enum class NodeWeightMode { uniform, sample_proportional };

std::string to_string(RoundMode mode);
std::string to_string(TransportKind kind);
std::string to_string(NodeWeightMode mode);

struct DataConfig {
  std::uint32_t modalities = 6;
  std::uint32_t feature_dim = 8;
  double noise_std = 1.0;
  std::uint32_t n_samples = 10000;
  double threat_fraction = 0.5;
  double dirichlet_beta = 100.0;
  double train_fraction = 0.7;
  // Either an explicit geometry or the shortcut that builds one where
  // each modality alone tops out at the given accuracy.
  std::optional<double> complementary_accuracy = 0.76;
  std::vector<ModalityMeans> class_means;
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::string out_dir = "runs/out";
  std::uint32_t clients = 10;
  std::uint32_t rounds = 50;
  LocalTrainConfig train;
  double threshold = 0.5;
  RoundMode mode = RoundMode::sync;
  TransportKind transport = TransportKind::sim;
  std::uint32_t workers = 1;
  NodeWeightMode node_weight_mode = NodeWeightMode::uniform;
  LrSchedule lr{1.0, 0.05};
  std::optional<std::vector<double>> fusion_weights;  // default: uniform
  std::vector<ExtractorSpec> extractors;              // default: identity per modality
  DpConfig dp;
  CompressionSpec compression;
  AsyncOptions async_options;
  DataConfig data;
  bool export_dataset = false;
};

ExperimentConfig default_config();

// Strict parsers: unknown keys and type mismatches raise ConfigError with
// the offending field path.
ExperimentConfig config_from_string(const std::string& text);
ExperimentConfig config_from_file(const std::filesystem::path& path);

// Fills every optional field (fusion weights, extractors, class means) and
// validates the result. Running a resolved config reproduces the original
// run exactly.
ExperimentConfig resolve(const ExperimentConfig& cfg);

// Serializes a resolved config; parsing the output yields the same config.
std::string config_to_json(const ExperimentConfig& cfg);

// The generator spec implied by a resolved config. The data stream is
// seeded independently of the training streams.
SyntheticSpec synthetic_spec(const ExperimentConfig& cfg);

}  // namespace fedsentry
