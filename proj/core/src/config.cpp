#include "fedsentry/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedsentry/rng.hpp"

namespace fedsentry {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      fail(join(path, item.key()), "unknown key");
    }
  }
}

const json& expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

double get_double(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::uint64_t get_u64(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) fail(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::uint32_t get_u32(const json& j, const std::string& path) {
  const std::uint64_t v = get_u64(j, path);
  if (v > 0xffffffffULL) fail(path, "value does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> get_double_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_double(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

template <typename Fn>
void with_field(const json& j, const char* key, const std::string& path, Fn&& fn) {
  const auto it = j.find(key);
  if (it != j.end()) {
    fn(*it, join(path, key));
  }
}

void parse_lr(const json& j, const std::string& path, ExperimentConfig& cfg) {
  expect_object(j, path);
  check_keys(j, path, {"alpha0", "lambda"});
  double alpha0 = cfg.lr.alpha0;
  double lambda = cfg.lr.lambda;
  with_field(j, "alpha0", path, [&](const json& v, const std::string& p) {
    alpha0 = get_double(v, p);
  });
  with_field(j, "lambda", path, [&](const json& v, const std::string& p) {
    lambda = get_double(v, p);
  });
  try {
    cfg.lr = LrSchedule(alpha0, lambda);
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

ExtractorSpec parse_extractor(const json& j, const std::string& path) {
  expect_object(j, path);
  const auto kind_it = j.find("kind");
  if (kind_it == j.end()) fail(path, "missing key kind");
  const std::string kind_name = get_string(*kind_it, join(path, "kind"));

  ExtractorSpec spec;
  try {
    spec.kind = extractor_kind_from_string(kind_name);
  } catch (const std::exception& e) {
    fail(join(path, "kind"), e.what());
  }
  switch (spec.kind) {
    case ExtractorSpec::Kind::identity:
      check_keys(j, path, {"kind"});
      break;
    case ExtractorSpec::Kind::affine: {
      check_keys(j, path, {"kind", "matrix", "offset"});
      const auto matrix_it = j.find("matrix");
      if (matrix_it == j.end()) fail(path, "affine extractor requires matrix");
      const std::string matrix_path = join(path, "matrix");
      if (!matrix_it->is_array()) fail(matrix_path, "expected an array of rows");
      for (std::size_t r = 0; r < matrix_it->size(); ++r) {
        spec.matrix.push_back(get_double_vector(
            (*matrix_it)[r], matrix_path + "[" + std::to_string(r) + "]"));
      }
      with_field(j, "offset", path, [&](const json& v, const std::string& p) {
        spec.offset = get_double_vector(v, p);
      });
      if (spec.offset.empty()) {
        spec.offset.assign(spec.matrix.size(), 0.0);
      }
      break;
    }
    case ExtractorSpec::Kind::hash_text: {
      check_keys(j, path, {"kind", "buckets"});
      const auto buckets_it = j.find("buckets");
      if (buckets_it == j.end()) fail(path, "hash_text extractor requires buckets");
      spec.buckets = get_u32(*buckets_it, join(path, "buckets"));
      break;
    }
  }
  try {
    spec.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return spec;
}

void parse_dp(const json& j, const std::string& path, DpConfig& dp) {
  expect_object(j, path);
  check_keys(j, path, {"enabled", "sigma", "clip_norm", "delta"});
  with_field(j, "enabled", path, [&](const json& v, const std::string& p) {
    dp.enabled = get_bool(v, p);
  });
  with_field(j, "sigma", path, [&](const json& v, const std::string& p) {
    dp.sigma = get_double(v, p);
  });
  with_field(j, "clip_norm", path, [&](const json& v, const std::string& p) {
    dp.clip_norm = get_double(v, p);
  });
  with_field(j, "delta", path, [&](const json& v, const std::string& p) {
    dp.delta = get_double(v, p);
  });
  try {
    dp.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

void parse_compression(const json& j, const std::string& path, CompressionSpec& spec) {
  expect_object(j, path);
  check_keys(j, path, {"mode", "k"});
  with_field(j, "mode", path, [&](const json& v, const std::string& p) {
    try {
      spec.mode = compression_mode_from_string(get_string(v, p));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(p, e.what());
    }
  });
  with_field(j, "k", path, [&](const json& v, const std::string& p) {
    spec.k = get_u32(v, p);
  });
  try {
    spec.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

void parse_async(const json& j, const std::string& path, AsyncOptions& opts) {
  expect_object(j, path);
  check_keys(j, path, {"schedule", "base_mix", "max_staleness"});
  with_field(j, "schedule", path, [&](const json& v, const std::string& p) {
    try {
      opts.schedule = async_schedule_from_string(get_string(v, p));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(p, e.what());
    }
  });
  with_field(j, "base_mix", path, [&](const json& v, const std::string& p) {
    opts.base_mix = get_double(v, p);
  });
  with_field(j, "max_staleness", path, [&](const json& v, const std::string& p) {
    opts.max_staleness = get_u32(v, p);
  });
  try {
    opts.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

std::vector<double> parse_mean(const json& j, const std::string& path) {
  return get_double_vector(j, path);
}

void parse_data(const json& j, const std::string& path, DataConfig& data) {
  expect_object(j, path);
  check_keys(j, path,
             {"modalities", "feature_dim", "noise_std", "n_samples",
              "threat_fraction", "dirichlet_beta", "train_fraction",
              "complementary", "class_means"});
  with_field(j, "modalities", path, [&](const json& v, const std::string& p) {
    data.modalities = get_u32(v, p);
  });
  with_field(j, "feature_dim", path, [&](const json& v, const std::string& p) {
    data.feature_dim = get_u32(v, p);
  });
  with_field(j, "noise_std", path, [&](const json& v, const std::string& p) {
    data.noise_std = get_double(v, p);
  });
  with_field(j, "n_samples", path, [&](const json& v, const std::string& p) {
    data.n_samples = get_u32(v, p);
  });
  with_field(j, "threat_fraction", path, [&](const json& v, const std::string& p) {
    data.threat_fraction = get_double(v, p);
  });
  with_field(j, "dirichlet_beta", path, [&](const json& v, const std::string& p) {
    data.dirichlet_beta = get_double(v, p);
  });
  with_field(j, "train_fraction", path, [&](const json& v, const std::string& p) {
    data.train_fraction = get_double(v, p);
  });

  const bool has_complementary = j.contains("complementary");
  const bool has_means = j.contains("class_means");
  if (has_complementary && has_means) {
    fail(path, "complementary and class_means are mutually exclusive");
  }
  if (has_complementary) {
    const std::string p = join(path, "complementary");
    const json& c = expect_object(j["complementary"], p);
    check_keys(c, p, {"unimodal_accuracy"});
    const auto it = c.find("unimodal_accuracy");
    if (it == c.end()) fail(p, "missing key unimodal_accuracy");
    data.complementary_accuracy = get_double(*it, join(p, "unimodal_accuracy"));
    data.class_means.clear();
  }
  if (has_means) {
    const std::string p = join(path, "class_means");
    const json& means = j["class_means"];
    if (!means.is_array()) fail(p, "expected an array");
    data.class_means.clear();
    for (std::size_t m = 0; m < means.size(); ++m) {
      const std::string mp = p + "[" + std::to_string(m) + "]";
      expect_object(means[m], mp);
      check_keys(means[m], mp, {"benign", "threat"});
      ModalityMeans mm;
      const auto benign_it = means[m].find("benign");
      const auto threat_it = means[m].find("threat");
      if (benign_it == means[m].end() || threat_it == means[m].end()) {
        fail(mp, "requires benign and threat means");
      }
      mm.benign = parse_mean(*benign_it, join(mp, "benign"));
      mm.threat = parse_mean(*threat_it, join(mp, "threat"));
      data.class_means.push_back(std::move(mm));
    }
    data.complementary_accuracy.reset();
  }
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg = default_config();
  expect_object(j, "");
  check_keys(j, "",
             {"seed", "out_dir", "clients", "rounds", "local_epochs", "batch_size",
              "threshold", "mode", "transport", "workers", "node_weight_mode", "lr",
              "fusion", "extractors", "dp", "compression", "async", "data",
              "export_dataset"});

  with_field(j, "seed", "", [&](const json& v, const std::string& p) {
    cfg.seed = get_u64(v, p);
  });
  with_field(j, "out_dir", "", [&](const json& v, const std::string& p) {
    cfg.out_dir = get_string(v, p);
  });
  with_field(j, "clients", "", [&](const json& v, const std::string& p) {
    cfg.clients = get_u32(v, p);
  });
  with_field(j, "rounds", "", [&](const json& v, const std::string& p) {
    cfg.rounds = get_u32(v, p);
  });
  with_field(j, "local_epochs", "", [&](const json& v, const std::string& p) {
    cfg.train.epochs = get_u32(v, p);
  });
  with_field(j, "batch_size", "", [&](const json& v, const std::string& p) {
    cfg.train.batch_size = get_u32(v, p);
  });
  with_field(j, "threshold", "", [&](const json& v, const std::string& p) {
    cfg.threshold = get_double(v, p);
  });
  with_field(j, "mode", "", [&](const json& v, const std::string& p) {
    const std::string s = get_string(v, p);
    if (s == "sync") {
      cfg.mode = RoundMode::sync;
    } else if (s == "async") {
      cfg.mode = RoundMode::async;
    } else {
      fail(p, "expected sync or async");
    }
  });
  with_field(j, "transport", "", [&](const json& v, const std::string& p) {
    const std::string s = get_string(v, p);
    if (s == "sim") {
      cfg.transport = TransportKind::sim;
    } else if (s == "socket") {
      cfg.transport = TransportKind::socket;
    } else {
      fail(p, "expected sim or socket");
    }
  });
  with_field(j, "workers", "", [&](const json& v, const std::string& p) {
    cfg.workers = get_u32(v, p);
  });
  with_field(j, "node_weight_mode", "", [&](const json& v, const std::string& p) {
    const std::string s = get_string(v, p);
    if (s == "uniform") {
      cfg.node_weight_mode = NodeWeightMode::uniform;
    } else if (s == "sample_proportional") {
      cfg.node_weight_mode = NodeWeightMode::sample_proportional;
    } else {
      fail(p, "expected uniform or sample_proportional");
    }
  });
  with_field(j, "lr", "", [&](const json& v, const std::string& p) {
    parse_lr(v, p, cfg);
  });
  with_field(j, "fusion", "", [&](const json& v, const std::string& p) {
    expect_object(v, p);
    check_keys(v, p, {"weights"});
    with_field(v, "weights", p, [&](const json& w, const std::string& wp) {
      cfg.fusion_weights = get_double_vector(w, wp);
    });
  });
  with_field(j, "extractors", "", [&](const json& v, const std::string& p) {
    if (!v.is_array()) fail(p, "expected an array");
    cfg.extractors.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      ExtractorSpec spec = parse_extractor(v[i], p + "[" + std::to_string(i) + "]");
      spec.modality_id = static_cast<std::uint32_t>(i);
      cfg.extractors.push_back(std::move(spec));
    }
  });
  with_field(j, "dp", "", [&](const json& v, const std::string& p) {
    parse_dp(v, p, cfg.dp);
  });
  with_field(j, "compression", "", [&](const json& v, const std::string& p) {
    parse_compression(v, p, cfg.compression);
  });
  with_field(j, "async", "", [&](const json& v, const std::string& p) {
    parse_async(v, p, cfg.async_options);
  });
  with_field(j, "data", "", [&](const json& v, const std::string& p) {
    parse_data(v, p, cfg.data);
  });
  with_field(j, "export_dataset", "", [&](const json& v, const std::string& p) {
    cfg.export_dataset = get_bool(v, p);
  });
  return cfg;
}

std::size_t extractor_output_dim(const ExtractorSpec& spec, std::size_t input_dim,
                                 const std::string& path) {
  switch (spec.kind) {
    case ExtractorSpec::Kind::identity:
      return input_dim;
    case ExtractorSpec::Kind::affine:
      if (spec.matrix.front().size() != input_dim) {
        fail(path, "affine matrix columns must match feature_dim");
      }
      return spec.matrix.size();
    case ExtractorSpec::Kind::hash_text:
      fail(path, "hash_text cannot extract generated numeric records");
  }
  fail(path, "bad extractor kind");
}

}  // namespace

std::string to_string(RoundMode mode) {
  return mode == RoundMode::sync ? "sync" : "async";
}

std::string to_string(TransportKind kind) {
  return kind == TransportKind::sim ? "sim" : "socket";
}

std::string to_string(NodeWeightMode mode) {
  return mode == NodeWeightMode::uniform ? "uniform" : "sample_proportional";
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig config_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

ExperimentConfig config_from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_from_string(buffer.str());
}

ExperimentConfig resolve(const ExperimentConfig& input) {
  ExperimentConfig cfg = input;

  if (cfg.clients == 0) throw ConfigError("clients: must be positive");
  if (cfg.workers == 0) throw ConfigError("workers: must be positive");
  if (!std::isfinite(cfg.threshold) || cfg.threshold < 0.0 || cfg.threshold > 1.0) {
    throw ConfigError("threshold: must be in [0, 1]");
  }
  try {
    cfg.train.validate();
    cfg.dp.validate();
    cfg.compression.validate();
    cfg.async_options.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  DataConfig& data = cfg.data;
  if (data.class_means.empty()) {
    if (!data.complementary_accuracy.has_value()) {
      throw ConfigError("data: needs class_means or complementary");
    }
    try {
      const SyntheticSpec spec = make_complementary(
          data.modalities, data.feature_dim, *data.complementary_accuracy,
          data.noise_std, data.n_samples, data.threat_fraction, 0);
      data.class_means = spec.class_means;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("data.complementary: ") + e.what());
    }
    data.complementary_accuracy.reset();
  } else {
    data.complementary_accuracy.reset();
  }
  if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0)) {
    throw ConfigError("data.train_fraction: must be in (0, 1)");
  }
  if (!std::isfinite(data.dirichlet_beta) || data.dirichlet_beta <= 0.0) {
    throw ConfigError("data.dirichlet_beta: must be positive");
  }
  try {
    synthetic_spec(cfg).validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("data: ") + e.what());
  }
  const auto train_count = static_cast<std::size_t>(std::llround(
      static_cast<double>(data.n_samples) * data.train_fraction));
  if (train_count < cfg.clients) {
    throw ConfigError("data.n_samples: training split smaller than client count");
  }
  if (train_count >= data.n_samples) {
    throw ConfigError("data.train_fraction: leaves no test samples");
  }

  if (!cfg.fusion_weights.has_value()) {
    cfg.fusion_weights = FusionWeights::uniform(data.modalities).weights;
  }
  if (cfg.fusion_weights->size() != data.modalities) {
    throw ConfigError("fusion.weights: needs one weight per modality");
  }
  try {
    FusionWeights{*cfg.fusion_weights}.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("fusion.weights: ") + e.what());
  }

  if (cfg.extractors.empty()) {
    for (std::uint32_t m = 0; m < data.modalities; ++m) {
      ExtractorSpec spec;
      spec.kind = ExtractorSpec::Kind::identity;
      spec.modality_id = m;
      cfg.extractors.push_back(std::move(spec));
    }
  }
  if (cfg.extractors.size() != data.modalities) {
    throw ConfigError("extractors: needs one entry per modality");
  }
  std::size_t fused_dim = 0;
  for (std::size_t i = 0; i < cfg.extractors.size(); ++i) {
    cfg.extractors[i].modality_id = static_cast<std::uint32_t>(i);
    const std::string path = "extractors[" + std::to_string(i) + "]";
    try {
      cfg.extractors[i].validate();
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
    const std::size_t out_dim =
        extractor_output_dim(cfg.extractors[i], data.feature_dim, path);
    if (i == 0) {
      fused_dim = out_dim;
    } else if (out_dim != fused_dim) {
      fail(path, "extractor output dimensions must agree for fusion");
    }
  }

  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["clients"] = cfg.clients;
  j["rounds"] = cfg.rounds;
  j["local_epochs"] = cfg.train.epochs;
  j["batch_size"] = cfg.train.batch_size;
  j["threshold"] = cfg.threshold;
  j["mode"] = to_string(cfg.mode);
  j["transport"] = to_string(cfg.transport);
  j["workers"] = cfg.workers;
  j["node_weight_mode"] = to_string(cfg.node_weight_mode);
  j["lr"] = {{"alpha0", cfg.lr.alpha0}, {"lambda", cfg.lr.lambda}};
  if (cfg.fusion_weights.has_value()) {
    j["fusion"] = {{"weights", *cfg.fusion_weights}};
  }
  json extractors = json::array();
  for (const ExtractorSpec& spec : cfg.extractors) {
    json e;
    e["kind"] = to_string(spec.kind);
    if (spec.kind == ExtractorSpec::Kind::affine) {
      e["matrix"] = spec.matrix;
      e["offset"] = spec.offset;
    } else if (spec.kind == ExtractorSpec::Kind::hash_text) {
      e["buckets"] = spec.buckets;
    }
    extractors.push_back(std::move(e));
  }
  if (!extractors.empty()) {
    j["extractors"] = std::move(extractors);
  }
  j["dp"] = {{"enabled", cfg.dp.enabled},
             {"sigma", cfg.dp.sigma},
             {"clip_norm", cfg.dp.clip_norm},
             {"delta", cfg.dp.delta}};
  j["compression"] = {{"mode", to_string(cfg.compression.mode)},
                      {"k", cfg.compression.k}};
  j["async"] = {{"schedule", to_string(cfg.async_options.schedule)},
                {"base_mix", cfg.async_options.base_mix},
                {"max_staleness", cfg.async_options.max_staleness}};
  json data;
  data["modalities"] = cfg.data.modalities;
  data["feature_dim"] = cfg.data.feature_dim;
  data["noise_std"] = cfg.data.noise_std;
  data["n_samples"] = cfg.data.n_samples;
  data["threat_fraction"] = cfg.data.threat_fraction;
  data["dirichlet_beta"] = cfg.data.dirichlet_beta;
  data["train_fraction"] = cfg.data.train_fraction;
  if (cfg.data.complementary_accuracy.has_value()) {
    data["complementary"] = {{"unimodal_accuracy", *cfg.data.complementary_accuracy}};
  }
  if (!cfg.data.class_means.empty()) {
    json means = json::array();
    for (const ModalityMeans& mm : cfg.data.class_means) {
      means.push_back({{"benign", mm.benign}, {"threat", mm.threat}});
    }
    data["class_means"] = std::move(means);
  }
  j["data"] = std::move(data);
  j["export_dataset"] = cfg.export_dataset;
  return j.dump(2) + "\n";
}

SyntheticSpec synthetic_spec(const ExperimentConfig& cfg) {
  SyntheticSpec spec;
  spec.modalities = cfg.data.modalities;
  spec.feature_dim = cfg.data.feature_dim;
  spec.class_means = cfg.data.class_means;
  spec.noise_std = cfg.data.noise_std;
  spec.n_samples = cfg.data.n_samples;
  spec.threat_fraction = cfg.data.threat_fraction;
  spec.seed = derive_seed(cfg.seed, seed_tags::data);
  return spec;
}

}  // namespace fedsentry
