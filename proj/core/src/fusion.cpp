#include "fedsentry/fusion.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fedsentry {

FusionWeights FusionWeights::uniform(std::size_t m) {
  if (m == 0) {
    throw std::invalid_argument("at least one modality required");
  }
  return {std::vector<double>(m, 1.0 / static_cast<double>(m))};
}

FusionWeights FusionWeights::one_hot(std::size_t m, std::size_t index) {
  if (index >= m) {
    throw std::invalid_argument("one-hot index out of range");
  }
  FusionWeights w{std::vector<double>(m, 0.0)};
  w.weights[index] = 1.0;
  return w;
}

void FusionWeights::validate() const {
  if (weights.empty()) {
    throw std::invalid_argument("fusion weights must not be empty");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("fusion weights must be non-negative and finite");
    }
  }
}

void ExtractorSpec::validate() const {
  switch (kind) {
    case Kind::identity:
      break;
    case Kind::affine: {
      if (matrix.empty()) {
        throw std::invalid_argument("affine extractor requires a matrix");
      }
      const std::size_t cols = matrix.front().size();
      if (cols == 0) {
        throw std::invalid_argument("affine matrix must have at least one column");
      }
      for (const auto& row : matrix) {
        if (row.size() != cols) {
          throw std::invalid_argument("affine matrix rows must have equal length");
        }
      }
      if (offset.size() != matrix.size()) {
        throw std::invalid_argument("affine offset size must match matrix rows");
      }
      break;
    }
    case Kind::hash_text:
      if (buckets == 0) {
        throw std::invalid_argument("hash_text extractor requires a positive bucket count");
      }
      break;
  }
}

static std::uint64_t fnv1a64(const std::string& token) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

ModalityFeature extract(const ExtractorSpec& spec, const RawRecord& raw) {
  spec.validate();
  switch (spec.kind) {
    case ExtractorSpec::Kind::identity: {
      const auto* vec = std::get_if<std::vector<double>>(&raw);
      if (vec == nullptr) {
        throw std::invalid_argument("identity extractor expects a numeric record");
      }
      return {spec.modality_id, *vec};
    }
    case ExtractorSpec::Kind::affine: {
      const auto* vec = std::get_if<std::vector<double>>(&raw);
      if (vec == nullptr) {
        throw std::invalid_argument("affine extractor expects a numeric record");
      }
      if (vec->size() != spec.matrix.front().size()) {
        throw std::invalid_argument("affine extractor input dimension mismatch");
      }
      std::vector<double> out(spec.matrix.size(), 0.0);
      for (std::size_t r = 0; r < spec.matrix.size(); ++r) {
        double acc = spec.offset[r];
        const auto& row = spec.matrix[r];
        for (std::size_t c = 0; c < row.size(); ++c) {
          acc += row[c] * (*vec)[c];
        }
        out[r] = acc;
      }
      return {spec.modality_id, std::move(out)};
    }
    case ExtractorSpec::Kind::hash_text: {
      const auto* text = std::get_if<std::string>(&raw);
      if (text == nullptr) {
        throw std::invalid_argument("hash_text extractor expects a text record");
      }
      std::vector<double> counts(spec.buckets, 0.0);
      std::istringstream stream(*text);
      std::string token;
      while (stream >> token) {
        counts[fnv1a64(token) % spec.buckets] += 1.0;
      }
      return {spec.modality_id, std::move(counts)};
    }
  }
  throw std::logic_error("unreachable extractor kind");
}

std::vector<double> fuse(std::span<const ModalityFeature> features,
                         const FusionWeights& w) {
  w.validate();
  const std::size_t m = w.weights.size();
  if (features.size() != m) {
    throw std::invalid_argument("feature count must match weight count");
  }
  // Key by modality id so input order never matters.
  std::vector<const ModalityFeature*> by_id(m, nullptr);
  for (const auto& feature : features) {
    if (feature.modality_id >= m) {
      throw std::invalid_argument("modality id out of range");
    }
    if (by_id[feature.modality_id] != nullptr) {
      throw std::invalid_argument("duplicate modality id");
    }
    by_id[feature.modality_id] = &feature;
  }
  const std::size_t dim = by_id[0]->vector.size();
  std::vector<double> fused(dim, 0.0);
  for (std::size_t id = 0; id < m; ++id) {
    const auto& vec = by_id[id]->vector;
    if (vec.size() != dim) {
      throw std::invalid_argument("modality feature dimension mismatch");
    }
    const double weight = w.weights[id];
    for (std::size_t j = 0; j < dim; ++j) {
      fused[j] += weight * vec[j];
    }
  }
  return fused;
}

FusionWeights normalize_weights(const FusionWeights& w) {
  w.validate();
  double total = 0.0;
  for (double value : w.weights) {
    total += value;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("cannot normalize all-zero fusion weights");
  }
  FusionWeights out = w;
  for (double& value : out.weights) {
    value /= total;
  }
  return out;
}

const char* to_string(ExtractorSpec::Kind kind) {
  switch (kind) {
    case ExtractorSpec::Kind::identity:
      return "identity";
    case ExtractorSpec::Kind::affine:
      return "affine";
    case ExtractorSpec::Kind::hash_text:
      return "hash_text";
  }
  return "unknown";
}

ExtractorSpec::Kind extractor_kind_from_string(const std::string& name) {
  if (name == "identity") {
    return ExtractorSpec::Kind::identity;
  }
  if (name == "affine") {
    return ExtractorSpec::Kind::affine;
  }
  if (name == "hash_text") {
    return ExtractorSpec::Kind::hash_text;
  }
  throw std::invalid_argument("unknown extractor kind: " + name);
}

}  // namespace fedsentry
