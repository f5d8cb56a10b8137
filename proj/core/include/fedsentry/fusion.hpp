#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fedsentry {

// One modality's feature vector for a single sample.
struct ModalityFeature {
  std::uint32_t modality_id = 0;
  std::vector<double> vector;
};

// Per-modality fusion weights; entries are non-negative.
struct FusionWeights {
  std::vector<double> weights;

  static FusionWeights uniform(std::size_t m);
  static FusionWeights one_hot(std::size_t m, std::size_t index);
  void validate() const;
};

// Fused feature vector plus binary threat label.
struct FusedSample {
  std::vector<double> vector;
  std::uint8_t label = 0;
};

// Raw per-modality record before feature extraction. Numeric modalities
// carry a vector, text modalities a token string.
using RawRecord = std::variant<std::vector<double>, std::string>;

// Deterministic stand-in extractors for the per-modality encoders.
//   identity   passes a numeric record through unchanged
//   affine     matrix * record + offset (projects/pads to the output dim)
//   hash_text  whitespace tokens hashed into bucket counts
struct ExtractorSpec {
  enum class Kind { identity, affine, hash_text };

  std::uint32_t modality_id = 0;
  Kind kind = Kind::identity;
  std::vector<std::vector<double>> matrix;  // affine: rows = output dim
  std::vector<double> offset;               // affine: size = output dim
  std::uint32_t buckets = 0;                // hash_text: output dim

  void validate() const;
};

ModalityFeature extract(const ExtractorSpec& spec, const RawRecord& raw);

// Weighted summation of per-modality features. The inputs must cover
// modality ids 0..m-1 exactly once (any order) and share one dimension;
// w must have one weight per modality.
std::vector<double> fuse(std::span<const ModalityFeature> features,
                         const FusionWeights& w);

// w / sum(w); the sum must be positive.
FusionWeights normalize_weights(const FusionWeights& w);

const char* to_string(ExtractorSpec::Kind kind);
ExtractorSpec::Kind extractor_kind_from_string(const std::string& name);

}  // namespace fedsentry
