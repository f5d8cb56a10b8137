#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsentry/param_vector.hpp"

namespace fedsentry {

enum class CompressionMode { none, topk };

std::string to_string(CompressionMode mode);
CompressionMode compression_mode_from_string(const std::string& s);

struct CompressionSpec {
  CompressionMode mode = CompressionMode::none;
  std::uint32_t k = 0;  // kept coordinates per update when mode == topk

  void validate() const;
  bool active() const { return mode == CompressionMode::topk; }
};

// Sparse view of an update: `indices` ascending, one value per index.
struct SparseUpdate {
  std::uint32_t dim = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
};

// Keeps the k entries with the largest |value|; ties break toward the
// lower index. k >= dim returns everything.
SparseUpdate compress_topk(const ParamVector& update, std::uint32_t k);

// Scatters the kept values into a dense zero vector.
ParamVector decompress(const SparseUpdate& sparse);

// Applies `spec` to `update` as a dense round trip (identity for none).
ParamVector apply_compression(const ParamVector& update, const CompressionSpec& spec);

}  // namespace fedsentry
