#include "fedsentry/compression.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>

namespace fedsentry {

std::string to_string(CompressionMode mode) {
  switch (mode) {
    case CompressionMode::none:
      return "none";
    case CompressionMode::topk:
      return "topk";
  }
  throw std::logic_error("to_string: bad CompressionMode");
}

CompressionMode compression_mode_from_string(const std::string& s) {
  if (s == "none") return CompressionMode::none;
  if (s == "topk") return CompressionMode::topk;
  throw std::invalid_argument("unknown compression mode: " + s);
}

void CompressionSpec::validate() const {
  if (mode == CompressionMode::topk && k == 0) {
    throw std::invalid_argument("compression: k must be positive for topk");
  }
}

SparseUpdate compress_topk(const ParamVector& update, std::uint32_t k) {
  if (k == 0) {
    throw std::invalid_argument("compress_topk: k must be positive");
  }
  const std::size_t dim = update.dim();
  const std::size_t keep = std::min<std::size_t>(k, dim);

  std::vector<std::uint32_t> order(dim);
  std::iota(order.begin(), order.end(), 0u);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                    order.end(), [&](std::uint32_t a, std::uint32_t b) {
                      const double ma = std::fabs(update[a]);
                      const double mb = std::fabs(update[b]);
                      if (ma != mb) return ma > mb;
                      return a < b;
                    });
  order.resize(keep);
  std::sort(order.begin(), order.end());

  SparseUpdate out;
  out.dim = static_cast<std::uint32_t>(dim);
  out.indices = std::move(order);
  out.values.reserve(keep);
  for (std::uint32_t idx : out.indices) {
    out.values.push_back(update[idx]);
  }
  return out;
}

ParamVector decompress(const SparseUpdate& sparse) {
  if (sparse.indices.size() != sparse.values.size()) {
    throw std::invalid_argument("decompress: index/value size mismatch");
  }
  ParamVector out(sparse.dim);
  for (std::size_t i = 0; i < sparse.indices.size(); ++i) {
    const std::uint32_t idx = sparse.indices[i];
    if (idx >= sparse.dim) {
      throw std::invalid_argument("decompress: index out of range");
    }
    out[idx] = sparse.values[i];
  }
  return out;
}

ParamVector apply_compression(const ParamVector& update, const CompressionSpec& spec) {
  spec.validate();
  if (!spec.active()) {
    return update;
  }
  return decompress(compress_topk(update, spec.k));
}

}  // namespace fedsentry
