#pragma once

#include <filesystem>

#include "fedsentry/synthetic.hpp"

namespace fedsentry {

// On-disk dataset: `path` holds little-endian doubles, one row per sample
// (modalities * feature_dim values followed by the label as 0.0 or 1.0),
// and `path`.meta holds the shape as readable key: value lines.
void save_dataset(const RawDataset& data, const std::filesystem::path& path);

RawDataset load_dataset(const std::filesystem::path& path);

}  // namespace fedsentry
