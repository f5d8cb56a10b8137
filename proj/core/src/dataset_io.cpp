#include "fedsentry/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsentry {
namespace {

constexpr const char* kFormatName = "fedsentry-dataset";
constexpr int kFormatVersion = 1;

void put_double_le(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int shift = 0; shift < 64; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((bits >> shift) & 0xff));
  }
}

double get_double_le(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

std::filesystem::path meta_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta");
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("dataset meta: bad value for " + key);
  }
}

}  // namespace

void save_dataset(const RawDataset& data, const std::filesystem::path& path) {
  const std::size_t row_doubles =
      static_cast<std::size_t>(data.modalities) * data.feature_dim + 1;
  if (data.values.size() !=
      data.size() * (row_doubles - 1)) {
    throw std::invalid_argument("save_dataset: value buffer does not match shape");
  }

  std::ofstream meta(meta_path(path), std::ios::trunc);
  if (!meta) {
    throw std::runtime_error("cannot write " + meta_path(path).string());
  }
  meta << "format: " << kFormatName << "\n"
       << "version: " << kFormatVersion << "\n"
       << "samples: " << data.size() << "\n"
       << "modalities: " << data.modalities << "\n"
       << "feature_dim: " << data.feature_dim << "\n";
  meta.flush();
  if (!meta) {
    throw std::runtime_error("write failed: " + meta_path(path).string());
  }

  std::vector<std::uint8_t> bytes;
  bytes.reserve(data.size() * row_doubles * 8);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t offset = i * (row_doubles - 1);
    for (std::size_t k = 0; k < row_doubles - 1; ++k) {
      put_double_le(bytes, data.values[offset + k]);
    }
    put_double_le(bytes, data.labels[i] ? 1.0 : 0.0);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

RawDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream meta(meta_path(path));
  if (!meta) {
    throw std::runtime_error("cannot read " + meta_path(path).string());
  }
  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) {
      throw std::runtime_error("dataset meta: malformed line '" + line + "'");
    }
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());
    fields[key] = value;
  }
  for (const char* key : {"format", "version", "samples", "modalities", "feature_dim"}) {
    if (!fields.contains(key)) {
      throw std::runtime_error("dataset meta: missing key " + std::string(key));
    }
  }
  if (fields["format"] != kFormatName) {
    throw std::runtime_error("dataset meta: unknown format " + fields["format"]);
  }
  if (parse_u64(fields["version"], "version") != kFormatVersion) {
    throw std::runtime_error("dataset meta: unsupported version " + fields["version"]);
  }
  const std::uint64_t samples = parse_u64(fields["samples"], "samples");
  const std::uint64_t modalities = parse_u64(fields["modalities"], "modalities");
  const std::uint64_t feature_dim = parse_u64(fields["feature_dim"], "feature_dim");
  if (samples == 0 || modalities == 0 || feature_dim == 0) {
    throw std::runtime_error("dataset meta: empty shape");
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  const std::size_t row_doubles = modalities * feature_dim + 1;
  const std::size_t expected_bytes = samples * row_doubles * 8;
  std::vector<std::uint8_t> bytes(expected_bytes);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(expected_bytes));
  if (static_cast<std::size_t>(in.gcount()) != expected_bytes) {
    throw std::runtime_error("dataset file truncated: " + path.string());
  }
  in.get();
  if (!in.eof()) {
    throw std::runtime_error("dataset file longer than declared: " + path.string());
  }

  RawDataset data;
  data.modalities = static_cast<std::uint32_t>(modalities);
  data.feature_dim = static_cast<std::uint32_t>(feature_dim);
  data.labels.resize(samples);
  data.values.resize(samples * (row_doubles - 1));
  for (std::uint64_t i = 0; i < samples; ++i) {
    const std::uint8_t* row = bytes.data() + i * row_doubles * 8;
    for (std::size_t k = 0; k < row_doubles - 1; ++k) {
      const double v = get_double_le(row + k * 8);
      if (!std::isfinite(v)) {
        throw std::runtime_error("dataset file has non-finite value: " + path.string());
      }
      data.values[i * (row_doubles - 1) + k] = v;
    }
    const double label = get_double_le(row + (row_doubles - 1) * 8);
    if (label != 0.0 && label != 1.0) {
      throw std::runtime_error("dataset file has bad label: " + path.string());
    }
    data.labels[i] = label == 1.0 ? 1 : 0;
  }
  return data;
}

}  // namespace fedsentry
