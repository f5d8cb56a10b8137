#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>

namespace fedsentry {

// Locale-independent shortest-round-trip formatting, so output files are
// byte-identical across environments. NaN prints as "nan", infinities as
// "inf"/"-inf".
std::string format_double(double v);
std::string format_double(const std::optional<double>& v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void row(std::span<const std::string> fields);
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

}  // namespace fedsentry
