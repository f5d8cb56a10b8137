#include "fedsentry/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace fedsentry {
namespace {

bool needs_quoting(const std::string& field) {
  return field.find_first_of(",\"\n") != std::string::npos;
}

std::string quoted(const std::string& field) {
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  if (result.ec != std::errc()) {
    throw std::runtime_error("format_double: conversion failed");
  }
  return std::string(buf, result.ptr);
}

std::string format_double(const std::optional<double>& v) {
  return v.has_value() ? format_double(*v) : "nan";
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : path_(path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
}

void CsvWriter::row(std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << (needs_quoting(fields[i]) ? quoted(fields[i]) : fields[i]);
  }
  out_ << '\n';
  if (!out_) {
    throw std::runtime_error("write failed: " + path_.string());
  }
}

void CsvWriter::close() {
  out_.flush();
  if (!out_) {
    throw std::runtime_error("write failed: " + path_.string());
  }
  out_.close();
}

}  // namespace fedsentry
