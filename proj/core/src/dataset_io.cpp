#include "cdimc/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string_view>
#include <vector>

namespace cdimc {

namespace fs = std::filesystem;

namespace {

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string_view> fields;
};

std::string context(const fs::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

// Reads all non-empty lines of a file. The returned rows view into `storage`.
std::vector<CsvRow> read_csv(const fs::path& file, std::vector<std::string>& storage) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open " + file.string());
  storage.clear();
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    storage.push_back(line);
    line_numbers.push_back(number);
  }
  std::vector<CsvRow> rows;
  rows.reserve(storage.size());
  for (std::size_t r = 0; r < storage.size(); ++r) {
    CsvRow row;
    row.line = line_numbers[r];
    std::string_view rest = storage[r];
    while (true) {
      const auto comma = rest.find(',');
      row.fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

double parse_value(std::string_view token, const fs::path& file, std::size_t line) {
  token = trim(token);
  if (token == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw DataError(context(file, line) + ": invalid number '" + std::string(token) + "'");
  return value;
}

long long parse_int(std::string_view token, const fs::path& file, std::size_t line) {
  token = trim(token);
  long long value = 0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || token.empty())
    throw DataError(context(file, line) + ": invalid integer '" + std::string(token) + "'");
  return value;
}

Matrix read_view(const fs::path& file) {
  std::vector<std::string> storage;
  const std::vector<CsvRow> rows = read_csv(file, storage);
  if (rows.empty()) throw DataError(file.filename().string() + ": no rows");
  const std::size_t width = rows.front().fields.size();
  Matrix x(static_cast<Index>(width), static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].fields.size() != width)
      throw DataError(context(file, rows[i].line) + ": row " + std::to_string(i + 1) + " has " +
                      std::to_string(rows[i].fields.size()) + " values, expected " + std::to_string(width));
    for (std::size_t f = 0; f < width; ++f)
      x(static_cast<Index>(f), static_cast<Index>(i)) = parse_value(rows[i].fields[f], file, rows[i].line);
  }
  return x;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << text;
  if (!out) throw DataError("write failed for " + file.string());
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "NaN";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw NumericError("format_double: conversion failed");
  return std::string(buf, ptr);
}

MultiViewDataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  MultiViewDataset ds;
  for (int v = 1;; ++v) {
    const fs::path file = dir / ("view_" + std::to_string(v) + ".csv");
    if (!fs::exists(file)) break;
    ds.views.push_back(read_view(file));
  }
  if (ds.views.empty()) throw DataError(dir.string() + ": no view_1.csv found");
  const Index n = ds.views.front().cols();
  for (std::size_t v = 1; v < ds.views.size(); ++v)
    if (ds.views[v].cols() != n)
      throw DataError("view_" + std::to_string(v + 1) + ".csv: " + std::to_string(ds.views[v].cols()) +
                      " rows, view_1.csv has " + std::to_string(n));

  const std::size_t l = ds.views.size();
  ds.masks.assign(l, Mask(static_cast<std::size_t>(n), 1));
  const fs::path mask_file = dir / "mask.csv";
  if (fs::exists(mask_file)) {
    std::vector<std::string> storage;
    const std::vector<CsvRow> rows = read_csv(mask_file, storage);
    if (static_cast<Index>(rows.size()) != n)
      throw DataError("mask.csv: " + std::to_string(rows.size()) + " rows for " + std::to_string(n) + " samples");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].fields.size() != l)
        throw DataError(context(mask_file, rows[i].line) + ": row " + std::to_string(i + 1) + " has " +
                        std::to_string(rows[i].fields.size()) + " columns, expected " + std::to_string(l));
      for (std::size_t v = 0; v < l; ++v) {
        const long long bit = parse_int(rows[i].fields[v], mask_file, rows[i].line);
        if (bit != 0 && bit != 1) throw DataError(context(mask_file, rows[i].line) + ": mask entries must be 0 or 1");
        ds.masks[v][i] = static_cast<std::uint8_t>(bit);
      }
    }
  }

  for (std::size_t v = 0; v < l; ++v) {
    for (Index i = 0; i < n; ++i) {
      if (ds.masks[v][static_cast<std::size_t>(i)] == 1) {
        if (!ds.views[v].col(i).allFinite())
          throw DataError("view_" + std::to_string(v + 1) + ".csv:" + std::to_string(i + 1) +
                          ": NaN in an instance marked available");
      } else {
        ds.views[v].col(i).setConstant(std::numeric_limits<double>::quiet_NaN());
      }
    }
  }

  const fs::path label_file = dir / "labels.csv";
  if (fs::exists(label_file)) ds.labels = read_labels(label_file);
  ds.validate();
  return ds;
}

void save_dataset(const MultiViewDataset& ds, const fs::path& dir) {
  ds.validate();
  fs::create_directories(dir);
  const Index n = ds.samples();
  for (std::size_t v = 0; v < ds.view_count(); ++v) {
    std::string text;
    const Matrix& x = ds.views[v];
    for (Index i = 0; i < n; ++i) {
      const bool present = ds.masks[v][static_cast<std::size_t>(i)] == 1;
      for (Index f = 0; f < x.rows(); ++f) {
        if (f > 0) text += ',';
        text += present ? format_double(x(f, i)) : "NaN";
      }
      text += '\n';
    }
    write_text(dir / ("view_" + std::to_string(v + 1) + ".csv"), text);
  }
  std::string mask_text;
  for (Index i = 0; i < n; ++i) {
    for (std::size_t v = 0; v < ds.view_count(); ++v) {
      if (v > 0) mask_text += ',';
      mask_text += ds.masks[v][static_cast<std::size_t>(i)] ? '1' : '0';
    }
    mask_text += '\n';
  }
  write_text(dir / "mask.csv", mask_text);
  if (ds.labels) write_labels(*ds.labels, dir / "labels.csv");
  // Drop stale view files from an earlier save with more views.
  for (std::size_t v = ds.view_count() + 1;; ++v) {
    const fs::path stale = dir / ("view_" + std::to_string(v) + ".csv");
    if (!fs::exists(stale)) break;
    fs::remove(stale);
  }
}

Labels read_labels(const fs::path& file) {
  std::vector<std::string> storage;
  const std::vector<CsvRow> rows = read_csv(file, storage);
  Labels labels;
  labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    long long value = 0;
    if (row.fields.size() == 1) {
      value = parse_int(row.fields[0], file, row.line);
    } else if (row.fields.size() == 2) {
      const long long index = parse_int(row.fields[0], file, row.line);
      if (index != static_cast<long long>(i))
        throw DataError(context(file, row.line) + ": expected index " + std::to_string(i) + ", found " +
                        std::to_string(index));
      value = parse_int(row.fields[1], file, row.line);
    } else {
      throw DataError(context(file, row.line) + ": expected `label` or `index,label`");
    }
    if (value < 0 || value > std::numeric_limits<int>::max())
      throw DataError(context(file, row.line) + ": labels must be non-negative");
    labels.push_back(static_cast<int>(value));
  }
  if (labels.empty()) throw DataError(file.filename().string() + ": no labels");
  return labels;
}

void write_labels(const Labels& labels, const fs::path& file) {
  std::string text;
  for (int label : labels) text += std::to_string(label) + '\n';
  write_text(file, text);
}

void write_assignments(const Labels& clusters, const fs::path& file) {
  std::string text;
  for (std::size_t i = 0; i < clusters.size(); ++i)
    text += std::to_string(i) + ',' + std::to_string(clusters[i]) + '\n';
  write_text(file, text);
}

}  // namespace cdimc
