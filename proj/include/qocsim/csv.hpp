#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qocsim/errors.hpp"

namespace qocsim {

/// 17 significant digits: doubles survive the round trip bit for bit.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Write-through-temp-then-rename so readers never observe a partial file
/// and a rerun with identical inputs reproduces the file byte for byte.
inline void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + tmp.string());
    out << contents;
    if (!out.flush()) throw ConfigError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

/// Columnar numeric table with a single header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& row) {
    if (row.size() != header_.size()) {
      throw ConfigError("csv row width " + std::to_string(row.size()) +
                        " != header width " + std::to_string(header_.size()));
    }
    rows_.push_back(row);
  }

  std::string to_string() const {
    std::ostringstream out;
    for (std::size_t c = 0; c < header_.size(); ++c) {
      if (c) out << ',';
      out << header_[c];
    }
    out << '\n';
    for (const auto& row : rows_) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ',';
        out << format_double(row[c]);
      }
      out << '\n';
    }
    return out.str();
  }

  void write(const std::string& path) const { write_file_atomic(path, to_string()); }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// Read back a numeric CSV written by CsvTable (or anything shaped like it).
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty csv: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  CsvTable table(header);

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(header.size());
    std::istringstream rs(line);
    std::string cell;
    while (std::getline(rs, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number '" +
                          cell + "'");
      }
    }
    table.add_row(row);
  }
  return table;
}

}  // namespace qocsim
