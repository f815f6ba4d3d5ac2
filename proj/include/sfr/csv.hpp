#pragma once

// Minimal CSV reader/writer. All project CSVs start with a '#' comment
// line carrying the config hash and artifact version, followed by a header
// row; numbers are written with 15 significant digits, '.' decimal.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sfr/common.hpp"

namespace sfr {

inline constexpr const char* kArtifactVersion = "1.0.0";

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header,
            std::uint64_t config_hash) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    out_.open(path, std::ios::binary);  // binary: byte-stable line endings
    if (!out_) throw ConfigError("cannot open for writing: " + path);
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(config_hash));
    out_ << "# config_hash=" << hash_hex << " version=" << kArtifactVersion
         << "\n";
    out_ << header << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << "\n";
  }

  std::ostream& raw() { return out_; }

 private:
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw ConfigError("CSV is missing column '" + name + "'");
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open CSV: " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (!have_header) {
      table.columns = cells;
      have_header = true;
    } else {
      table.rows.push_back(cells);
    }
  }
  return table;
}

}  // namespace sfr
