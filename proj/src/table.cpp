#include "hkl/table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hkl/errors.hpp"

namespace hkl {

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> columns, std::string config_hash)
    : columns_(std::move(columns)), hash_(std::move(config_hash)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) throw DomainError("CsvTable: row width mismatch");
  rows_.push_back(std::move(cells));
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(csv_number(v));
  add_row(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  for (const auto& c : columns_) out += c + ",";
  out += "config_hash\n";
  for (const auto& row : rows_) {
    for (const auto& c : row) out += c + ",";
    out += hash_ + "\n";
  }
  return out;
}

void CsvTable::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << str();
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace hkl
