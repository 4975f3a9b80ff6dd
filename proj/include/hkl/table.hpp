#pragma once

// Comma-separated tables with one header line; the last column carries the
// hash of the configuration that produced them.

#include <string>
#include <vector>

namespace hkl {

/// %.17g, or "nan"/"inf"/"-inf".
std::string csv_number(double v);

class CsvTable {
 public:
  CsvTable(std::vector<std::string> columns, std::string config_hash);

  /// One cell per column (config_hash excluded). Throws DomainError on a
  /// width mismatch.
  void add_row(std::vector<std::string> cells);
  void add_row(const std::vector<double>& values);

  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::string hash_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace hkl
