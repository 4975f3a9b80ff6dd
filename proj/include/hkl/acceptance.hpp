#pragma once

// The acceptance suite: thirteen desk-scale checks, each producing a
// PASS/FAIL verdict, a one-line detail and a deterministic result table.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hkl/table.hpp"

namespace hkl {

struct AcceptanceOptions {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t walkers = 100000;
  double C_max = 100.0;
  std::string config_hash = "builtin";
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  std::string table_name;
  CsvTable table{{}, ""};
  double seconds = 0.0;
};

constexpr int kCriterionCount = 13;

/// Runs the criteria in `ids` (all when empty) in increasing order and calls
/// `report` after each one.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options, std::vector<int> ids = {},
    const std::function<void(const CriterionResult&)>& report = {});

/// "PASS  9  title: detail (12.3 s)".
std::string format_result(const CriterionResult& result);

}  // namespace hkl
