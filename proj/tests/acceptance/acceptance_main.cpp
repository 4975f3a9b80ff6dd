// Runs the acceptance criteria and prints one PASS/FAIL line for each.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hkl/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  hkl::AcceptanceOptions options;
  std::vector<int> only;
  std::string out;
  app.add_option("--only", only, "criterion ids")->delimiter(',')->check(CLI::Range(1, 13));
  app.add_option("--seed", options.seed, "base seed");
  app.add_option("--threads", options.threads, "worker threads (0 = all cores)");
  app.add_option("--walkers", options.walkers, "walkers per Monte Carlo run");
  app.add_option("--out", out, "directory for result tables");
  CLI11_PARSE(app, argc, argv);

  bool all_pass = true;
  try {
    if (!out.empty()) std::filesystem::create_directories(out);
    hkl::run_acceptance(options, only, [&](const hkl::CriterionResult& r) {
      std::printf("%s\n", hkl::format_result(r).c_str());
      std::fflush(stdout);
      all_pass = all_pass && r.pass;
      if (!out.empty()) r.table.write((std::filesystem::path(out) / r.table_name).string());
    });
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return all_pass ? 0 : 1;
}
