// hklab: command-line front end for the heat kernel laboratory.
//
//   hklab <subcommand> [--config PATH] [--out DIR] [--seed N] [--threads N]
//
// Exit status: 0 success, 1 acceptance failure or runtime error, 2 bad
// configuration (including a non-integrable F, psi pair).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hkl/acceptance.hpp"
#include "hkl/config.hpp"
#include "hkl/construct.hpp"
#include "hkl/envelope.hpp"
#include "hkl/errors.hpp"
#include "hkl/fractal.hpp"
#include "hkl/montecarlo.hpp"
#include "hkl/table.hpp"
#include "hkl/transform.hpp"

namespace fs = std::filesystem;
using namespace hkl;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

struct Run {
  ExperimentConfig cfg;
  std::string hash;
  fs::path out;

  void emit(const CsvTable& table, const std::string& name) const {
    table.write((out / name).string());
    std::cout << "wrote " << (out / name).string() << " (" << table.rows() << " rows)\n";
  }
};

Run prepare(const Common& common) {
  Run run;
  if (!common.config_path.empty()) run.cfg = ExperimentConfig::load(common.config_path);
  if (common.seed) run.cfg.seed = *common.seed;
  run.cfg.validate();
  run.hash = run.cfg.hash_hex();
  run.out = common.out_dir;
  fs::create_directories(run.out);
  std::FILE* f = std::fopen((run.out / "config.ini").string().c_str(), "w");
  if (!f) throw ResourceError("cannot write " + (run.out / "config.ini").string());
  std::string echo = run.cfg.echo();
  std::fwrite(echo.data(), 1, echo.size(), f);
  std::fclose(f);
  return run;
}

// Non-integrability of dF/psi is a property of the configuration.
ScaleConstruction construct(const ExperimentConfig& cfg) {
  try {
    return ScaleConstruction::build(cfg.F.make(), cfg.psi.make());
  } catch (const DomainError& e) {
    throw ConfigError("psi", e.what());
  }
}

int cmd_phi(const Run& run) {
  auto cons = construct(run.cfg);
  CsvTable t({"r", "Phi", "psi", "F"}, run.hash);
  for (double r : run.cfg.r_grid.values())
    t.add_row({r, cons.Phi()(r), cons.psi()(r), cons.F()(r)});
  run.emit(t, "phi.csv");
  return 0;
}

int cmd_transform(const Run& run) {
  auto cons = construct(run.cfg);
  auto spec = run.cfg.envelope_spec(cons.Phi());
  CsvTable t({"t", "r", "Phi1", "Phi1_argmax", "F1", "F1_argmax"}, run.hash);
  for (double tt : run.cfg.t_grid.values()) {
    for (double r : run.cfg.r_grid.values()) {
      auto p = sup_transform(cons.Phi(), spec.phi_indices, r, tt);
      auto f = sup_transform(cons.F(), spec.F_indices, r, tt);
      t.add_row({tt, r, p.value, p.argmax, f.value, f.argmax});
    }
  }
  run.emit(t, "transform.csv");
  return 0;
}

int cmd_check_scaling(const Run& run) {
  auto cons = construct(run.cfg);
  auto grid = geometric_grid(run.cfg.r_grid.lo, run.cfg.r_grid.hi, 16);
  CsvTable t({"function", "side", "exponent", "constant", "pass", "worst_ratio", "witness_r",
              "witness_R"},
             run.hash);
  auto check = [&](const std::string& name, const ScalingFunction& f) {
    // Extreme local log-slopes over the grid give the candidate exponents.
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      double s = std::log(f(grid[i]) / f(grid[i - 1])) / std::log(grid[i] / grid[i - 1]);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    for (auto bound : {ScalingBound::lower(lo, 1.0), ScalingBound::upper(hi, 1.0)}) {
      auto v = check_scaling(f, bound, grid);
      t.add_row({name, bound.side == BoundSide::lower ? "lower" : "upper",
                 csv_number(bound.exponent), "1", v.pass ? "1" : "0", csv_number(v.worst_ratio),
                 csv_number(v.witness_r), csv_number(v.witness_R)});
    }
  };
  check("F", cons.F());
  check("psi", cons.psi());
  check("Phi", cons.Phi());
  run.emit(t, "check_scaling.csv");
  return 0;
}

int cmd_envelope(const Run& run) {
  auto cons = construct(run.cfg);
  auto spec = run.cfg.envelope_spec(cons.Phi());
  auto g = run.cfg.make_space();
  auto vol = VolumeOracle::graph(g);
  int x = run.cfg.origin(g);
  CsvTable t({"t", "r", "lower", "upper", "consistent"}, run.hash);
  for (double tt : run.cfg.t_grid.values()) {
    for (double r : run.cfg.r_grid.values()) {
      auto b = envelope_forms(spec, tt, x, r, vol);
      t.add_row({tt, r, b.lower, b.upper, b.lower <= b.upper ? 1.0 : 0.0});
    }
  }
  run.emit(t, "envelope.csv");
  return 0;
}

int cmd_geometry(const Run& run) {
  auto g = run.cfg.make_space();
  CsvTable t({"quantity", "value"}, run.hash);
  t.add_row({std::string("vertices"), csv_number(double(g.size()))});
  std::vector<int> centers;
  std::vector<double> radii;
  if (g.kind() == SpaceKind::gasket) {
    double side = std::ldexp(1.0, g.level());
    centers = interior_centers(g, side / 4.0, 24);
    for (double r = 1.0; r <= side / 8.0; r *= 2.0) radii.push_back(r);
  } else {
    centers = {g.line_vertex(0)};
    radii = run.cfg.r_grid.values();
  }
  if (!centers.empty() && radii.size() >= 2) {
    auto fit = fit_volume_exponent(g, radii, centers);
    t.add_row({std::string("volume_exponent"), csv_number(fit.exponent)});
    t.add_row({std::string("volume_residual"), csv_number(fit.residual)});
    t.add_row({std::string("doubling_min"), csv_number(fit.doubling_min)});
    t.add_row({std::string("doubling_max"), csv_number(fit.doubling_max)});
  }
  std::vector<std::pair<int, int>> pairs;
  Rng rng(stream_seed(run.cfg.seed, 0));
  for (int i = 0; i < 16; ++i) pairs.emplace_back(int(rng() % g.size()), int(rng() % g.size()));
  std::vector<int> ns{1, 2, 4, 8};
  auto chain = chain_condition_check(g, 2.0, pairs, ns);
  t.add_row({std::string("chain_worst_ratio"), csv_number(chain.worst_ratio)});
  t.add_row({std::string("chain_pass"), chain.pass ? "1" : "0"});
  auto m = check_metric(g, 200, run.cfg.seed);
  t.add_row({std::string("triangle_ok"), m.triangle_ok ? "1" : "0"});
  t.add_row({std::string("symmetric_ok"), m.symmetric_ok ? "1" : "0"});
  t.add_row({std::string("euclid_ratio_min"), csv_number(m.euclid_ratio_min)});
  t.add_row({std::string("euclid_ratio_max"), csv_number(m.euclid_ratio_max)});
  run.emit(t, "geometry.csv");
  return 0;
}

std::unique_ptr<PathSampler> make_sampler(const ExperimentConfig& cfg, const MetricMeasureGraph& g,
                                          double t_min) {
  if (cfg.sampler == "jump_chain") return std::make_unique<JumpChainSampler>(g, cfg.psi.make());
  construct(cfg);
  return std::make_unique<SubordinateSampler>(
      g, Subordinator::build(cfg.F.make(), cfg.psi.make(), t_min));
}

int cmd_simulate(const Run& run, unsigned threads) {
  auto g = run.cfg.make_space();
  int x0 = run.cfg.origin(g);
  auto times = run.cfg.t_grid.values();
  auto sampler = make_sampler(run.cfg, g, times.front());
  auto kernels = estimate_kernels(g, x0, times, *sampler, {run.cfg.walkers, run.cfg.seed, threads});
  std::vector<double> edges{0.0};
  for (double r : run.cfg.r_grid.values()) edges.push_back(r);
  CsvTable t({"t", "r_lo", "r_hi", "count", "mass", "p_hat", "halfwidth"}, run.hash);
  CsvTable d({"t", "p_diag", "halfwidth", "defect"}, run.hash);
  for (const auto& k : kernels) {
    for (const auto& c : radial_cells(k, g, edges))
      t.add_row({c.t, c.r_lo, c.r_hi, double(c.count), c.mass, c.p_hat, c.halfwidth});
    d.add_row({k.t, k.p_hat(x0), k.halfwidth(x0), k.defect_fraction()});
  }
  run.emit(t, "kernel.csv");
  run.emit(d, "diagonal.csv");
  return 0;
}

int cmd_lil(const Run& run, unsigned threads) {
  auto g = run.cfg.make_space();
  int x0 = run.cfg.origin(g);
  auto F = run.cfg.F.make();
  double t0 = run.cfg.t_grid.lo, horizon = run.cfg.t_grid.hi;
  auto sampler = make_sampler(run.cfg, g, t0);
  std::vector<std::size_t> ns;
  for (std::size_t n = std::max<std::size_t>(run.cfg.walkers / 8, 1); n <= run.cfg.walkers; n *= 2)
    ns.push_back(n);
  auto m = moment_and_lil(x0, F, *sampler, t0, horizon, ns, run.cfg.seed, threads);
  CsvTable mt({"walkers", "mean_F", "drift"}, run.hash);
  for (std::size_t i = 0; i < m.moment_curve.size(); ++i)
    mt.add_row({double(m.moment_curve[i].first), m.moment_curve[i].second,
                i ? m.drifts[i - 1] : 0.0});
  run.emit(mt, "moments.csv");
  CsvTable ht({"t", "h"}, run.hash);
  for (double t : run.cfg.t_grid.values())
    if (t >= 16.0) ht.add_row(std::vector<double>{t, lil_h(F, t)});
  run.emit(ht, "lil_h.csv");
  CsvTable lt({"quantity", "value"}, run.hash);
  lt.add_row({std::string("paths"), std::to_string(m.lil_sup.size())});
  lt.add_row({std::string("lil_q50"), csv_number(m.lil_q50)});
  lt.add_row({std::string("lil_q90"), csv_number(m.lil_q90)});
  lt.add_row({std::string("lil_q99"), csv_number(m.lil_q99)});
  run.emit(lt, "lil.csv");
  return 0;
}

int cmd_verify(const Run& run, unsigned threads, const std::vector<int>& only) {
  AcceptanceOptions opt;
  opt.seed = run.cfg.seed;
  opt.threads = threads;
  opt.walkers = run.cfg.walkers;
  opt.C_max = run.cfg.C_max;
  opt.config_hash = run.hash;
  bool all = true;
  run_acceptance(opt, only, [&](const CriterionResult& r) {
    std::cout << format_result(r) << std::endl;
    all = all && r.pass;
    if (!r.table_name.empty() && r.table.rows() > 0) r.table.write((run.out / r.table_name).string());
  });
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hklab: heat kernel estimates on metric measure graphs"};
  app.require_subcommand(1);
  Common common;
  std::vector<int> only;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "experiment configuration (INI)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed, "seed, overrides the configuration");
    sub->add_option("--threads", common.threads, "worker threads for Monte Carlo")
        ->check(CLI::Range(1u, 1024u));
    return sub;
  };
  auto* phi = add_common(app.add_subcommand("phi", "build Phi and emit (r, Phi, psi, F)"));
  auto* transform = add_common(app.add_subcommand("transform", "Phi_1 and F_1 tables"));
  auto* scaling = add_common(app.add_subcommand("check-scaling", "weak scaling checks"));
  auto* envelope = add_common(app.add_subcommand("envelope", "(t, r, lower, upper) table"));
  auto* geometry = add_common(app.add_subcommand("geometry", "volume fit, chain and metric checks"));
  auto* simulate = add_common(app.add_subcommand("simulate", "estimate the heat kernel"));
  auto* verify = add_common(app.add_subcommand("verify", "run the acceptance suite"));
  verify->add_option("--only", only, "criterion numbers to run")->check(CLI::Range(1, kCriterionCount));
  auto* lil = add_common(app.add_subcommand("lil", "moment curve and LIL statistics"));

  CLI11_PARSE(app, argc, argv);

  try {
    Run run = prepare(common);
    if (phi->parsed()) return cmd_phi(run);
    if (transform->parsed()) return cmd_transform(run);
    if (scaling->parsed()) return cmd_check_scaling(run);
    if (envelope->parsed()) return cmd_envelope(run);
    if (geometry->parsed()) return cmd_geometry(run);
    if (simulate->parsed()) return cmd_simulate(run, common.threads);
    if (lil->parsed()) return cmd_lil(run, common.threads);
    if (verify->parsed()) return cmd_verify(run, common.threads, only);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
