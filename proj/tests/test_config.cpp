#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hkl/config.hpp"
#include "hkl/errors.hpp"
#include "hkl/table.hpp"

using namespace hkl;
namespace fs = std::filesystem;

namespace {

std::string error_key(const std::string& text) {
  try {
    (void)ExperimentConfig::parse(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& args) {
  int status = std::system((std::string(HKLAB_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("hkl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("defaults parse from an empty file") {
  auto cfg = ExperimentConfig::parse("");
  CHECK(cfg == ExperimentConfig{});
  CHECK(cfg.F.exponent == 2.0);
  CHECK(cfg.psi.exponent == 1.0);
}

TEST_CASE("all sections parse") {
  auto cfg = ExperimentConfig::parse(R"(
[space]
kind=gasket
level=5
[F]
kind=piecewise-power
breaks=1,10
exponents=2,3,2
[psi]
kind=log-zero
gamma=1
a=2
threshold=0.2
gamma_other=1
[sampler]
kind=jump_chain
[grid]
t_min=0.5
t_max=8
t_points=3
[mc]
walkers=123
seed=99
[tolerances]
C_max=50
[envelope]
form=SHK
a_L=2
a_U=0.5
)");
  CHECK(cfg.space == "gasket");
  CHECK(cfg.level == 5);
  CHECK(cfg.F.breaks == std::vector<double>{1, 10});
  CHECK(cfg.F.make()(100.0) == doctest::Approx(1e4 * 10.0));
  CHECK(cfg.psi.kind == "log-zero");
  CHECK(cfg.sampler == "jump_chain");
  CHECK(cfg.t_grid.values() == std::vector<double>{0.5, 2.0, 8.0});
  CHECK(cfg.walkers == 123);
  CHECK(cfg.seed == 99);
  CHECK(cfg.C_max == 50);
  CHECK(cfg.envelope_spec(ScalingFunction::power(1.0)).form == EnvelopeForm::SHK);
  CHECK(cfg.make_space().size() == std::size_t((243 * 3 + 3) / 2));
}

TEST_CASE("errors name the offending key") {
  CHECK(error_key("[space]\nkind=torus\n") == "space.kind");
  CHECK(error_key("[space]\nlevell=3\n") == "space.levell");
  CHECK(error_key("[nope]\nx=1\n") == "nope");
  CHECK(error_key("[mc]\nwalkers=0\n") == "mc.walkers");
  CHECK(error_key("[mc]\nwalkers=-3\n") == "mc.walkers");
  CHECK(error_key("[grid]\nt_min=8\nt_max=4\n") == "grid.t_max");
  CHECK(error_key("[grid]\nr_points=0\n") == "grid.r_points");
  CHECK(error_key("[tolerances]\ninverse=0\n") == "tolerances.inverse");
  CHECK(error_key("[tolerances]\nquadrature=abc\n") == "tolerances.quadrature");
  CHECK(error_key("[F]\nkind=cubic\n") == "F.kind");
  CHECK(error_key("[F]\ncoef=-1\n") == "F.coef");
  CHECK(error_key("[psi]\nkind=piecewise-power\nbreaks=1\nexponents=1\n") == "psi.kind");
  CHECK(error_key("[sampler]\nkind=walk\n") == "sampler.kind");
  CHECK(error_key("[envelope]\nform=XYZ\n") == "envelope.form");
  CHECK(error_key("[envelope]\na_L=0.5\n") == "envelope.a_L");
  CHECK(error_key("[envelope]\nc=0.5\n") == "envelope.c");
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/cfg.ini"), ConfigError);
}

TEST_CASE("echo reparses to the same configuration and hash") {
  auto cfg = ExperimentConfig::parse("[F]\nkind=piecewise-power\nbreaks=0.3\nexponents=1.7,2.2\n"
                                     "[grid]\nt_min=0.1\n[envelope]\nform=HK\neta=0.3\n");
  auto again = ExperimentConfig::parse(cfg.echo());
  CHECK(again == cfg);
  CHECK(again.echo() == cfg.echo());
  CHECK(again.hash() == cfg.hash());
  CHECK(cfg.hash_hex().size() == 16);
  auto other = cfg;
  other.seed = 2;
  CHECK(other.hash() != cfg.hash());
}

TEST_CASE("origin is the centre of the space") {
  ExperimentConfig cfg;
  auto line = cfg.make_space();
  CHECK(cfg.origin(line) == line.line_vertex(0));
  cfg.space = "gasket";
  cfg.level = 4;
  auto g = cfg.make_space();
  auto p = g.coordinate(cfg.origin(g));
  // The centroid sits in the central hole, whose circumradius is 16 / (2 sqrt 3).
  CHECK(std::hypot(p.x - 8.0, p.y - 8.0 / std::sqrt(3.0)) <= 8.0 / std::sqrt(3.0));
}

TEST_CASE("csv tables carry a header and the config hash") {
  CsvTable t({"a", "b"}, "abc");
  t.add_row(std::vector<double>{1.0, 0.1});
  t.add_row({std::string("x"), std::string("y")});
  CHECK(t.str() == "a,b,config_hash\n1,0.10000000000000001,abc\nx,y,abc\n");
  CHECK_THROWS_AS(t.add_row(std::vector<double>{1.0}), DomainError);
  CHECK(csv_number(1.0 / 0.0) == "inf");
  CHECK(csv_number(-1.0 / 0.0) == "-inf");
  CHECK(csv_number(std::nan("")) == "nan");
}

TEST_CASE("cli: phi table and non-integrable input") {
  auto dir = scratch("phi");
  CHECK(run("phi --out " + dir.string()) == 0);
  auto text = slurp(dir / "phi.csv");
  CHECK(text.rfind("r,Phi,psi,F,config_hash\n", 0) == 0);
  auto echo = slurp(dir / "config.ini");
  CHECK(ExperimentConfig::parse(echo) == ExperimentConfig{});
  CHECK(text.find(ExperimentConfig{}.hash_hex()) != std::string::npos);

  std::ofstream(dir / "bad.ini") << "[psi]\nkind=power\nexponent=2\n";
  CHECK(run("phi --config " + (dir / "bad.ini").string() + " --out " + dir.string()) == 2);
  std::ofstream(dir / "typo.ini") << "[mc]\nwalker=3\n";
  CHECK(run("phi --config " + (dir / "typo.ini").string() + " --out " + dir.string()) == 2);
}

TEST_CASE("cli: table subcommands") {
  auto dir = scratch("tables");
  for (std::string sub : {"transform", "check-scaling", "envelope"})
    CHECK(run(sub + " --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "transform.csv"));
  CHECK(fs::exists(dir / "check_scaling.csv"));
  CHECK(fs::exists(dir / "envelope.csv"));
  std::ofstream(dir / "g.ini") << "[space]\nkind=gasket\nlevel=5\n";
  CHECK(run("geometry --config " + (dir / "g.ini").string() + " --out " + dir.string()) == 0);
  CHECK(slurp(dir / "geometry.csv").find("volume_exponent") != std::string::npos);
}

TEST_CASE("cli: simulate is reproducible for a seed and thread count") {
  auto a = scratch("sim_a"), b = scratch("sim_b");
  std::ofstream(a / "c.ini") << "[space]\nhalf_length=4096\n[mc]\nwalkers=4000\n";
  auto cfg = (a / "c.ini").string();
  CHECK(run("simulate --config " + cfg + " --seed 5 --out " + a.string()) == 0);
  CHECK(run("simulate --config " + cfg + " --seed 5 --threads 3 --out " + b.string()) == 0);
  CHECK(slurp(a / "kernel.csv") == slurp(b / "kernel.csv"));
  CHECK(slurp(a / "diagonal.csv") == slurp(b / "diagonal.csv"));
  CHECK(slurp(a / "config.ini").find("seed=5") != std::string::npos);
  CHECK(run("lil --config " + cfg + " --out " + a.string()) == 0);
  CHECK(fs::exists(a / "moments.csv"));
}

TEST_CASE("cli: usage errors") {
  CHECK(run("") != 0);
  CHECK(run("bogus") != 0);
}
