#include "hkl/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hkl/errors.hpp"

namespace hkl {

namespace pt = boost::property_tree;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& raw) {
  std::string s = trim(raw);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(key, "expected a finite number, got '" + raw + "'");
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& raw) {
  std::string s = trim(raw);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(key, "expected a non-negative integer, got '" + raw + "'");
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  if (trim(raw).empty()) return out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  return out;
}

// Reads the keys of one section, rejecting unknown ones.
class Section {
 public:
  Section(const pt::ptree& root, std::string name, std::set<std::string> keys)
      : name_(std::move(name)) {
    auto child = root.get_child_optional(name_);
    if (!child) return;
    for (const auto& [k, v] : *child) {
      if (!v.empty()) throw ConfigError(name_ + "." + k, "nested keys are not supported");
      if (!keys.count(k)) throw ConfigError(name_ + "." + k, "unknown key");
      values_[k] = v.data();
    }
  }
  const std::string* find(const std::string& k) const {
    auto it = values_.find(k);
    return it == values_.end() ? nullptr : &it->second;
  }
  std::string key(const std::string& k) const { return name_ + "." + k; }
  void get(const std::string& k, double& out) const {
    if (auto v = find(k)) out = to_double(key(k), *v);
  }
  void get(const std::string& k, std::string& out) const {
    if (auto v = find(k)) out = trim(*v);
  }
  void get(const std::string& k, std::vector<double>& out) const {
    if (auto v = find(k)) out = to_list(key(k), *v);
  }
  void get_uint(const std::string& k, std::uint64_t& out) const {
    if (auto v = find(k)) out = to_uint(key(k), *v);
  }

 private:
  std::string name_;
  std::map<std::string, std::string> values_;
};

void read_function(const pt::ptree& root, const std::string& name, FunctionSpec& f) {
  Section s(root, name,
            {"kind", "exponent", "coef", "breaks", "exponents", "gamma", "a", "b", "threshold",
             "gamma_other"});
  s.get("kind", f.kind);
  s.get("exponent", f.exponent);
  s.get("coef", f.coef);
  s.get("breaks", f.breaks);
  s.get("exponents", f.exponents);
  s.get("gamma", f.gamma);
  s.get("a", f.a);
  s.get("b", f.b);
  s.get("threshold", f.threshold);
  s.get("gamma_other", f.gamma_other);
}

void echo_function(std::ostream& os, const std::string& name, const FunctionSpec& f) {
  os << "[" << name << "]\n"
     << "kind=" << f.kind << "\n"
     << "exponent=" << fmt(f.exponent) << "\n"
     << "coef=" << fmt(f.coef) << "\n"
     << "breaks=" << fmt_list(f.breaks) << "\n"
     << "exponents=" << fmt_list(f.exponents) << "\n"
     << "gamma=" << fmt(f.gamma) << "\n"
     << "a=" << fmt(f.a) << "\n"
     << "b=" << fmt(f.b) << "\n"
     << "threshold=" << fmt(f.threshold) << "\n"
     << "gamma_other=" << fmt(f.gamma_other) << "\n\n";
}

void check_function(const std::string& name, const FunctionSpec& f) {
  try {
    (void)f.make();
  } catch (const ConfigError& e) {
    std::string what = e.what();
    throw ConfigError(name + "." + e.key(), what.substr(e.key().size() + 2));
  } catch (const std::exception& e) {
    throw ConfigError(name + ".kind", e.what());
  }
}

}  // namespace

ScalingFunction FunctionSpec::make() const {
  if (!(coef > 0.0)) throw ConfigError("coef", "must be positive");
  if (kind == "power") return ScalingFunction::power(exponent, coef);
  if (kind == "piecewise-power") return ScalingFunction::piecewise_power(breaks, exponents, {}, coef);
  if (kind == "log-zero")
    return ScalingFunction::log_corrected_at_zero(gamma, a, b, threshold, gamma_other, coef);
  if (kind == "log-infinity")
    return ScalingFunction::log_corrected_at_infinity(gamma, a, b, threshold, gamma_other, coef);
  throw ConfigError("kind", "unknown function kind '" + kind + "'");
}

std::vector<double> GridSpec::values() const {
  std::vector<double> out;
  if (points == 1) return {lo};
  for (int i = 0; i < points; ++i)
    out.push_back(lo * std::pow(hi / lo, double(i) / double(points - 1)));
  out.back() = hi;
  return out;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  pt::ptree root;
  std::istringstream in(text);
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("<file>", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  static const std::set<std::string> sections{"space", "F",         "psi",       "sampler",
                                              "grid",  "mc",        "tolerances", "envelope"};
  for (const auto& [k, v] : root) {
    if (!sections.count(k)) throw ConfigError(k, "unknown section");
    (void)v;
  }

  ExperimentConfig cfg;
  Section space(root, "space", {"kind", "level", "half_length"});
  space.get("kind", cfg.space);
  std::uint64_t u = std::uint64_t(cfg.level);
  space.get_uint("level", u);
  cfg.level = int(u);
  u = std::uint64_t(cfg.half_length);
  space.get_uint("half_length", u);
  cfg.half_length = std::int64_t(u);

  read_function(root, "F", cfg.F);
  read_function(root, "psi", cfg.psi);

  Section sampler(root, "sampler", {"kind"});
  sampler.get("kind", cfg.sampler);

  Section grid(root, "grid", {"t_min", "t_max", "t_points", "r_min", "r_max", "r_points"});
  grid.get("t_min", cfg.t_grid.lo);
  grid.get("t_max", cfg.t_grid.hi);
  u = std::uint64_t(cfg.t_grid.points);
  grid.get_uint("t_points", u);
  cfg.t_grid.points = int(u);
  grid.get("r_min", cfg.r_grid.lo);
  grid.get("r_max", cfg.r_grid.hi);
  u = std::uint64_t(cfg.r_grid.points);
  grid.get_uint("r_points", u);
  cfg.r_grid.points = int(u);

  Section mc(root, "mc", {"walkers", "seed"});
  mc.get_uint("walkers", cfg.walkers);
  mc.get_uint("seed", cfg.seed);

  Section tol(root, "tolerances", {"inverse", "quadrature", "optimizer", "C_max"});
  tol.get("inverse", cfg.eps_inv);
  tol.get("quadrature", cfg.eps_quad);
  tol.get("optimizer", cfg.eps_opt);
  tol.get("C_max", cfg.C_max);

  Section env(root, "envelope", {"form", "c", "eta", "a0", "a_L", "a_U"});
  env.get("form", cfg.form);
  env.get("c", cfg.c);
  env.get("eta", cfg.eta);
  env.get("a0", cfg.a0);
  env.get("a_L", cfg.a_L);
  env.get("a_U", cfg.a_U);

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::validate() const {
  if (space != "line" && space != "gasket") throw ConfigError("space.kind", "expected line or gasket");
  if (space == "gasket" && (level < 0 || level > 10))
    throw ConfigError("space.level", "expected 0..10");
  if (space == "line" && (half_length < 1 || half_length > (std::int64_t(1) << 26)))
    throw ConfigError("space.half_length", "expected 1..2^26");
  check_function("F", F);
  check_function("psi", psi);
  if (sampler != "subordinate" && sampler != "jump_chain")
    throw ConfigError("sampler.kind", "expected subordinate or jump_chain");
  auto check_grid = [](const std::string& name, const GridSpec& g) {
    if (g.points < 1) throw ConfigError("grid." + name + "_points", "grid must be non-empty");
    if (!(g.lo > 0.0)) throw ConfigError("grid." + name + "_min", "must be positive");
    if (g.points > 1 && !(g.hi > g.lo))
      throw ConfigError("grid." + name + "_max", "grid must be increasing");
  };
  check_grid("t", t_grid);
  check_grid("r", r_grid);
  if (walkers < 1) throw ConfigError("mc.walkers", "must be at least 1");
  if (!(eps_inv > 0.0)) throw ConfigError("tolerances.inverse", "must be positive");
  if (!(eps_quad > 0.0)) throw ConfigError("tolerances.quadrature", "must be positive");
  if (!(eps_opt > 0.0)) throw ConfigError("tolerances.optimizer", "must be positive");
  if (!(C_max > 0.0)) throw ConfigError("tolerances.C_max", "must be positive");
  try {
    (void)envelope_form_from_string(form);
  } catch (const std::exception& e) {
    throw ConfigError("envelope.form", e.what());
  }
  if (!(c >= 1.0)) throw ConfigError("envelope.c", "must be at least 1");
  if (!(eta > 0.0)) throw ConfigError("envelope.eta", "must be positive");
  if (!(a0 > 0.0)) throw ConfigError("envelope.a0", "must be positive");
  if (!(a_U > 0.0)) throw ConfigError("envelope.a_U", "must be positive");
  if (!(a_L >= a_U)) throw ConfigError("envelope.a_L", "must be at least a_U");
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os << "[space]\nkind=" << space << "\nlevel=" << level << "\nhalf_length=" << half_length
     << "\n\n";
  echo_function(os, "F", F);
  echo_function(os, "psi", psi);
  os << "[sampler]\nkind=" << sampler << "\n\n";
  os << "[grid]\nt_min=" << fmt(t_grid.lo) << "\nt_max=" << fmt(t_grid.hi)
     << "\nt_points=" << t_grid.points << "\nr_min=" << fmt(r_grid.lo)
     << "\nr_max=" << fmt(r_grid.hi) << "\nr_points=" << r_grid.points << "\n\n";
  os << "[mc]\nwalkers=" << walkers << "\nseed=" << seed << "\n\n";
  os << "[tolerances]\ninverse=" << fmt(eps_inv) << "\nquadrature=" << fmt(eps_quad)
     << "\noptimizer=" << fmt(eps_opt) << "\nC_max=" << fmt(C_max) << "\n\n";
  os << "[envelope]\nform=" << form << "\nc=" << fmt(c) << "\neta=" << fmt(eta)
     << "\na0=" << fmt(a0) << "\na_L=" << fmt(a_L) << "\na_U=" << fmt(a_U) << "\n";
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : echo()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ExperimentConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

MetricMeasureGraph ExperimentConfig::make_space() const {
  if (space == "gasket") return MetricMeasureGraph::gasket(level);
  return MetricMeasureGraph::line(half_length);
}

int ExperimentConfig::origin(const MetricMeasureGraph& g) const {
  if (g.kind() == SpaceKind::line) return g.line_vertex(0);
  double side = std::ldexp(1.0, g.level());
  Point c{side / 2.0, side * std::sqrt(3.0) / 6.0};
  int best = 0;
  double best_d = 1e300;
  for (std::size_t v = 0; v < g.size(); ++v) {
    Point p = g.coordinate(int(v));
    double d = std::hypot(p.x - c.x, p.y - c.y);
    if (d < best_d - 1e-12) {
      best_d = d;
      best = int(v);
    }
  }
  return best;
}

EnvelopeSpec ExperimentConfig::envelope_spec(const ScalingFunction& Phi) const {
  EnvelopeSpec spec;
  spec.Phi = Phi;
  spec.psi = psi.make();
  spec.F = F.make();
  spec.c = c;
  spec.eta = eta;
  spec.a0 = a0;
  spec.a_L = a_L;
  spec.a_U = a_U;
  spec.form = envelope_form_from_string(form);
  if (F.kind == "power" && F.exponent > 1.0) spec.F_indices.delta = F.exponent;
  spec.validate();
  return spec;
}

}  // namespace hkl
