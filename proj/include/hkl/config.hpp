#pragma once

// Experiment configuration: INI text with flat sections, a canonical echo
// that reparses to the same value, and a stable 64-bit hash.

#include <cstdint>
#include <string>
#include <vector>

#include "hkl/envelope.hpp"
#include "hkl/fractal.hpp"
#include "hkl/scalefn.hpp"

namespace hkl {

/// A ScalingFunction description. Kinds:
///   power           exponent, coef
///   piecewise-power breaks, exponents, coef
///   log-zero        gamma, a, b, s0, gamma_other, coef
///   log-infinity    gamma, a, b, s1, gamma_other, coef
struct FunctionSpec {
  std::string kind = "power";
  double exponent = 1.0;
  double coef = 1.0;
  std::vector<double> breaks;
  std::vector<double> exponents;
  double gamma = 2.0;
  double a = 0.0;
  double b = 0.0;
  double threshold = 0.1;
  double gamma_other = 2.0;

  static FunctionSpec power(double exponent) {
    FunctionSpec f;
    f.exponent = exponent;
    return f;
  }

  ScalingFunction make() const;
  bool operator==(const FunctionSpec&) const = default;
};

struct GridSpec {
  double lo = 1.0;
  double hi = 1.0;
  int points = 1;

  /// Geometric grid with `points` values from lo to hi.
  std::vector<double> values() const;
  bool operator==(const GridSpec&) const = default;
};

struct ExperimentConfig {
  std::string space = "line";
  int level = 8;
  std::int64_t half_length = 131072;
  FunctionSpec F = FunctionSpec::power(2.0);
  FunctionSpec psi = FunctionSpec::power(1.0);
  std::string sampler = "subordinate";
  GridSpec t_grid{4.0, 64.0, 5};
  GridSpec r_grid{1.0, 40.0, 8};
  std::uint64_t walkers = 100000;
  std::uint64_t seed = 1;
  double eps_inv = 1e-10;
  double eps_quad = 1e-8;
  double eps_opt = 1e-10;
  double C_max = 100.0;
  std::string form = "GHK";
  double c = 1.0;
  double eta = 1.0;
  double a0 = 1.0;
  double a_L = 1.0;
  double a_U = 1.0;

  /// Parses INI text; missing keys keep their defaults. Throws ConfigError
  /// naming the offending key.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  /// Throws ConfigError unless the grids are increasing and non-empty,
  /// walkers >= 1 and every tolerance is positive.
  void validate() const;

  /// Canonical INI text with every key, doubles printed with %.17g.
  std::string echo() const;
  /// FNV-1a 64 of echo().
  std::uint64_t hash() const;
  std::string hash_hex() const;

  MetricMeasureGraph make_space() const;
  /// The origin used by simulations: 0 on the line, the gasket vertex
  /// closest to the centroid otherwise.
  int origin(const MetricMeasureGraph& g) const;
  EnvelopeSpec envelope_spec(const ScalingFunction& Phi) const;

  bool operator==(const ExperimentConfig&) const = default;
};

}  // namespace hkl
