#pragma once

// Two-sided heat kernel bounds as explicit functions of (t, d(x, y)) and a
// volume oracle, plus the Green function envelope and the LIL normalizer.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hkl/fractal.hpp"
#include "hkl/scalefn.hpp"
#include "hkl/transform.hpp"

namespace hkl {

/// V(x, r): non-decreasing in r, positive for r > 0.
class VolumeOracle {
 public:
  using Fn = std::function<double(int, double)>;

  explicit VolumeOracle(Fn fn, std::string label = "custom")
      : fn_(std::move(fn)), label_(std::move(label)) {}

  /// coef * r^dimension, independent of the center.
  static VolumeOracle power(double dimension, double coef = 1.0);
  /// Open-ball mass on a graph. The graph must outlive the oracle.
  static VolumeOracle graph(const MetricMeasureGraph& g);

  double operator()(int x, double r) const { return fn_(x, r); }
  const std::string& label() const { return label_; }

 private:
  Fn fn_;
  std::string label_;
};

enum class EnvelopeForm {
  HK,
  UHK,
  UHKD,
  SHK,
  GHK,
  STABLE,
  EXAMPLE_LOG_SMALL,
  EXAMPLE_LOG_LARGE,
  EXAMPLE_MIXED
};

std::string to_string(EnvelopeForm form);
EnvelopeForm envelope_form_from_string(const std::string& name);

/// Parameters of the closed-form examples.
struct ExampleParams {
  /// LOG-SMALL: F ~ s^gamma (log 1/s)^kappa, psi ~ F (log 1/s)^alpha (loglog 1/s)^beta.
  /// LOG-LARGE: F ~ s^gamma (log s)^kappa, psi ~ F (log s)^beta with beta <= 1.
  /// MIXED: psi = r^alpha below 1 and r^beta above, alpha < gamma1 <= gamma2 < beta.
  double gamma = 2.0;
  double alpha = 1.0;
  double beta = 2.0;
  double kappa = 0.0;
  double gamma1 = 2.0;
  double gamma2 = 2.0;
  /// Time horizon separating the small and large time regimes.
  double T = 1.0;
  /// Exponential constant a_1 .. a_5 of the displayed forms.
  double a = 1.0;
};

struct EnvelopeSpec {
  ScalingFunction Phi = ScalingFunction::power(1.0);
  ScalingFunction psi = ScalingFunction::power(1.0);
  std::optional<ScalingFunction> F;
  PhiIndices phi_indices;
  PhiIndices F_indices;
  double c = 1.0;
  double eta = 1.0;
  double a0 = 1.0;
  double a_L = 1.0;
  double a_U = 1.0;
  EnvelopeForm form = EnvelopeForm::HK;
  ExampleParams example;

  /// Throws DomainError unless c >= 1, eta > 0, a_L >= a_U > 0, a0 > 0.
  void validate() const;
};

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// G(a, t, x, r) = t/(V(x,r) psi(r)) + exp(-a Phi_1(r, t)) / V(x, Phi^-1(t)).
/// At r = 0 the diagonal value 1/V(x, Phi^-1(t)) is returned.
double g_envelope(const EnvelopeSpec& spec, double a, double t, int x, double r,
                  const VolumeOracle& vol);

Bounds hk_bounds(const EnvelopeSpec& spec, double t, int x, double r, const VolumeOracle& vol);
Bounds uhk_bounds(const EnvelopeSpec& spec, double t, int x, double r, const VolumeOracle& vol);
Bounds uhkd_bounds(const EnvelopeSpec& spec, double t, int x, const VolumeOracle& vol);
Bounds shk_bounds(const EnvelopeSpec& spec, double t, int x, double r, const VolumeOracle& vol);
Bounds ghk_bounds(const EnvelopeSpec& spec, double t, int x, double r, const VolumeOracle& vol);
/// c^-1 (1/V(Phi^-1(t)) ^ t/(V(r) Phi(r))) <= p <= c (same).
Bounds stable_bounds(const EnvelopeSpec& spec, double t, int x, double r,
                     const VolumeOracle& vol);

/// Closed forms of the examples. Throws DomainError outside their validity
/// region.
Bounds example_envelope(const EnvelopeSpec& spec, double t, int x, double r,
                        const VolumeOracle& vol);

/// Dispatches on spec.form. Throws SpecError when lower > upper.
Bounds envelope_bounds(const EnvelopeSpec& spec, double t, int x, double r,
                       const VolumeOracle& vol);

/// Same forms without the lower <= upper consistency check; with unit
/// constants the two sides may cross.
Bounds envelope_forms(const EnvelopeSpec& spec, double t, int x, double r,
                      const VolumeOracle& vol);

/// c^-1 Phi(r)/V(x, r) and c Phi(r)/V(x, r); requires alpha2 < d1.
Bounds green_envelope(const ScalingFunction& Phi, double r, const VolumeOracle& vol, int x,
                      double alpha2, double d1, double c = 1.0);

/// h(t) = (log log t) F^-1(t / log log t) for t >= 16.
double lil_h(const ScalingFunction& F, double t);

struct LilCheckReport {
  /// min over t of F_1((c1 + 1) h, t) / (c1 log log t).
  double h1_margin = 0.0;
  /// max over t of F_1(c2 h, t) / (c_F^(1/(gamma1-1)) c2 log log t).
  double h2_margin = 0.0;
  std::size_t points = 0;
};

/// Checks F_1((c1+1)h(t), t) >= c1 log log t and
/// F_1(c2 h(t), t) <= c_F^(1/(gamma1-1)) c2 log log t on t_grid.
/// Throws ViolationError with the offending t.
LilCheckReport lil_h_checks(const ScalingFunction& F, const PhiIndices& F_indices, double gamma1,
                            double c1, double c2, std::span<const double> t_grid);

}  // namespace hkl
