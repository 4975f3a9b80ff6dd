#pragma once

// The sup-transform T(phi)(r, t) = sup_{s>0} [r/s - t/phi(s)] and the
// running-maximum function K(r) = sup_{0<s<=r} Phi(s)/s.

#include <memory>
#include <optional>
#include <vector>

#include "hkl/scalefn.hpp"

namespace hkl {

/// Scaling indices of phi that the argmax bracket needs: a global upper
/// constant c_U and, when known, a lower index delta > 1 with constant C_L.
struct PhiIndices {
  double c_U = 1.0;
  std::optional<double> delta;
  double C_L = 1.0;
};

struct TransformResult {
  double value = 0.0;
  double argmax = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  /// False when the wide fallback scan was used instead of the index bracket.
  bool bracketed = false;
};

TransformResult sup_transform(const ScalingFunction& phi, const PhiIndices& indices, double r,
                              double t);

/// Explicit lower bound for F_1(r, t) = T(F)(r, t) from F's scaling indices:
/// with x = F(r)/t, testing s = theta r gives
/// F_1 >= sup_theta [1/theta - c_F / (x theta^gamma)] for gamma = gamma2 on
/// theta <= 1 and gamma = gamma1 on theta >= 1. Exact for F(s) = s^gamma.
double f1_lower_bound(double F_r, double t, double gamma1, double gamma2, double c_F);

/// The constant-free forms (F(r)/t)^(1/(g1-1)) ^ (F(r)/t)^(1/(g2-1)) and
/// (F(r)/t)^(1/(g2-1)) - 1. They hold only up to multiplicative constants and
/// are reported for comparison, not asserted.
struct F1PowerForms {
  double min_form = 0.0;
  double slack_form = 0.0;
};
F1PowerForms f1_power_forms(double F_r, double t, double gamma1, double gamma2);

enum class TransformRegime { far, near };

struct TransformScalingResult {
  TransformRegime regime = TransformRegime::far;
  /// T(c1 r, c2 t) / T(r, t) in the far regime, T(r, t) in the near regime.
  double value = 0.0;
};

/// Far regime: r >= 2 c_U phi^-1(t). Near regime: r <= c3 phi^-1(t).
/// Throws DomainError when (r, t) lies in neither.
TransformScalingResult transform_scaling_check(const ScalingFunction& phi,
                                               const PhiIndices& indices, double r, double t,
                                               double c1, double c2, double c3 = 1.0);

/// K(r) = sup_{0<s<=r} Phi(s)/s, tabulated as a prefix maximum on a log grid.
class KFunction {
 public:
  explicit KFunction(ScalingFunction Phi, double lo = 1e-15, double hi = 1e15,
                     int per_decade = 64);

  double operator()(double r) const;
  double inverse(double u) const;
  const ScalingFunction& as_function() const { return fn_; }

 private:
  struct Table {
    std::vector<double> log_grid;
    std::vector<double> prefix_max;
  };
  ScalingFunction Phi_;
  std::shared_ptr<const Table> table_;
  ScalingFunction fn_;
};

double k_function(const ScalingFunction& Phi, double r);
double k_inverse(const ScalingFunction& Phi, double u);

/// [r / K^-1(t/r)] / Phi_1(r, t) for t <= horizon and r >= 2 c_U^2 Phi^-1(t).
double sck_compare(const ScalingFunction& Phi, const PhiIndices& indices, double r, double t,
                   double horizon = 1.0);
double sck_compare(const KFunction& K, const ScalingFunction& Phi, const PhiIndices& indices,
                   double r, double t, double horizon = 1.0);

}  // namespace hkl
