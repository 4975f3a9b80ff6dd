#pragma once

// Scale function Phi = F / I with I(r) = int_0^r dF(s)/psi(s), its truncated
// companion Phi~, the subordinator Laplace exponent and the moment tests.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hkl/quadrature.hpp"
#include "hkl/scalefn.hpp"

namespace hkl {

/// Declared scaling indices: F satisfies L(gamma1, 1/c_F) and U(gamma2, c_F),
/// psi satisfies L(beta1, .) and U(beta2, .).
struct ConstructIndices {
  double gamma1 = 2.0;
  double gamma2 = 2.0;
  double c_F = 1.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
};

enum class SeriesVerdict { converges, diverges };

/// Outcome of a dyadic block test of int dF/psi near 0 or near infinity.
struct BlockTest {
  SeriesVerdict verdict = SeriesVerdict::converges;
  /// "analytic", "geometric" or "power-log".
  std::string method;
  /// Fitted per-block ratio and the power / log-power exponents of the
  /// block sizes in the distance log(1/s) (or log s).
  double ratio = 0.0;
  double power = 0.0;
  double log_power = 0.0;
};

/// Block sums B_k = int over dyadic shells moving away from `start`
/// towards 0 (toward_zero) or infinity.
std::vector<double> dyadic_blocks(const ScalingFunction& F, const ScalingFunction& psi,
                                  double start, bool toward_zero, int count,
                                  const QuadratureOptions& quad = {});

/// Decides convergence of sum B_k from the block sizes. `distances` holds
/// |log s| at each block midpoint. Throws InconclusiveError.
BlockTest classify_blocks(std::span<const double> blocks, std::span<const double> distances);

struct IntegrabilityResult {
  bool integrable = false;
  /// int_0^1 dF/psi when integrable, otherwise infinity.
  double integral = 0.0;
  BlockTest test;
};

/// int_0^1 dF(s)/psi(s) < infinity. Analytic when gamma1 > beta2, otherwise
/// decided on 60 dyadic blocks.
IntegrabilityResult check_integrability(const ScalingFunction& F, const ScalingFunction& psi,
                                        std::optional<ConstructIndices> indices = {},
                                        const QuadratureOptions& quad = {});

/// int_0^r dF(s)/psi(s): 60 dyadic blocks below r plus an extrapolated tail.
double integral_from_zero(const ScalingFunction& F, const ScalingFunction& psi, double r,
                          const QuadratureOptions& quad = {});

struct ConstructOptions {
  double lo = 1e-6;
  double hi = 1e6;
  int per_decade = 64;
  QuadratureOptions quad;
  std::optional<ConstructIndices> indices;
};

class ScaleConstruction {
 public:
  /// Validates integrability (DomainError otherwise), tabulates I and Phi and
  /// checks Phi < psi, monotonicity, Phi(R)/Phi(r) <= F(R)/F(r) and, when
  /// beta2 < gamma1 is declared, the comparability of Phi and psi.
  static ScaleConstruction build(ScalingFunction F, ScalingFunction psi,
                                 ConstructOptions options = {});

  const ScalingFunction& F() const { return F_; }
  const ScalingFunction& psi() const { return psi_; }
  const ScalingFunction& Phi() const { return Phi_; }

  /// I(r), exact up to quadrature for any r > 0 (not interpolated).
  double integral(double r) const;
  /// F(r) / I(r) without interpolation.
  double phi_exact(double r) const { return F_(r) / integral(r); }

  std::span<const double> grid() const { return grid_; }
  std::span<const double> integral_table() const { return table_; }
  /// max over the grid of psi / Phi; finite when psi and Phi are comparable.
  double psi_over_phi_max() const { return psi_over_phi_max_; }

 private:
  ScaleConstruction(ScalingFunction F, ScalingFunction psi, ScalingFunction Phi)
      : F_(std::move(F)), psi_(std::move(psi)), Phi_(std::move(Phi)) {}

  ScalingFunction F_;
  ScalingFunction psi_;
  ScalingFunction Phi_;
  std::vector<double> grid_;
  std::vector<double> table_;
  QuadratureOptions quad_;
  double psi_over_phi_max_ = 0.0;
};

ScalingFunction build_phi(const ScalingFunction& F, const ScalingFunction& psi,
                          ConstructOptions options = {});

struct TildePhi {
  ScalingFunction function;
  std::optional<ScalingVerdict> lower_check;
};

/// Phi~(s) = c_U^-1 Phi(a) (s/a)^alpha2 below a and Phi(s) above. Asserts
/// Phi~ <= Phi on `grid` (ViolationError) and, when delta is given, checks the
/// global L(delta, C_L) bound.
TildePhi build_tilde_phi(const ScalingFunction& Phi, double a, double alpha2, double c_U,
                         std::span<const double> grid, std::optional<double> delta = {},
                         double C_L = 1.0);

/// phi(lambda) = int_0^inf (1 - e^(-lambda t)) dt / (t psi(F^-1(t))), computed
/// in s = F^-1(t).
double laplace_exponent(const ScalingFunction& F, const ScalingFunction& psi, double lambda,
                        const QuadratureOptions& quad = {});

struct LaplaceReport {
  double value = 0.0;
  /// 1 / (2 Phi(F^-1(1/lambda))).
  double lower = 0.0;
  /// value * Phi(F^-1(1/lambda)): the empirical upper constant.
  double upper_constant = 0.0;
};

/// Laplace exponent together with the two-sided comparison against
/// 1/Phi(F^-1(1/lambda)). Throws ViolationError if the lower half fails.
LaplaceReport laplace_report(const ScaleConstruction& construction, double lambda);

struct MomentReport {
  /// int_1^inf dF/psi < infinity.
  bool tail_integrable = false;
  /// Phi comparable to F on r > 1.
  bool phi_comparable_to_F = false;
  /// Finite moment E[F(d(x, X_t))], equivalent to the other two.
  bool finite_moment = false;
  BlockTest tail_test;
  double phi_over_F_change = 0.0;
};

/// Throws InconclusiveError when the tail test and the ratio test disagree.
MomentReport moment_equivalence_report(const ScaleConstruction& construction,
                                       std::optional<ConstructIndices> indices = {});

}  // namespace hkl
