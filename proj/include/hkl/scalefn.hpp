#pragma once

// Monotone functions on (0, inf) with weak scaling metadata: evaluation,
// generalized inversion, sampled verification of L/U scaling conditions and
// the index algebra relating a function's bounds to those of its inverse.

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hkl {

enum class FunctionKind { power, piecewise_power, power_log, tabulated, composed };

std::string to_string(FunctionKind kind);

/// Positive non-decreasing function of a positive argument.
///
/// Instances are immutable and cheap to copy; all evaluation state is shared.
/// Power-type kinds carry an exact derivative and inverse, the others fall
/// back to finite differences and bisection.
class ScalingFunction {
 public:
  using Fn = std::function<double(double)>;

  /// coef * s^exponent.
  static ScalingFunction power(double exponent, double coef = 1.0);

  /// Continuous-from-the-right piecewise power law. `exponents` has one more
  /// entry than `breaks`; `jumps` (optional, each >= 1) multiplies the value
  /// when crossing the corresponding break.
  static ScalingFunction piecewise_power(std::vector<double> breaks, std::vector<double> exponents,
                                         std::vector<double> jumps = {}, double coef = 1.0);

  /// coef * s^gamma (log 1/s)^a (log log 1/s)^b for s < s0, continued above
  /// s0 as a power with exponent `gamma_above`. Requires s0 < 1/e.
  static ScalingFunction log_corrected_at_zero(double gamma, double a, double b, double s0,
                                               double gamma_above, double coef = 1.0);

  /// coef * s^gamma (log s)^a (log log s)^b for s > s1, continued below s1
  /// as a power with exponent `gamma_below`. Requires s1 > e.
  static ScalingFunction log_corrected_at_infinity(double gamma, double a, double b, double s1,
                                                   double gamma_below, double coef = 1.0);

  /// Monotone piecewise-linear interpolation in log-log coordinates, with
  /// the end slopes used for extrapolation.
  static ScalingFunction tabulated(std::vector<double> grid, std::vector<double> values);

  static ScalingFunction composed(std::string label, Fn f, Fn derivative = {}, Fn inverse = {});

  double operator()(double s) const { return eval_(s); }

  /// Declared derivative when available, otherwise a centered difference
  /// with relative step 1e-5.
  double derivative(double s) const;

  bool has_exact_inverse() const noexcept { return static_cast<bool>(inverse_); }
  double exact_inverse(double t) const { return inverse_(t); }

  FunctionKind kind() const noexcept { return kind_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  const std::string& label() const noexcept { return label_; }

 private:
  ScalingFunction(FunctionKind kind, std::string label, std::vector<double> params, Fn eval,
                  Fn derivative, Fn inverse);

  FunctionKind kind_ = FunctionKind::composed;
  std::string label_;
  std::vector<double> params_;
  Fn eval_;
  Fn derivative_;
  Fn inverse_;
};

/// Geometric grid from lo to hi (both included) with `per_decade` points per
/// factor of ten.
std::vector<double> geometric_grid(double lo, double hi, int per_decade = 64);

enum class BoundSide { lower, upper };

/// `below` is the L_a / U_a window r <= R < a, `above` the L^a / U^a window
/// a <= r <= R.
enum class BoundWindow { global, below, above };

/// One weak scaling condition L_a(beta, c) or U_a(beta, C).
struct ScalingBound {
  BoundSide side = BoundSide::lower;
  double exponent = 1.0;
  double constant = 1.0;
  BoundWindow window = BoundWindow::global;
  double threshold = std::numeric_limits<double>::infinity();

  static ScalingBound lower(double exponent, double constant,
                            BoundWindow window = BoundWindow::global,
                            double threshold = std::numeric_limits<double>::infinity());
  static ScalingBound upper(double exponent, double constant,
                            BoundWindow window = BoundWindow::global,
                            double threshold = std::numeric_limits<double>::infinity());

  /// Throws DomainError unless the constant is on the right side of 1 and the
  /// threshold is positive.
  void validate() const;

  /// True when the ordered pair r <= R lies in the window.
  bool admits(double r, double R) const;

  std::string describe() const;
};

struct ScalingVerdict {
  bool pass = true;
  /// min (lower side) or max (upper side) of f(R)/f(r) * (R/r)^(-beta).
  double worst_ratio = 1.0;
  double witness_r = 0.0;
  double witness_R = 0.0;
  std::size_t pairs_checked = 0;
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  std::size_t grid_points = 0;
};

/// Checks the bound on every ordered pair of grid points lying in its window.
/// Failure is definitive; a pass is relative to the grid.
ScalingVerdict check_scaling(const ScalingFunction& f, const ScalingBound& bound,
                             std::span<const double> grid);

struct InverseOptions {
  /// Width of the final bracket on the log scale.
  double rel_tol = 1e-10;
  /// The search bracket is expanded by doubling up to this factor.
  double max_expansion = 0x1p100;
};

/// inf{ s > 0 : f(s) > t } by bisection on a log-scaled bracket. On a plateau
/// at level t the right end of the plateau is returned. The returned point
/// always lies in the strict-exceedance set and at most a factor
/// (1 + rel_tol) to the right of the infimum.
double generalized_inverse(const ScalingFunction& f, double t, const InverseOptions& options = {});

struct SandwichReport {
  /// max over the grid of max(f(f^-1(t))/t, t/f(f^-1(t))).
  double worst_ratio = 1.0;
  double worst_t = 0.0;
  std::size_t points = 0;
};

/// Asserts c_U^-1 t <= f(f^-1(t)) <= c_U t on the grid. `bound_upper` must be
/// a verified global upper bound U(alpha2, c_U) of f. The slack accounts for
/// the inverse tolerance: (1 + rel_tol)^alpha2. Throws ViolationError.
SandwichReport check_inverse_sandwich(const ScalingFunction& f, const ScalingBound& bound_upper,
                                      std::span<const double> t_grid,
                                      const InverseOptions& options = {});

/// Moves the window of a lower bound: L_a(beta, c) -> L_b(beta, c (a/b)^beta)
/// for b >= a, and L^a(beta, c) -> L^b(beta, c (b/a)^beta) for b <= a.
ScalingBound extend_window(const ScalingBound& bound, double new_threshold);

/// Bound satisfied by the generalized inverse of f, given a bound of f:
/// L_a(beta, c) -> U_{f(a)}(1/beta, c^(-1/beta)) and
/// U_a(beta, C) -> L_{f(a)}(1/beta, C^(-1/beta)); above-windows likewise.
ScalingBound inverse_bound(const ScalingFunction& f, const ScalingBound& bound);

enum class PowerRegime { below_one, above_one };

struct PowerComposeResult {
  double c2 = 1.0;
  int chain_length = 1;
  /// max over the grid of max(h(r^m)/h(r), h(r)/h(r^m)).
  double worst_ratio = 1.0;
};

/// Constant c2 with c2^-1 h(r) <= h(r^m) <= c2 h(r), derived from
/// c1^-1 h(r) <= h(r^k) <= c1 h(r) by chaining powers of k. Checks the
/// premise (DomainError) and the conclusion (ViolationError) on the grid.
PowerComposeResult power_compose_constant(const ScalingFunction& h, double k, double c1, double m,
                                          PowerRegime regime, std::span<const double> grid);

}  // namespace hkl
