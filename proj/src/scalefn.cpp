#include "hkl/scalefn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "hkl/errors.hpp"

namespace hkl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

std::string to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::power:
      return "power";
    case FunctionKind::piecewise_power:
      return "piecewise-power";
    case FunctionKind::power_log:
      return "power-log";
    case FunctionKind::tabulated:
      return "tabulated";
    case FunctionKind::composed:
      return "composed";
  }
  return "unknown";
}

ScalingFunction::ScalingFunction(FunctionKind kind, std::string label, std::vector<double> params,
                                 Fn eval, Fn derivative, Fn inverse)
    : kind_(kind),
      label_(std::move(label)),
      params_(std::move(params)),
      eval_(std::move(eval)),
      derivative_(std::move(derivative)),
      inverse_(std::move(inverse)) {}

ScalingFunction ScalingFunction::power(double exponent, double coef) {
  require_positive(exponent, "power exponent");
  require_positive(coef, "power coefficient");
  std::ostringstream label;
  label << coef << "*s^" << exponent;
  return ScalingFunction(
      FunctionKind::power, label.str(), {exponent, coef},
      [=](double s) { return coef * std::pow(s, exponent); },
      [=](double s) { return coef * exponent * std::pow(s, exponent - 1.0); },
      [=](double t) { return std::pow(t / coef, 1.0 / exponent); });
}

ScalingFunction ScalingFunction::piecewise_power(std::vector<double> breaks,
                                                 std::vector<double> exponents,
                                                 std::vector<double> jumps, double coef) {
  if (exponents.size() != breaks.size() + 1) {
    throw DomainError("piecewise power needs one more exponent than breaks");
  }
  if (jumps.empty()) jumps.assign(breaks.size(), 1.0);
  if (jumps.size() != breaks.size()) throw DomainError("one jump factor per break");
  require_positive(coef, "piecewise power coefficient");
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    require_positive(breaks[i], "break");
    if (i > 0 && !(breaks[i] > breaks[i - 1])) throw DomainError("breaks must increase");
    if (!(jumps[i] >= 1.0)) throw DomainError("jump factors must be >= 1");
  }
  for (double e : exponents) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw DomainError("exponents must be >= 0");
  }

  // Value just right of each break; anchors[0] belongs to the first piece.
  const std::size_t pieces = exponents.size();
  std::vector<double> anchor_s(pieces, 1.0);
  std::vector<double> anchor_v(pieces, coef);
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    const double left =
        anchor_v[i] * std::pow(breaks[i] / anchor_s[i], exponents[i]);
    anchor_s[i + 1] = breaks[i];
    anchor_v[i + 1] = left * jumps[i];
  }

  auto piece = [breaks](double s) {
    return static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), s) -
                                    breaks.begin());
  };
  auto eval = [=](double s) {
    const std::size_t i = piece(s);
    return anchor_v[i] * std::pow(s / anchor_s[i], exponents[i]);
  };
  auto deriv = [=](double s) {
    const std::size_t i = piece(s);
    return exponents[i] * anchor_v[i] * std::pow(s / anchor_s[i], exponents[i]) / s;
  };
  // Exact generalized inverse: locate the piece whose range contains t.
  auto inverse = [=](double t) {
    for (std::size_t i = 0; i < pieces; ++i) {
      const double hi_s = i < breaks.size() ? breaks[i] : kInf;
      const double hi_v =
          i < breaks.size() ? anchor_v[i] * std::pow(hi_s / anchor_s[i], exponents[i]) : kInf;
      if (t < hi_v) {
        if (exponents[i] == 0.0) {
          // Flat piece below t cannot happen; flat piece at level t ends at hi_s.
          return anchor_v[i] > t ? (i == 0 ? 0.0 : anchor_s[i]) : hi_s;
        }
        const double s = anchor_s[i] * std::pow(t / anchor_v[i], 1.0 / exponents[i]);
        return std::max(s, i == 0 ? 0.0 : anchor_s[i]);
      }
    }
    return kInf;
  };

  std::vector<double> params;
  params.push_back(coef);
  params.insert(params.end(), breaks.begin(), breaks.end());
  params.insert(params.end(), exponents.begin(), exponents.end());
  params.insert(params.end(), jumps.begin(), jumps.end());
  std::ostringstream label;
  label << "piecewise-power(" << breaks.size() << " breaks)";
  return ScalingFunction(FunctionKind::piecewise_power, label.str(), std::move(params), eval,
                         deriv, inverse);
}

ScalingFunction ScalingFunction::log_corrected_at_zero(double gamma, double a, double b, double s0,
                                                       double gamma_above, double coef) {
  require_positive(gamma, "gamma");
  require_positive(gamma_above, "gamma_above");
  require_positive(coef, "coefficient");
  if (!(s0 > 0.0 && s0 < std::exp(-1.0))) throw DomainError("log correction needs s0 < 1/e");
  auto core = [=](double s) {
    const double L = std::log(1.0 / s);
    return coef * std::pow(s, gamma) * std::pow(L, a) * std::pow(std::log(L), b);
  };
  const double v0 = core(s0);
  auto eval = [=](double s) { return s < s0 ? core(s) : v0 * std::pow(s / s0, gamma_above); };
  auto deriv = [=](double s) {
    if (s >= s0) return gamma_above * v0 * std::pow(s / s0, gamma_above) / s;
    const double L = std::log(1.0 / s);
    const double M = std::log(L);
    return core(s) * (gamma - a / L - b / (L * M)) / s;
  };
  std::ostringstream label;
  label << "s^" << gamma << "(log 1/s)^" << a << "(loglog 1/s)^" << b << " below " << s0;
  return ScalingFunction(FunctionKind::power_log, label.str(), {gamma, a, b, s0, gamma_above, coef},
                         eval, deriv, {});
}

ScalingFunction ScalingFunction::log_corrected_at_infinity(double gamma, double a, double b,
                                                           double s1, double gamma_below,
                                                           double coef) {
  require_positive(gamma, "gamma");
  require_positive(gamma_below, "gamma_below");
  require_positive(coef, "coefficient");
  if (!(s1 > std::exp(1.0))) throw DomainError("log correction needs s1 > e");
  auto core = [=](double s) {
    const double L = std::log(s);
    return coef * std::pow(s, gamma) * std::pow(L, a) * std::pow(std::log(L), b);
  };
  const double v1 = core(s1);
  auto eval = [=](double s) { return s > s1 ? core(s) : v1 * std::pow(s / s1, gamma_below); };
  auto deriv = [=](double s) {
    if (s <= s1) return gamma_below * v1 * std::pow(s / s1, gamma_below) / s;
    const double L = std::log(s);
    const double M = std::log(L);
    return core(s) * (gamma + a / L + b / (L * M)) / s;
  };
  std::ostringstream label;
  label << "s^" << gamma << "(log s)^" << a << "(loglog s)^" << b << " above " << s1;
  return ScalingFunction(FunctionKind::power_log, label.str(),
                         {gamma, a, b, s1, gamma_below, coef}, eval, deriv, {});
}

ScalingFunction ScalingFunction::tabulated(std::vector<double> grid, std::vector<double> values) {
  if (grid.size() < 2 || grid.size() != values.size()) {
    throw DomainError("tabulated function needs at least two matching points");
  }
  auto log_s = std::make_shared<std::vector<double>>(grid.size());
  auto log_v = std::make_shared<std::vector<double>>(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require_positive(grid[i], "tabulation abscissa");
    require_positive(values[i], "tabulated value");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("tabulation grid must increase");
    if (i > 0 && values[i] < values[i - 1]) throw DomainError("tabulated values must not decrease");
    (*log_s)[i] = std::log(grid[i]);
    (*log_v)[i] = std::log(values[i]);
  }
  auto locate = [log_s](double x) {
    const auto& xs = *log_s;
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
    return std::min(i, xs.size() - 2);
  };
  auto eval = [=](double s) {
    const double x = std::log(s);
    const std::size_t i = locate(x);
    const auto& xs = *log_s;
    const auto& ys = *log_v;
    const double slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    return std::exp(ys[i] + slope * (x - xs[i]));
  };
  auto deriv = [=](double s) {
    const double x = std::log(s);
    const std::size_t i = locate(x);
    const auto& xs = *log_s;
    const auto& ys = *log_v;
    const double slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    return slope * std::exp(ys[i] + slope * (x - xs[i])) / s;
  };
  std::vector<double> params = {grid.front(), grid.back(), static_cast<double>(grid.size())};
  return ScalingFunction(FunctionKind::tabulated, "tabulated", std::move(params), eval, deriv, {});
}

ScalingFunction ScalingFunction::composed(std::string label, Fn f, Fn derivative, Fn inverse) {
  if (!f) throw DomainError("composed function needs an evaluator");
  return ScalingFunction(FunctionKind::composed, std::move(label), {}, std::move(f),
                         std::move(derivative), std::move(inverse));
}

double ScalingFunction::derivative(double s) const {
  if (derivative_) return derivative_(s);
  const double h = 1e-5 * s;
  return (eval_(s + h) - eval_(s - h)) / (2.0 * h);
}

std::vector<double> geometric_grid(double lo, double hi, int per_decade) {
  require_positive(lo, "grid lower end");
  require_positive(hi, "grid upper end");
  if (hi < lo) throw DomainError("grid upper end below lower end");
  if (per_decade < 1) throw DomainError("grid needs at least one point per decade");
  const double decades = std::log10(hi / lo);
  const auto steps = static_cast<std::size_t>(std::ceil(decades * per_decade - 1e-9));
  std::vector<double> grid;
  grid.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double x = std::log10(lo) + decades * (steps == 0 ? 0.0 : double(i) / double(steps));
    grid.push_back(std::pow(10.0, x));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

ScalingBound ScalingBound::lower(double exponent, double constant, BoundWindow window,
                                 double threshold) {
  ScalingBound b{BoundSide::lower, exponent, constant, window, threshold};
  b.validate();
  return b;
}

ScalingBound ScalingBound::upper(double exponent, double constant, BoundWindow window,
                                 double threshold) {
  ScalingBound b{BoundSide::upper, exponent, constant, window, threshold};
  b.validate();
  return b;
}

void ScalingBound::validate() const {
  require_positive(exponent, "scaling exponent");
  if (side == BoundSide::lower && !(constant > 0.0 && constant <= 1.0)) {
    throw DomainError("lower scaling constant must lie in (0, 1]");
  }
  if (side == BoundSide::upper && !(constant >= 1.0 && std::isfinite(constant))) {
    throw DomainError("upper scaling constant must lie in [1, inf)");
  }
  if (window != BoundWindow::global && !(threshold > 0.0)) {
    throw DomainError("window threshold must be positive");
  }
}

bool ScalingBound::admits(double r, double R) const {
  if (!(r <= R)) return false;
  switch (window) {
    case BoundWindow::global:
      return true;
    case BoundWindow::below:
      return R < threshold;
    case BoundWindow::above:
      return threshold <= r;
  }
  return false;
}

std::string ScalingBound::describe() const {
  std::ostringstream out;
  out << (side == BoundSide::lower ? "L" : "U");
  if (window == BoundWindow::below) out << "_" << threshold;
  if (window == BoundWindow::above) out << "^" << threshold;
  out << "(" << exponent << ", " << constant << ")";
  return out.str();
}

ScalingVerdict check_scaling(const ScalingFunction& f, const ScalingBound& bound,
                             std::span<const double> grid) {
  bound.validate();
  ScalingVerdict verdict;
  verdict.grid_points = grid.size();
  if (!grid.empty()) {
    verdict.grid_lo = grid.front();
    verdict.grid_hi = grid.back();
  }
  std::vector<double> log_values(grid.size());
  std::vector<double> log_grid(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    log_grid[i] = std::log(grid[i]);
    log_values[i] = std::log(f(grid[i]));
  }
  const bool lower = bound.side == BoundSide::lower;
  verdict.worst_ratio = lower ? kInf : 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i; j < grid.size(); ++j) {
      if (!bound.admits(grid[i], grid[j])) continue;
      ++verdict.pairs_checked;
      const double log_ratio =
          log_values[j] - log_values[i] - bound.exponent * (log_grid[j] - log_grid[i]);
      const double ratio = std::exp(log_ratio);
      const bool worse = lower ? ratio < verdict.worst_ratio : ratio > verdict.worst_ratio;
      if (worse) {
        verdict.worst_ratio = ratio;
        verdict.witness_r = grid[i];
        verdict.witness_R = grid[j];
      }
    }
  }
  if (verdict.pairs_checked == 0) {
    verdict.worst_ratio = 1.0;
    return verdict;
  }
  constexpr double slack = 1e-12;
  verdict.pass = lower ? verdict.worst_ratio >= bound.constant * (1.0 - slack)
                       : verdict.worst_ratio <= bound.constant * (1.0 + slack);
  return verdict;
}

double generalized_inverse(const ScalingFunction& f, double t, const InverseOptions& options) {
  if (!(t > 0.0)) throw DomainError("generalized inverse needs t > 0");
  if (f.has_exact_inverse()) {
    const double s = f.exact_inverse(t);
    if (!std::isfinite(s)) throw BracketError("function never exceeds the level");
    return s;
  }
  const double max_hi = options.max_expansion;
  const double min_lo = 1.0 / options.max_expansion;
  double lo = 1.0;
  double hi = 1.0;
  if (f(1.0) > t) {
    // Walk left until the level is no longer exceeded.
    while (f(lo) > t) {
      hi = lo;
      lo *= 0.5;
      if (lo < min_lo) {
        throw BracketError("level lies below the range of the function on the search interval");
      }
    }
  } else {
    while (!(f(hi) > t)) {
      lo = hi;
      hi *= 2.0;
      if (hi > max_hi) throw BracketError("function never exceeds the level on the search interval");
    }
  }
  // Invariant: f(lo) <= t < f(hi).
  while (std::log(hi / lo) > options.rel_tol) {
    const double mid = std::sqrt(lo * hi);
    if (f(mid) > t) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

SandwichReport check_inverse_sandwich(const ScalingFunction& f, const ScalingBound& bound_upper,
                                      std::span<const double> t_grid,
                                      const InverseOptions& options) {
  bound_upper.validate();
  if (bound_upper.side != BoundSide::upper || bound_upper.window != BoundWindow::global) {
    throw DomainError("inverse sandwich needs a global upper bound");
  }
  const double c_u = bound_upper.constant;
  const double slack = std::pow(1.0 + options.rel_tol, bound_upper.exponent) - 1.0 + 1e-14;
  SandwichReport report;
  for (double t : t_grid) {
    const double s = generalized_inverse(f, t, options);
    const double value = f(s);
    const double ratio = value / t;
    ++report.points;
    const double worst = std::max(ratio, 1.0 / ratio);
    if (worst > report.worst_ratio) {
      report.worst_ratio = worst;
      report.worst_t = t;
    }
    if (ratio > c_u * (1.0 + slack) || ratio < (1.0 / c_u) / (1.0 + slack)) {
      throw ViolationError("inverse sandwich violated", t, ratio);
    }
  }
  return report;
}

ScalingBound extend_window(const ScalingBound& bound, double new_threshold) {
  bound.validate();
  require_positive(new_threshold, "new threshold");
  if (bound.side != BoundSide::lower) {
    throw DomainError("only lower bounds can be re-windowed from the bound alone");
  }
  ScalingBound out = bound;
  const double a = bound.threshold;
  const double b = new_threshold;
  switch (bound.window) {
    case BoundWindow::global:
      return out;
    case BoundWindow::below:
      if (b < a) throw DomainError("a below-window can only be enlarged (b >= a)");
      out.constant = bound.constant * std::pow(a / b, bound.exponent);
      break;
    case BoundWindow::above:
      if (b > a) throw DomainError("an above-window can only be enlarged (b <= a)");
      out.constant = bound.constant * std::pow(b / a, bound.exponent);
      break;
  }
  out.threshold = b;
  return out;
}

ScalingBound inverse_bound(const ScalingFunction& f, const ScalingBound& bound) {
  bound.validate();
  ScalingBound out;
  out.exponent = 1.0 / bound.exponent;
  out.side = bound.side == BoundSide::lower ? BoundSide::upper : BoundSide::lower;
  out.constant = std::pow(bound.constant, -1.0 / bound.exponent);
  out.window = bound.window;
  out.threshold = bound.window == BoundWindow::global ? kInf : f(bound.threshold);
  return out;
}

PowerComposeResult power_compose_constant(const ScalingFunction& h, double k, double c1, double m,
                                          PowerRegime regime, std::span<const double> grid) {
  if (!(k > 1.0)) throw DomainError("power_compose_constant needs k > 1");
  if (!(c1 > 1.0)) throw DomainError("power_compose_constant needs c1 > 1");
  require_positive(m, "m");
  auto in_regime = [regime](double r) {
    return regime == PowerRegime::below_one ? r < 1.0 : r > 1.0;
  };
  constexpr double slack = 1e-12;
  for (double r : grid) {
    if (!in_regime(r)) continue;
    const double ratio = h(std::pow(r, k)) / h(r);
    if (ratio > c1 * (1.0 + slack) || ratio < (1.0 / c1) / (1.0 + slack)) {
      throw DomainError("premise c1^-1 h(r) <= h(r^k) <= c1 h(r) fails on the grid");
    }
  }

  PowerComposeResult result;
  if (m >= 1.0 && m <= k) {
    result.chain_length = 1;
  } else if (m > k) {
    result.chain_length = static_cast<int>(std::ceil(std::log(m) / std::log(k) - 1e-12));
  } else {
    int n = 1;
    while (m * std::pow(k, n) < 1.0) ++n;
    result.chain_length = n;
  }
  result.c2 = std::pow(c1, result.chain_length);

  for (double r : grid) {
    if (!in_regime(r)) continue;
    const double ratio = h(std::pow(r, m)) / h(r);
    result.worst_ratio = std::max({result.worst_ratio, ratio, 1.0 / ratio});
    if (ratio > result.c2 * (1.0 + slack) || ratio < (1.0 / result.c2) / (1.0 + slack)) {
      throw ViolationError("derived constant fails on the grid", r, ratio);
    }
  }
  return result;
}

}  // namespace hkl
