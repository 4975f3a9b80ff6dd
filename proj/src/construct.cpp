#include "hkl/construct.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>

#include "hkl/errors.hpp"

namespace hkl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBlocks = 60;
constexpr int kFitBlocks = 40;

double dF_over_psi(const ScalingFunction& F, const ScalingFunction& psi, double s) {
  return F.derivative(s) / psi(s);
}

// Integral over [a, b] in log coordinates, one panel per decade.
double integrate_panels(const std::function<double(double)>& g, double a, double b,
                        const QuadratureOptions& quad) {
  double total = 0.0;
  double lo = a;
  while (lo < b) {
    const double hi = lo * 10.0 * (1.0 + 1e-9) >= b ? b : lo * 10.0;
    total += integrate_log(g, lo, hi, quad);
    lo = hi;
  }
  return total;
}

struct BlockFit {
  double log_ratio = 0.0;
  double rss_geometric = 0.0;
  double c = 0.0;
  double power = 0.0;
  double log_power = 0.0;
  double rss_power = 0.0;
  double last_block = 0.0;
  double last_distance = 0.0;
  bool vanished = false;
};

BlockFit fit_blocks(std::span<const double> blocks, std::span<const double> distances) {
  if (blocks.size() != distances.size() || blocks.size() < kFitBlocks) {
    throw DomainError("block test needs at least 40 blocks with matching distances");
  }
  BlockFit fit;
  const std::size_t first = blocks.size() - kFitBlocks;
  fit.last_block = blocks.back();
  fit.last_distance = distances.back();
  for (std::size_t k = first; k < blocks.size(); ++k) {
    if (!(blocks[k] > 1e-300)) {
      fit.vanished = true;
      return fit;
    }
  }
  const int n = kFitBlocks;
  Eigen::MatrixXd geo(n, 2);
  Eigen::MatrixXd pow_log(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const std::size_t k = first + static_cast<std::size_t>(i);
    const double L = distances[k];
    y(i) = std::log(blocks[k]);
    geo(i, 0) = 1.0;
    geo(i, 1) = double(i);
    pow_log(i, 0) = 1.0;
    pow_log(i, 1) = std::log(L);
    pow_log(i, 2) = std::log(std::log(L));
  }
  const Eigen::VectorXd g = geo.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd p = pow_log.colPivHouseholderQr().solve(y);
  fit.log_ratio = g(1);
  fit.rss_geometric = (geo * g - y).squaredNorm();
  fit.c = p(0);
  fit.power = -p(1);
  fit.log_power = -p(2);
  fit.rss_power = (pow_log * p - y).squaredNorm();
  return fit;
}

bool geometric_preferred(const BlockFit& fit) {
  return fit.rss_geometric <= fit.rss_power && fit.log_ratio < 0.0;
}

// Tail of the block series beyond the last block.
double block_tail(const BlockFit& fit) {
  if (fit.vanished) return 0.0;
  const double q = std::exp(fit.log_ratio);
  if (q <= 0.93 || geometric_preferred(fit)) return fit.last_block * q / (1.0 - q);
  // sum over later blocks of e^c L^-p (log L)^-b, L advancing by ln 2 per
  // block, written as an integral in u = log L.
  const double u0 = std::log(fit.last_distance + 0.5 * std::log(2.0));
  auto integrand = [&](double v) {
    const double u = u0 + v;
    return std::exp(fit.c + (1.0 - fit.power) * u) * std::pow(u, -fit.log_power) / std::log(2.0);
  };
  boost::math::quadrature::exp_sinh<double> rule;
  double error = 0.0;
  const double tail = rule.integrate(integrand, 1e-8, &error);
  if (!std::isfinite(tail)) throw QuadratureError("block tail extrapolation diverged");
  return tail;
}

}  // namespace

std::vector<double> dyadic_blocks(const ScalingFunction& F, const ScalingFunction& psi,
                                  double start, bool toward_zero, int count,
                                  const QuadratureOptions& quad) {
  std::vector<double> blocks;
  blocks.reserve(static_cast<std::size_t>(count));
  auto g = [&](double s) { return dF_over_psi(F, psi, s); };
  for (int k = 0; k < count; ++k) {
    const double a = toward_zero ? std::ldexp(start, -(k + 1)) : std::ldexp(start, k);
    blocks.push_back(integrate_log(g, a, 2.0 * a, quad));
  }
  return blocks;
}

BlockTest classify_blocks(std::span<const double> blocks, std::span<const double> distances) {
  const BlockFit fit = fit_blocks(blocks, distances);
  BlockTest test;
  if (fit.vanished) {
    test.method = "geometric";
    test.verdict = SeriesVerdict::converges;
    return test;
  }
  test.ratio = std::exp(fit.log_ratio);
  test.power = fit.power;
  test.log_power = fit.log_power;
  if (test.ratio <= 0.93) {
    test.method = "geometric";
    test.verdict = SeriesVerdict::converges;
    return test;
  }
  if (test.ratio >= 1.0) {
    test.method = "geometric";
    test.verdict = SeriesVerdict::diverges;
    return test;
  }
  test.method = "power-log";
  if (fit.power > 1.05) {
    test.verdict = SeriesVerdict::converges;
  } else if (fit.power < 0.95) {
    test.verdict = SeriesVerdict::diverges;
  } else if (fit.log_power > 1.1) {
    test.verdict = SeriesVerdict::converges;
  } else if (fit.log_power < 0.9) {
    test.verdict = SeriesVerdict::diverges;
  } else {
    throw InconclusiveError("block sizes decay like 1/(k log k); the test cannot decide");
  }
  return test;
}

IntegrabilityResult check_integrability(const ScalingFunction& F, const ScalingFunction& psi,
                                        std::optional<ConstructIndices> indices,
                                        const QuadratureOptions& quad) {
  IntegrabilityResult result;
  if (indices && indices->gamma1 > indices->beta2) {
    result.test.method = "analytic";
    result.test.verdict = SeriesVerdict::converges;
  } else {
    const auto blocks = dyadic_blocks(F, psi, 1.0, true, kBlocks, quad);
    std::vector<double> distances(blocks.size());
    for (std::size_t k = 0; k < blocks.size(); ++k) distances[k] = (double(k) + 0.5) * std::log(2.0);
    result.test = classify_blocks(blocks, distances);
  }
  result.integrable = result.test.verdict == SeriesVerdict::converges;
  result.integral = result.integrable ? integral_from_zero(F, psi, 1.0, quad) : kInf;
  return result;
}

double integral_from_zero(const ScalingFunction& F, const ScalingFunction& psi, double r,
                          const QuadratureOptions& quad) {
  if (!(r > 0.0)) throw DomainError("integral_from_zero needs r > 0");
  constexpr double kBlockStart = 1e-3;
  if (r > kBlockStart) {
    auto g = [&](double s) { return dF_over_psi(F, psi, s); };
    return integral_from_zero(F, psi, kBlockStart, quad) + integrate_panels(g, kBlockStart, r, quad);
  }
  const auto blocks = dyadic_blocks(F, psi, r, true, kBlocks, quad);
  std::vector<double> distances(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    distances[k] = std::log(1.0 / r) + (double(k) + 0.5) * std::log(2.0);
  }
  double sum = 0.0;
  for (double b : blocks) sum += b;
  return sum + block_tail(fit_blocks(blocks, distances));
}

ScaleConstruction ScaleConstruction::build(ScalingFunction F, ScalingFunction psi,
                                           ConstructOptions options) {
  const auto integrability = check_integrability(F, psi, options.indices, options.quad);
  if (!integrability.integrable) {
    throw DomainError("integrability condition fails: int_0^1 dF/psi diverges (" +
                      integrability.test.method + " block test)");
  }
  auto grid = geometric_grid(options.lo, options.hi, options.per_decade);
  std::vector<double> table(grid.size());
  auto g = [&](double s) { return dF_over_psi(F, psi, s); };
  table[0] = integral_from_zero(F, psi, grid[0], options.quad);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    table[i] = table[i - 1] + integrate_log(g, grid[i - 1], grid[i], options.quad);
  }

  std::vector<double> values(grid.size());
  double psi_over_phi = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = F(grid[i]) / table[i];
    const double ratio = values[i] / psi(grid[i]);
    if (ratio > 1.0 + 1e-8) throw ViolationError("constructed Phi exceeds psi", grid[i], ratio);
    psi_over_phi = std::max(psi_over_phi, 1.0 / ratio);
    if (i > 0) {
      if (values[i] < values[i - 1] * (1.0 - 1e-9)) {
        throw ViolationError("constructed Phi decreases", grid[i], values[i] / values[i - 1]);
      }
      values[i] = std::max(values[i], values[i - 1]);
      // Phi(R)/Phi(r) <= F(R)/F(r) is I(R) >= I(r).
      if (table[i] < table[i - 1]) {
        throw ViolationError("integral table decreases", grid[i], table[i] / table[i - 1]);
      }
    }
  }

  ScaleConstruction out(std::move(F), std::move(psi), ScalingFunction::tabulated(grid, values));
  out.grid_ = std::move(grid);
  out.table_ = std::move(table);
  out.quad_ = options.quad;
  out.psi_over_phi_max_ = psi_over_phi;
  return out;
}

double ScaleConstruction::integral(double r) const {
  if (!(r > 0.0)) throw DomainError("I(r) needs r > 0");
  auto g = [this](double s) { return dF_over_psi(F_, psi_, s); };
  if (r < grid_.front()) return integral_from_zero(F_, psi_, r, quad_);
  if (r >= grid_.back()) return table_.back() + integrate_panels(g, grid_.back(), r, quad_);
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
  const auto i = static_cast<std::size_t>(it - grid_.begin()) - 1;
  return table_[i] + integrate_log(g, grid_[i], r, quad_);
}

ScalingFunction build_phi(const ScalingFunction& F, const ScalingFunction& psi,
                          ConstructOptions options) {
  return ScaleConstruction::build(F, psi, std::move(options)).Phi();
}

TildePhi build_tilde_phi(const ScalingFunction& Phi, double a, double alpha2, double c_U,
                         std::span<const double> grid, std::optional<double> delta,
                         double C_L) {
  if (!(a > 0.0) || !(alpha2 > 0.0) || !(c_U >= 1.0)) {
    throw DomainError("build_tilde_phi needs a > 0, alpha2 > 0, c_U >= 1");
  }
  const double scale = Phi(a) / (c_U * std::pow(a, alpha2));
  auto eval = [=](double s) { return s < a ? scale * std::pow(s, alpha2) : Phi(s); };
  auto fn = ScalingFunction::composed("tilde-Phi", eval);
  for (double s : grid) {
    const double ratio = fn(s) / Phi(s);
    if (ratio > 1.0 + 1e-12) throw ViolationError("tilde Phi exceeds Phi", s, ratio);
  }
  TildePhi out{fn, std::nullopt};
  if (delta) out.lower_check = check_scaling(fn, ScalingBound::lower(*delta, C_L), grid);
  return out;
}

double laplace_exponent(const ScalingFunction& F, const ScalingFunction& psi, double lambda,
                        const QuadratureOptions& quad) {
  if (!(lambda > 0.0)) throw DomainError("laplace_exponent needs lambda > 0");
  auto g = [&](double s) {
    const double Fs = F(s);
    return -std::expm1(-lambda * Fs) * F.derivative(s) / (Fs * psi(s));
  };
  const double s_star = generalized_inverse(F, 1.0 / lambda);
  const double s_small = generalized_inverse(F, 1e-8 / lambda);
  // Below s_small, 1 - e^(-lambda F) = lambda F to relative 1e-8.
  double total = lambda * integral_from_zero(F, psi, s_small, quad);
  total += integrate_panels(g, s_small, s_star, quad);

  double lo = s_star;
  double previous = 0.0;
  for (int k = 0; k < 400; ++k) {
    const double block = integrate_log(g, lo, 2.0 * lo, quad);
    total += block;
    if (k >= 8 && block < 1e-14 * total) return total;
    if (k >= 8 && previous > 0.0 && block / previous < 0.9 && block < 1e-6 * total) {
      const double q = block / previous;
      return total + block * q / (1.0 - q);
    }
    previous = block;
    lo *= 2.0;
  }
  throw QuadratureError("Levy tail of the Laplace exponent did not converge");
}

LaplaceReport laplace_report(const ScaleConstruction& construction, double lambda) {
  LaplaceReport report;
  report.value = laplace_exponent(construction.F(), construction.psi(), lambda);
  const double x = generalized_inverse(construction.F(), 1.0 / lambda);
  const double phi_x = construction.phi_exact(x);
  report.lower = 1.0 / (2.0 * phi_x);
  report.upper_constant = report.value * phi_x;
  if (report.value < report.lower * (1.0 - 1e-9)) {
    throw ViolationError("Laplace exponent below 1/(2 Phi(F^-1(1/lambda)))", lambda,
                         report.value / report.lower);
  }
  return report;
}

MomentReport moment_equivalence_report(const ScaleConstruction& construction,
                                       std::optional<ConstructIndices> indices) {
  MomentReport report;
  if (indices && indices->beta1 > indices->gamma2) {
    report.tail_test.method = "analytic";
    report.tail_test.verdict = SeriesVerdict::converges;
  } else {
    const auto blocks = dyadic_blocks(construction.F(), construction.psi(), 1.0, false, kBlocks);
    std::vector<double> distances(blocks.size());
    for (std::size_t k = 0; k < blocks.size(); ++k) distances[k] = (double(k) + 0.5) * std::log(2.0);
    report.tail_test = classify_blocks(blocks, distances);
  }
  report.tail_integrable = report.tail_test.verdict == SeriesVerdict::converges;

  const auto& F = construction.F();
  const double near = construction.phi_exact(1e3) / F(1e3);
  const double far = construction.phi_exact(1e6) / F(1e6);
  report.phi_over_F_change = std::abs(std::log(far / near));
  report.phi_comparable_to_F = report.phi_over_F_change < std::log(1.05);
  if (report.phi_comparable_to_F != report.tail_integrable) {
    throw InconclusiveError("tail block test and Phi/F ratio test disagree");
  }
  report.finite_moment = report.tail_integrable;
  return report;
}

}  // namespace hkl
