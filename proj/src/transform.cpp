#include "hkl/transform.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>

#include "hkl/errors.hpp"

namespace hkl {

namespace {

constexpr int kBracketScan = 256;
constexpr int kWideScanPerDecade = 64;

struct ScanResult {
  double value;
  double log_s;
};

// Scan log s over [lo, hi] on n points, then polish the best cell with Brent.
ScanResult scan_and_polish(const ScalingFunction& phi, double r, double t, double lo, double hi,
                           int n) {
  auto objective = [&](double u) {
    const double s = std::exp(u);
    return r / s - t / phi(s);
  };
  const double a = std::log(lo);
  const double b = std::log(hi);
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<double> us(n);
  for (int i = 0; i < n; ++i) {
    us[i] = a + (b - a) * double(i) / double(n - 1);
    const double v = objective(us[i]);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  const double left = us[std::max(best - 1, 0)];
  const double right = us[std::min(best + 1, n - 1)];
  if (right > left) {
    auto negated = [&](double u) { return -objective(u); };
    const auto polished = boost::math::tools::brent_find_minima(negated, left, right, std::numeric_limits<double>::digits / 2);
    if (-polished.second > best_value) return {-polished.second, polished.first};
  }
  return {best_value, us[best]};
}

}  // namespace

TransformResult sup_transform(const ScalingFunction& phi, const PhiIndices& indices, double r,
                              double t) {
  if (!(r > 0.0) || !(t > 0.0)) throw DomainError("sup_transform needs r > 0 and t > 0");
  const double inv = generalized_inverse(phi, t);
  TransformResult result;
  const bool bracket_applies = indices.delta && *indices.delta > 1.0 && r >= 2.0 * indices.c_U * inv;
  if (bracket_applies) {
    const double delta1 = 1.0 / (*indices.delta - 1.0);
    const double b = std::pow(indices.C_L / indices.c_U, delta1);
    result.bracket_lo = b * std::pow(r, -delta1) * std::pow(inv, delta1 + 1.0);
    result.bracket_hi = 2.0 * inv;
    result.bracketed = result.bracket_lo < result.bracket_hi;
  }
  if (result.bracketed) {
    const auto best = scan_and_polish(phi, r, t, result.bracket_lo, result.bracket_hi, kBracketScan);
    result.value = best.value;
    result.argmax = std::exp(best.log_s);
  } else {
    // Widen the scan while the maximum sits on an end of the window.
    double lo = 1e-6 * inv, hi = 1e2 * inv;
    ScanResult best{};
    for (int round = 0; round < 16; ++round) {
      const int decades = int(std::ceil(std::log10(hi / lo)));
      best = scan_and_polish(phi, r, t, lo, hi, decades * kWideScanPerDecade + 1);
      const double edge = std::log(10.0) / kWideScanPerDecade;
      const bool at_hi = best.log_s > std::log(hi) - 1.5 * edge;
      const bool at_lo = best.log_s < std::log(lo) + 1.5 * edge;
      if (!at_hi && !at_lo) break;
      if (at_hi) hi *= 1e4;
      if (at_lo) lo *= 1e-4;
    }
    result.bracket_lo = lo;
    result.bracket_hi = hi;
    result.value = best.value;
    result.argmax = std::exp(best.log_s);
  }
  return result;
}

double f1_lower_bound(double F_r, double t, double gamma1, double gamma2, double c_F) {
  if (!(gamma1 > 1.0) || gamma2 < gamma1) throw DomainError("need 1 < gamma1 <= gamma2");
  if (!(c_F >= 1.0)) throw DomainError("c_F must be >= 1");
  const double x = F_r / t;
  auto branch = [&](double theta, double gamma) {
    return 1.0 / theta - c_F / (x * std::pow(theta, gamma));
  };
  const double theta_a = std::min(1.0, std::pow(gamma2 * c_F / x, 1.0 / (gamma2 - 1.0)));
  const double theta_b = std::max(1.0, std::pow(gamma1 * c_F / x, 1.0 / (gamma1 - 1.0)));
  return std::max({0.0, branch(theta_a, gamma2), branch(theta_b, gamma1)});
}

F1PowerForms f1_power_forms(double F_r, double t, double gamma1, double gamma2) {
  const double x = F_r / t;
  const double hi = std::pow(x, 1.0 / (gamma2 - 1.0));
  return {std::min(std::pow(x, 1.0 / (gamma1 - 1.0)), hi), hi - 1.0};
}

TransformScalingResult transform_scaling_check(const ScalingFunction& phi,
                                               const PhiIndices& indices, double r, double t,
                                               double c1, double c2, double c3) {
  const double inv = generalized_inverse(phi, t);
  if (r >= 2.0 * indices.c_U * inv) {
    const double base = sup_transform(phi, indices, r, t).value;
    const double scaled = sup_transform(phi, indices, c1 * r, c2 * t).value;
    return {TransformRegime::far, scaled / base};
  }
  if (r <= c3 * inv) return {TransformRegime::near, sup_transform(phi, indices, r, t).value};
  throw DomainError("(r, t) lies between the near and far regimes");
}

KFunction::KFunction(ScalingFunction Phi, double lo, double hi, int per_decade)
    : Phi_(std::move(Phi)), fn_(ScalingFunction::power(1.0)) {
  auto table = std::make_shared<Table>();
  const auto grid = geometric_grid(lo, hi, per_decade);
  double running = 0.0;
  for (double s : grid) {
    running = std::max(running, Phi_(s) / s);
    table->log_grid.push_back(std::log(s));
    table->prefix_max.push_back(running);
  }
  table_ = table;
  auto Phi_copy = Phi_;
  fn_ = ScalingFunction::composed("K", [table, Phi_copy](double r) {
    const double x = std::log(r);
    const double own = Phi_copy(r) / r;
    auto it = std::upper_bound(table->log_grid.begin(), table->log_grid.end(), x);
    if (it == table->log_grid.begin()) return own;
    const auto i = static_cast<std::size_t>(it - table->log_grid.begin()) - 1;
    return std::max(own, table->prefix_max[i]);
  });
}

double KFunction::operator()(double r) const {
  if (!(r > 0.0)) throw DomainError("K needs r > 0");
  return fn_(r);
}

double KFunction::inverse(double u) const { return generalized_inverse(fn_, u); }

double k_function(const ScalingFunction& Phi, double r) { return KFunction(Phi)(r); }

double k_inverse(const ScalingFunction& Phi, double u) { return KFunction(Phi).inverse(u); }

double sck_compare(const KFunction& K, const ScalingFunction& Phi, const PhiIndices& indices,
                   double r, double t, double horizon) {
  if (!(t > 0.0) || t > horizon) throw DomainError("sck_compare needs 0 < t <= horizon");
  const double inv = generalized_inverse(Phi, t);
  if (r < 2.0 * indices.c_U * indices.c_U * inv) {
    throw DomainError("sck_compare needs r >= 2 c_U^2 Phi^-1(t)");
  }
  const double phi1 = sup_transform(Phi, indices, r, t).value;
  return (r / K.inverse(t / r)) / phi1;
}

double sck_compare(const ScalingFunction& Phi, const PhiIndices& indices, double r, double t,
                   double horizon) {
  return sck_compare(KFunction(Phi), Phi, indices, r, t, horizon);
}

}  // namespace hkl
