#include "hkl/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>

#include "hkl/errors.hpp"

namespace hkl {

namespace {

// Relative width below which the midpoint rule is exact to double precision
// and the Kronrod error estimate is dominated by rounding.
constexpr double kSliver = 1e-9;

double checked(double value, double error, double rel_tol) {
  if (!std::isfinite(value)) throw QuadratureError("integrand produced a non-finite value");
  // The Kronrod error estimate is pessimistic; allow a modest margin before giving up.
  if (error > 100.0 * rel_tol * std::abs(value) && error > 1e-300) {
    throw QuadratureError("adaptive refinement exceeded its budget");
  }
  return value;
}

}  // namespace

double integrate(const std::function<double(double)>& g, double a, double b,
                 const QuadratureOptions& options) {
  if (!(b > a)) return 0.0;
  if (b - a <= kSliver * std::max(std::abs(a), std::abs(b))) return g(0.5 * (a + b)) * (b - a);
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      g, a, b, options.max_depth, options.rel_tol, &error);
  return checked(value, error, options.rel_tol);
}

double integrate_log(const std::function<double(double)>& g, double a, double b,
                     const QuadratureOptions& options) {
  if (!(a > 0.0)) throw DomainError("log-substituted quadrature needs a > 0");
  if (!(b > a)) return 0.0;
  auto h = [&g](double u) {
    const double s = std::exp(u);
    return g(s) * s;
  };
  if (b - a <= kSliver * b) return g(0.5 * (a + b)) * (b - a);
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      h, std::log(a), std::log(b), options.max_depth, options.rel_tol, &error);
  return checked(value, error, options.rel_tol);
}

}  // namespace hkl
