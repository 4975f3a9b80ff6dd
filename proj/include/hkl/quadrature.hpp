#pragma once

#include <functional>

namespace hkl {

struct QuadratureOptions {
  double rel_tol = 1e-8;
  /// Maximum bisection depth of the adaptive Gauss-Kronrod rule.
  unsigned max_depth = 18;
};

/// Integral of g over [a, b] (0 < a < b) computed in u = log s, which keeps
/// power singularities at 0 and slowly decaying tails well conditioned.
/// Throws QuadratureError when the error estimate exceeds the budget.
double integrate_log(const std::function<double(double)>& g, double a, double b,
                     const QuadratureOptions& options = {});

/// Same rule on a plain interval, no substitution.
double integrate(const std::function<double(double)>& g, double a, double b,
                 const QuadratureOptions& options = {});

}  // namespace hkl
