#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hkl/construct.hpp"
#include "hkl/errors.hpp"

using namespace hkl;
using doctest::Approx;

TEST_CASE("integrability of dF/psi near zero") {
  auto F = ScalingFunction::power(2.0);
  auto ok = check_integrability(F, ScalingFunction::power(1.0));
  CHECK(ok.integrable);
  CHECK(ok.integral == Approx(2.0).epsilon(1e-7));

  auto bad = check_integrability(F, ScalingFunction::power(2.0));
  CHECK_FALSE(bad.integrable);
  CHECK(std::isinf(bad.integral));

  // Declared indices with gamma1 > beta2 skip the block test.
  auto analytic = check_integrability(F, ScalingFunction::power(1.5),
                                      ConstructIndices{2.0, 2.0, 1.0, 1.5, 1.5});
  CHECK(analytic.test.method == "analytic");
  CHECK(analytic.integral == Approx(4.0).epsilon(1e-7));
}

TEST_CASE("logarithmic borderline cases are classified by the power-log fit") {
  // dF/psi = 1/(s log^2(1/s)) near 0: convergent.
  auto F = ScalingFunction::power(2.0);
  auto conv = ScalingFunction::log_corrected_at_zero(2.0, 2.0, 0.0, 0.2, 2.0, 0.5);
  CHECK(check_integrability(F, conv).integrable);
  // dF/psi = 1/(s log^0.5(1/s)): divergent.
  auto div = ScalingFunction::log_corrected_at_zero(2.0, 0.5, 0.0, 0.2, 2.0, 0.5);
  auto r = check_integrability(F, div);
  CHECK_FALSE(r.integrable);
  CHECK(r.test.method == "power-log");
}

TEST_CASE("dyadic blocks of a geometric series") {
  auto blocks =
      dyadic_blocks(ScalingFunction::power(2.0), ScalingFunction::power(1.0), 1.0, true, 60);
  REQUIRE(blocks.size() == 60);
  // int_{2^-(k+1)}^{2^-k} 2 ds = 2^-k.
  for (int k = 0; k < 20; ++k) CHECK(blocks[k] == Approx(std::ldexp(1.0, -k)).epsilon(1e-9));
  std::vector<double> d(blocks.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = (k + 0.5) * std::log(2.0);
  auto test = classify_blocks(blocks, d);
  CHECK(test.verdict == SeriesVerdict::converges);
  CHECK(test.ratio == Approx(0.5).epsilon(1e-6));
}

TEST_CASE("integral from zero for power pairs") {
  auto F = ScalingFunction::power(2.0);
  for (double alpha : {0.5, 1.0, 1.5}) {
    auto psi = ScalingFunction::power(alpha);
    for (double r : {1e-4, 0.3, 20.0}) {
      double exact = 2.0 * std::pow(r, 2.0 - alpha) / (2.0 - alpha);
      CHECK(integral_from_zero(F, psi, r) == Approx(exact).epsilon(1e-7));
    }
  }
  CHECK_THROWS_AS(integral_from_zero(F, ScalingFunction::power(1.0), 0.0), DomainError);
}

TEST_CASE("scale construction for power pairs") {
  auto F = ScalingFunction::power(2.0);
  for (double alpha : {0.5, 1.0, 1.5}) {
    auto c = ScaleConstruction::build(F, ScalingFunction::power(alpha));
    for (double r : {1e-5, 1e-2, 1.0, 7.0, 3e5}) {
      double exact = (2.0 - alpha) / 2.0 * std::pow(r, alpha);
      CHECK(c.Phi()(r) == Approx(exact).epsilon(1e-7));
      CHECK(c.phi_exact(r) == Approx(exact).epsilon(1e-7));
    }
    // Outside the table on both sides.
    CHECK(c.integral(1e-8) == Approx(2.0 * std::pow(1e-8, 2 - alpha) / (2 - alpha)).epsilon(1e-7));
    CHECK(c.integral(1e7) == Approx(2.0 * std::pow(1e7, 2 - alpha) / (2 - alpha)).epsilon(1e-7));
    CHECK(c.psi_over_phi_max() == Approx(2.0 / (2.0 - alpha)).epsilon(1e-7));
  }
  CHECK_THROWS_AS(ScaleConstruction::build(F, ScalingFunction::power(2.0)), DomainError);
  CHECK_THROWS_AS(ScaleConstruction::build(F, ScalingFunction::power(1.0)).integral(-1.0),
                  DomainError);
}

TEST_CASE("Phi stays below psi for a piecewise rate function") {
  auto F = ScalingFunction::power(2.0);
  auto psi = ScalingFunction::piecewise_power({1.0}, {0.5, 3.0});
  auto c = ScaleConstruction::build(F, psi);
  for (double r : geometric_grid(1e-4, 1e4, 4)) CHECK(c.Phi()(r) <= psi(r) * (1 + 1e-8));
  // Above 1 the integral converges, so Phi grows like F.
  CHECK(c.Phi()(1e4) / c.Phi()(1e3) == Approx(100.0).epsilon(1e-3));
}

TEST_CASE("tilde Phi replaces Phi below a by a power") {
  auto Phi = ScalingFunction::power(1.0);
  auto grid = geometric_grid(1e-3, 1e3, 8);
  auto t = build_tilde_phi(Phi, 1.0, 2.0, 2.0, grid, 1.0, 0.5);
  CHECK(t.function(0.1) == Approx(0.5 * 0.01));
  CHECK(t.function(10.0) == Approx(10.0));
  REQUIRE(t.lower_check);
  CHECK(t.lower_check->pass);
  CHECK_THROWS_AS(build_tilde_phi(Phi, 1.0, 0.5, 1.0, grid), ViolationError);
  CHECK_THROWS_AS(build_tilde_phi(Phi, 0.0, 2.0, 1.0, grid), DomainError);
}

TEST_CASE("Laplace exponent of the stable pair") {
  auto F = ScalingFunction::power(2.0);
  for (double alpha : {0.5, 1.0, 1.5}) {
    auto psi = ScalingFunction::power(alpha);
    double h = alpha / 2.0;
    for (double lambda : {1e-3, 0.7, 50.0}) {
      double exact = std::tgamma(1.0 - h) / h * std::pow(lambda, h);
      CHECK(laplace_exponent(F, psi, lambda) == Approx(exact).epsilon(1e-6));
    }
  }
  CHECK(laplace_exponent(F, ScalingFunction::power(1.0), 1.0) ==
        Approx(2.0 * std::sqrt(std::numbers::pi)).epsilon(1e-8));
  CHECK_THROWS_AS(laplace_exponent(F, ScalingFunction::power(1.0), 0.0), DomainError);
}

TEST_CASE("Laplace report lower bound") {
  auto c = ScaleConstruction::build(ScalingFunction::power(2.0), ScalingFunction::power(1.0));
  for (double lambda : {1e-2, 1.0, 1e2}) {
    auto rep = laplace_report(c, lambda);
    // Phi(F^-1(1/lambda)) = lambda^-1/2 / 2.
    CHECK(rep.lower == Approx(std::sqrt(lambda)).epsilon(1e-7));
    CHECK(rep.value >= rep.lower);
    CHECK(rep.upper_constant == Approx(std::sqrt(std::numbers::pi)).epsilon(1e-6));
  }
}

TEST_CASE("moment equivalence") {
  auto F = ScalingFunction::power(2.0);
  auto heavy = moment_equivalence_report(ScaleConstruction::build(F, ScalingFunction::power(1.0)));
  CHECK_FALSE(heavy.tail_integrable);
  CHECK_FALSE(heavy.phi_comparable_to_F);
  CHECK_FALSE(heavy.finite_moment);

  auto light = moment_equivalence_report(
      ScaleConstruction::build(F, ScalingFunction::piecewise_power({1.0}, {1.0, 3.0})));
  CHECK(light.tail_integrable);
  CHECK(light.phi_comparable_to_F);
  CHECK(light.finite_moment);
}
