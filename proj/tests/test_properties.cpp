// Randomized invariants; every generator is seeded so failures replay.
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "hkl/construct.hpp"
#include "hkl/envelope.hpp"
#include "hkl/errors.hpp"
#include "hkl/fractal.hpp"
#include "hkl/montecarlo.hpp"
#include "hkl/scalefn.hpp"
#include "hkl/transform.hpp"

using namespace hkl;
using doctest::Approx;

namespace {

struct RandomPiecewise {
  ScalingFunction f = ScalingFunction::power(1.0);
  double alpha1 = 0.0, alpha2 = 0.0, c_U = 1.0;
};

RandomPiecewise random_piecewise(std::mt19937_64& rng, bool jumps) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int nb = 1 + int(rng() % 3);
  std::vector<double> breaks, exps, js;
  for (int k = 0; k < nb; ++k) {
    breaks.push_back(std::pow(10.0, -2.0 + 4.0 * u(rng)));
    js.push_back(jumps ? 1.0 + u(rng) : 1.0);
  }
  std::sort(breaks.begin(), breaks.end());
  for (int k = 0; k <= nb; ++k) exps.push_back(0.3 + 2.5 * u(rng));
  RandomPiecewise out;
  out.f = ScalingFunction::piecewise_power(breaks, exps, js);
  out.alpha1 = *std::min_element(exps.begin(), exps.end());
  out.alpha2 = *std::max_element(exps.begin(), exps.end());
  for (double j : js) out.c_U *= j;
  return out;
}

}  // namespace

TEST_CASE("powers satisfy their own scaling bounds with ratio one") {
  auto grid = geometric_grid(1e-6, 1e6, 8);
  for (double g : {0.25, 1.0, 2.0, 3.7}) {
    auto f = ScalingFunction::power(g, 1.3);
    auto lo = check_scaling(f, ScalingBound::lower(g, 1.0), grid);
    auto hi = check_scaling(f, ScalingBound::upper(g, 1.0), grid);
    CHECK(lo.pass);
    CHECK(hi.pass);
    CHECK(lo.worst_ratio == Approx(1.0).epsilon(1e-12));
    CHECK(hi.worst_ratio == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("generalized inverse is monotone and sandwiched") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    auto p = random_piecewise(rng, true);
    REQUIRE(check_scaling(p.f, ScalingBound::upper(p.alpha2, p.c_U), geometric_grid(1e-4, 1e4, 16))
                .pass);
    double prev = 0.0;
    for (double t : geometric_grid(p.f(1e-3), p.f(1e3), 16)) {
      double s = generalized_inverse(p.f, t);
      CHECK(s >= prev);
      prev = s;
      CHECK(p.f(s) >= t / p.c_U * (1 - 1e-9));
      CHECK(p.f(s) <= t * p.c_U * (1 + 1e-8));
    }
  }
}

TEST_CASE("inverse_bound applied twice returns the original bound") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    auto p = random_piecewise(rng, false);
    auto b = ScalingBound::lower(p.alpha1, 1.0);
    REQUIRE(check_scaling(p.f, b, geometric_grid(1e-4, 1e4, 16)).pass);
    auto inv = ScalingFunction::composed(
        "inverse", [f = p.f](double t) { return generalized_inverse(f, t); });
    auto once = inverse_bound(p.f, b);
    CHECK(check_scaling(inv, once, geometric_grid(p.f(1e-3), p.f(1e3), 8)).pass);
    auto twice = inverse_bound(inv, once);
    CHECK(twice.side == b.side);
    CHECK(twice.exponent == Approx(b.exponent));
    CHECK(twice.constant == Approx(b.constant));
  }
}

TEST_CASE("extend_window output passes on the enlarged window") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_piecewise(rng, false);
    double a = std::pow(10.0, -1.0 + u(rng));
    auto below = ScalingBound::lower(p.alpha1, 1.0, BoundWindow::below, a);
    auto e = extend_window(below, a * (1.0 + 20.0 * u(rng)));
    CHECK(check_scaling(p.f, e, geometric_grid(1e-4, e.threshold, 16)).pass);
    auto above = ScalingBound::lower(p.alpha1, 1.0, BoundWindow::above, a);
    auto e2 = extend_window(above, a / (1.0 + 20.0 * u(rng)));
    CHECK(check_scaling(p.f, e2, geometric_grid(e2.threshold, 1e4, 16)).pass);
  }
}

TEST_CASE("transform: bracket agrees with a wide scan, equivariance and monotonicity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    double g = 1.2 + 2.5 * u(rng);
    auto phi = ScalingFunction::power(g, 0.5 + u(rng));
    PhiIndices idx{1.0, g, 1.0};
    double t = std::pow(10.0, -3.0 + 3.0 * u(rng));
    double r = 2.0 * generalized_inverse(phi, t) * (1.0 + 100.0 * u(rng));
    auto bracketed = sup_transform(phi, idx, r, t);
    REQUIRE(bracketed.bracketed);
    // Brute-force scan over a 100x wider window.
    double best = -1e300;
    double lo = std::log(bracketed.bracket_lo / 100.0), hi = std::log(bracketed.bracket_hi * 100.0);
    for (int i = 0; i <= 200000; ++i) {
      double s = std::exp(lo + (hi - lo) * i / 200000.0);
      best = std::max(best, r / s - t / phi(s));
    }
    CHECK(bracketed.value == Approx(best).epsilon(1e-6));

    double c = std::pow(10.0, -2.0 + 4.0 * u(rng));
    PhiIndices none{};
    CHECK(sup_transform(phi, none, c * r, c * t).value ==
          Approx(c * sup_transform(phi, none, r, t).value).epsilon(1e-9));
  }
  auto phi = ScalingFunction::piecewise_power({1.0}, {1.5, 2.5});
  PhiIndices none{};
  auto grid = geometric_grid(1e-2, 1e2, 4);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(sup_transform(phi, none, grid[i], 1.0).value >=
          sup_transform(phi, none, grid[i - 1], 1.0).value - 1e-12);
    CHECK(sup_transform(phi, none, 1.0, grid[i]).value <=
          sup_transform(phi, none, 1.0, grid[i - 1]).value + 1e-12);
  }
}

TEST_CASE("K function is non-decreasing and dominates Phi(s)/s") {
  auto phi = ScalingFunction::piecewise_power({0.1, 10.0}, {2.0, 0.5, 3.0});
  KFunction K(phi);
  double prev = 0.0;
  for (double r : geometric_grid(1e-4, 1e4, 16)) {
    CHECK(K(r) >= prev);
    CHECK(K(r) >= phi(r) / r * (1 - 1e-12));
    prev = K(r);
  }
}

TEST_CASE("constructed Phi: upper scaling, doubling lower bound, quadrature brackets") {
  auto F = ScalingFunction::power(2.0);
  for (auto psi : {ScalingFunction::power(1.0), ScalingFunction::piecewise_power({1.0}, {0.5, 1.5}),
                   ScalingFunction::piecewise_power({1.0}, {1.5, 3.0})}) {
    auto c = ScaleConstruction::build(F, psi);
    auto grid = geometric_grid(1e-4, 1e4, 8);
    CHECK(check_scaling(c.Phi(), ScalingBound::upper(2.0, 1.0), grid).pass);

    double C = 2.0;
    auto doubling = [&](double cap) {
      for (double r : grid)
        if (c.Phi()(2 * r) > cap * c.Phi()(r)) return false;
      return true;
    };
    while (!doubling(C)) C *= 2.0;
    double alpha1 = std::log(2.0) / (2.0 * std::log(C));
    CHECK(check_scaling(c.Phi(), ScalingBound::lower(alpha1, 0.5), grid).pass);

    for (double r : grid) {
      double dI = c.integral(2 * r) - c.integral(r);
      double dF = F(2 * r) - F(r);
      CHECK(dI >= dF / psi(2 * r) * (1 - 1e-8));
      CHECK(dI <= dF / psi(r) * (1 + 1e-8));
    }
  }
}

TEST_CASE("Laplace exponent is increasing with decreasing increments") {
  auto F = ScalingFunction::power(2.0);
  auto psi = ScalingFunction::piecewise_power({1.0}, {0.7, 1.6});
  auto lambdas = geometric_grid(1e-3, 1e3, 2);
  std::vector<double> v;
  for (double l : lambdas) v.push_back(laplace_exponent(F, psi, l));
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] > v[i - 1]);
  // Concavity on a uniform grid.
  double prev_diff = 1e300;
  for (double l = 1.0; l <= 10.0; l += 1.0) {
    double d = laplace_exponent(F, psi, l + 1.0) - laplace_exponent(F, psi, l);
    CHECK(d <= prev_diff * (1 + 1e-9));
    prev_diff = d;
  }
}

TEST_CASE("envelopes: lower <= upper or SpecError, and stable equivalence") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto vol = VolumeOracle::power(1.0);
  for (int trial = 0; trial < 200; ++trial) {
    EnvelopeSpec s;
    double g = 1.2 + 2.0 * u(rng);
    s.Phi = ScalingFunction::power(g);
    s.psi = ScalingFunction::power(g, 1.0 + 3.0 * u(rng));
    s.F = ScalingFunction::power(g);
    s.phi_indices = PhiIndices{1.0, g, 1.0};
    s.F_indices = s.phi_indices;
    s.c = 1.0 + 3.0 * u(rng);
    s.a_U = 0.5;
    s.a_L = 0.5 + u(rng);
    s.form = std::array{EnvelopeForm::HK, EnvelopeForm::SHK, EnvelopeForm::GHK}[rng() % 3];
    double t = std::pow(10.0, -3 + 6 * u(rng)), r = std::pow(10.0, -3 + 6 * u(rng));
    try {
      auto b = envelope_bounds(s, t, 0, r, vol);
      CHECK(b.lower <= b.upper * (1 + 1e-12));
    } catch (const SpecError&) {
      auto b = envelope_forms(s, t, 0, r, vol);
      CHECK(b.lower > b.upper);
    }
  }
}

TEST_CASE("graph volumes: monotone and exhaust the space") {
  for (auto g : {MetricMeasureGraph::gasket(4), MetricMeasureGraph::line(50)}) {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 10; ++i) {
      int x = int(rng() % g.size());
      double prev = 0.0;
      for (double r = 0.5; r < 80.0; r += 0.5) {
        double v = g.ball_volume(x, r);
        CHECK(v >= prev);
        prev = v;
      }
      CHECK(g.ball_volume(x, g.eccentricity(x) + 1.0) == g.total_mass());
    }
  }
  auto m = check_metric(MetricMeasureGraph::gasket(5), 300, 17);
  CHECK(m.euclid_ratio_min >= 1.0 - 1e-12);
}

TEST_CASE("kernel mass conservation") {
  auto g = MetricMeasureGraph::gasket(4);
  auto sub = Subordinator::build(ScalingFunction::power(std::log(5.0) / std::log(2.0)),
                                 ScalingFunction::power(1.0), 1.0);
  SubordinateSampler s(g, std::move(sub));
  int x0 = g.find_vertex({8.0, 0.0});
  auto k = estimate_kernel(g, x0, 2.0, s, 4000, 1);
  double mass = 0.0;
  for (std::size_t y = 0; y < g.size(); ++y) mass += k.p_hat(int(y)) * g.mass(int(y));
  CHECK(mass <= 1.0 + 1e-12);
  CHECK(mass == Approx(1.0 - k.defect_fraction()));

  // A walk that cannot leave: diffusion on the line far from the ends.
  auto line = MetricMeasureGraph::line(1000);
  DiffusionSampler d(line);
  auto kd = estimate_kernel(line, line.line_vertex(0), 50.0, d, 2000, 1);
  CHECK(kd.defect == 0);
  CHECK(kd.surviving_fraction() == Approx(1.0));
}

TEST_CASE("exit time solve agrees with simulated walks") {
  auto g = MetricMeasureGraph::line(200);
  int x0 = g.line_vertex(0);
  double exact = mean_exit_time(g, x0, 10.0);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  Rng rng(21);
  for (int i = 0; i < n; ++i) {
    std::int64_t x = 0, steps = 0;
    while (std::abs(x) < 10) {
      x += (rng() & 1) ? 1 : -1;
      ++steps;
    }
    sum += double(steps);
    sum2 += double(steps) * double(steps);
  }
  double mean = sum / n, sd = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - exact) < 3.0 * sd);
}

TEST_CASE("subordinator Laplace transform within three standard errors") {
  auto sub = Subordinator::build(ScalingFunction::power(2.0), ScalingFunction::power(1.0), 1.0);
  Rng rng(8);
  for (double lambda : {0.1, 1.0, 10.0}) {
    const int n = 50000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = std::exp(-lambda * sample_subordinator(sub, 1.0, rng));
      sum += v;
      sum2 += v * v;
    }
    double mean = sum / n, sd = std::sqrt(std::max(sum2 / n - mean * mean, 1e-300) / n);
    CHECK(std::abs(mean - std::exp(-sub.truncated_exponent(lambda))) < 3.0 * sd + 1e-12);
  }
}
