#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "hkl/construct.hpp"
#include "hkl/errors.hpp"
#include "hkl/montecarlo.hpp"

using namespace hkl;
using doctest::Approx;

namespace {

// F = r^2, psi = r: nu(dt) = t^(-3/2) dt, nu(x, inf) = 2/sqrt(x).
Subordinator stable_half(double t_min = 4.0) {
  return Subordinator::build(ScalingFunction::power(2.0), ScalingFunction::power(1.0), t_min);
}

}  // namespace

TEST_CASE("stream seeds are deterministic and distinct") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(stream_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(stream_seed(42, 7) == stream_seed(42, 7));
  CHECK(stream_seed(42, 7) != stream_seed(43, 7));
}

TEST_CASE("diffusion walk moves along edges") {
  auto g = MetricMeasureGraph::gasket(3);
  Rng rng(1);
  auto path = diffusion_walk(g, g.corners()[0], 200, rng);
  REQUIRE(path.size() == 201);
  CHECK(path.front() == g.corners()[0]);
  for (std::size_t i = 1; i < path.size(); ++i) CHECK(g.distance(path[i - 1], path[i]) == 1);
}

TEST_CASE("mean exit time on the line is r^2") {
  auto g = MetricMeasureGraph::line(100);
  for (int r : {1, 3, 10, 40}) CHECK(mean_exit_time(g, g.line_vertex(0), r) == Approx(r * r));
  auto small = MetricMeasureGraph::line(3);
  CHECK_THROWS_AS(mean_exit_time(small, small.line_vertex(0), 10.0), SolveError);
}

TEST_CASE("corner-to-corners hitting time on the gasket is 5^n") {
  for (int n = 0; n <= 4; ++n) {
    auto g = MetricMeasureGraph::gasket(n);
    auto c = g.corners();
    std::vector<int> targets{c[1], c[2]};
    CHECK(mean_hitting_time(g, c[0], targets) == Approx(std::pow(5.0, n)).epsilon(1e-9));
  }
}

TEST_CASE("subordinator tables match the stable Levy measure") {
  auto sub = stable_half();
  double eps = sub.epsilon();
  REQUIRE(eps > 0.0);
  CHECK(sub.rate() == Approx(2.0 / std::sqrt(eps)).epsilon(1e-6));
  CHECK(sub.drift() == Approx(2.0 * std::sqrt(eps)).epsilon(1e-6));
  for (double x : {eps, 10 * eps, 1e3, 1e8}) CHECK(sub.tail(x) == Approx(2.0 / std::sqrt(x)).epsilon(1e-5));
  // Typical size: 4 phi(1/sigma) = 1 with phi(l) = 2 sqrt(pi l).
  CHECK(sub.typical_size() == Approx(64.0 * std::numbers::pi).epsilon(1e-6));
  // Truncation changes the exponent by at most the neglected second moment.
  for (double lambda : {1e-4, 1e-3, 1e-2}) {
    double exact = 2.0 * std::sqrt(std::numbers::pi * lambda);
    double bound = lambda * lambda * (2.0 / 3.0) * std::pow(eps, 1.5) / 2.0;
    CHECK(std::abs(sub.truncated_exponent(lambda) - exact) <= bound + 1e-8 * exact);
  }
}

TEST_CASE("subordinator jumps follow the normalized tail") {
  auto sub = stable_half();
  Rng rng(5);
  const int n = 40000;
  int above = 0;
  double x = 4.0 * sub.epsilon();
  for (int i = 0; i < n; ++i) {
    double j = sub.sample_jump(rng);
    CHECK(j >= sub.epsilon());
    if (j > x) ++above;
  }
  double p = 0.5;
  double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(double(above) / n - p) < 5.0 * sigma);
}

TEST_CASE("subordinator increments have the truncated Laplace transform") {
  auto sub = stable_half();
  Rng rng(9);
  const int n = 40000;
  double t = 4.0, lambda = 0.01;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = std::exp(-lambda * sample_subordinator(sub, t, rng));
    sum += v;
    sum2 += v * v;
  }
  double mean = sum / n;
  double sd = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - std::exp(-t * sub.truncated_exponent(lambda))) < 5.0 * sd);
}

TEST_CASE("subordinator build validates its input") {
  CHECK_THROWS_AS(stable_half(0.0), DomainError);
  SubordinatorOptions o;
  o.epsilon = 0.01;
  auto sub = Subordinator::build(ScalingFunction::power(2.0), ScalingFunction::power(1.0), 4.0, o);
  CHECK(sub.epsilon() == 0.01);
}

TEST_CASE("jump chain total rate on the line") {
  auto g = MetricMeasureGraph::line(1 << 12);
  JumpChainSampler s(g, ScalingFunction::power(1.0));
  // sum_d 2 / ((2d - 1) d) = 4 log 2.
  CHECK(s.total_rate(g.line_vertex(0)) == Approx(4.0 * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("dense jump chain is symmetric and refuses large graphs") {
  auto g = MetricMeasureGraph::gasket(2);
  JumpChainSampler s(g, ScalingFunction::power(1.0));
  CHECK(s.total_rate(0) > 0.0);
  auto big = MetricMeasureGraph::gasket(7);
  CHECK_THROWS_AS(JumpChainSampler(big, ScalingFunction::power(1.0)), ResourceError);
}

TEST_CASE("diffusion sampler keeps the parity of the line walk") {
  auto g = MetricMeasureGraph::line(1000);
  DiffusionSampler s(g);
  Rng rng(3);
  std::vector<double> times{3.0, 10.0};
  std::vector<Outcome> out(2);
  for (int i = 0; i < 200; ++i) {
    s.run(g.line_vertex(0), times, rng, out);
    CHECK(int(out[0].distance) % 2 == 1);
    CHECK(int(out[1].distance) % 2 == 0);
  }
}

TEST_CASE("simulate_paths is identical for any thread count") {
  auto g = MetricMeasureGraph::line(1 << 12);
  SubordinateSampler s(g, stable_half());
  std::vector<double> times{4.0, 16.0};
  auto a = simulate_paths(g.line_vertex(0), times, s, {3000, 11, 1});
  auto b = simulate_paths(g.line_vertex(0), times, s, {3000, 11, 3});
  REQUIRE(a.size() == 6000);
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i)
    same = same && a[i].vertex == b[i].vertex && a[i].distance == b[i].distance;
  CHECK(same);
  // Distances along one path grow only through jumps, never negative.
  for (const auto& o : a) CHECK(o.distance >= 0.0);
}

TEST_CASE("empirical kernel bookkeeping") {
  auto g = MetricMeasureGraph::line(1 << 12);
  SubordinateSampler s(g, stable_half());
  auto k = estimate_kernel(g, g.line_vertex(0), 8.0, s, 5000, 2);
  CHECK(k.walkers == 5000);
  CHECK(k.surviving_fraction() + k.defect_fraction() == Approx(1.0));
  int o = g.line_vertex(0);
  double p = double(k.counts[o]) / 5000;
  double z = 1.959963984540054;
  double wilson =
      z / (1 + z * z / 5000) * std::sqrt(p * (1 - p) / 5000 + z * z / (4.0 * 5000 * 5000));
  CHECK(k.halfwidth(o) == Approx(wilson));
  CHECK(k.p_hat(o) == Approx(p));
  CHECK_THROWS_AS(estimate_kernel(g, o, 8.0, s, 999, 2), DomainError);
  CHECK_THROWS_AS(estimate_kernel(g, o, 0.0, s, 1000, 2), DomainError);

  std::vector<double> edges{0, 1, 4, 16, 5000};
  auto cells = radial_cells(k, g, edges);
  REQUIRE(cells.size() == 4);
  std::int64_t total = 0;
  for (const auto& c : cells) total += c.count;
  CHECK(total + k.defect == 5000);
  CHECK(cells[0].count == k.counts[o]);
  CHECK(cells[1].mass == 6.0);
}

TEST_CASE("sandwich test and moment curve on a small run") {
  auto g = MetricMeasureGraph::line(1 << 14);
  SubordinateSampler s(g, stable_half());
  std::vector<double> times{4.0, 16.0};
  auto ks = estimate_kernels(g, g.line_vertex(0), times, s, {20000, 4, 1});
  EnvelopeSpec spec;
  auto cons = ScaleConstruction::build(ScalingFunction::power(2.0), ScalingFunction::power(1.0));
  spec.Phi = cons.Phi();
  spec.psi = ScalingFunction::power(1.0);
  auto vol = VolumeOracle::graph(g);
  std::vector<double> edges{0, 1, 2, 4, 8, 16, 33};
  auto res = envelope_sandwich_test(ks, g, spec, vol, edges);
  CHECK(res.cells_used > 0);
  CHECK(res.C >= 1.0);
  CHECK(res.pass);

  std::vector<std::size_t> ns{1000, 2000, 4000};
  auto m = moment_and_lil(g.line_vertex(0), ScalingFunction::power(2.0), s, 16.0, 64.0, ns, 3);
  REQUIRE(m.moment_curve.size() == 3);
  CHECK(m.drifts.size() == 2);
  CHECK(m.lil_sup.size() == 4000);
  CHECK(m.lil_q50 <= m.lil_q90);
  CHECK(m.lil_q90 <= m.lil_q99);
}
