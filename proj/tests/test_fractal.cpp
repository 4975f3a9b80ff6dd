#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "hkl/errors.hpp"
#include "hkl/fractal.hpp"

using namespace hkl;
using doctest::Approx;

TEST_CASE("gasket vertex and edge counts") {
  for (int n = 0; n <= 6; ++n) {
    auto g = MetricMeasureGraph::gasket(n);
    CHECK(g.size() == std::size_t((std::pow(3, n + 1) + 3) / 2));
    CHECK(g.edge_count() == std::size_t(std::pow(3, n + 1)));
    CHECK(g.level() == n);
  }
  CHECK_THROWS_AS(MetricMeasureGraph::gasket(-1), DomainError);
  CHECK_THROWS_AS(MetricMeasureGraph::gasket(11), ResourceError);
}

TEST_CASE("gasket degrees and corners") {
  auto g = MetricMeasureGraph::gasket(3);
  auto c = g.corners();
  REQUIRE(c.size() == 3);
  std::set<int> corner_set(c.begin(), c.end());
  for (std::size_t v = 0; v < g.size(); ++v) {
    int d = g.degree(int(v));
    CHECK(d == (corner_set.count(int(v)) ? 2 : 4));
  }
  CHECK(g.ambient_degree(g.find_vertex({0.0, 0.0})) == 2);
  CHECK(g.ambient_degree(g.find_vertex({8.0, 0.0})) == 4);
  CHECK(g.find_vertex({0.5, 0.0}) == -1);
}

TEST_CASE("gasket hop distances") {
  auto g = MetricMeasureGraph::gasket(4);
  auto c = g.corners();
  CHECK(g.distance(c[0], c[1]) == 16);
  CHECK(g.distance(c[1], c[2]) == 16);
  CHECK(g.eccentricity(c[0]) == 16);
  auto path = g.shortest_path(c[0], c[2]);
  CHECK(path.size() == 17);
  for (std::size_t i = 1; i < path.size(); ++i) CHECK(g.distance(path[i - 1], path[i]) == 1);
  // Midpoint of the bottom edge to the apex.
  int mid = g.find_vertex({8.0, 0.0});
  CHECK(g.distance(mid, c[2]) == 16);
}

TEST_CASE("ball volumes are open balls") {
  auto line = MetricMeasureGraph::line(20);
  int o = line.line_vertex(0);
  CHECK(line.ball_volume(o, 1.0) == 1.0);
  CHECK(line.ball_volume(o, 1.5) == 3.0);
  CHECK(line.ball_volume(o, 5.0) == 9.0);
  CHECK(line.ball_volume(line.line_vertex(20), 5.0) == 5.0);
  CHECK_THROWS_AS(line.ball_volume(o, 0.0), DomainError);

  auto g = MetricMeasureGraph::gasket(1);
  // Corner: itself plus two neighbours within distance 1.
  CHECK(g.ball_volume(g.corners()[0], 1.5) == 3.0);
  CHECK(g.ball_volume(g.corners()[0], 100.0) == 6.0);
}

TEST_CASE("line graph geometry") {
  auto g = MetricMeasureGraph::line(5);
  CHECK(g.size() == 11);
  CHECK(g.line_vertex(-5) >= 0);
  CHECK(g.line_vertex(6) == -1);
  CHECK(g.distance(g.line_vertex(-5), g.line_vertex(5)) == 10);
  CHECK(g.ambient_degree(g.line_vertex(5)) == 2);
  CHECK(g.degree(g.line_vertex(5)) == 1);
  CHECK_THROWS_AS(MetricMeasureGraph::line(0), DomainError);
}

TEST_CASE("custom graphs validate their input") {
  std::vector<Point> pts{{0, 0}, {1, 0}, {2, 0}};
  auto g = MetricMeasureGraph::custom(pts, {{0, 1}, {1, 2}}, {1.0, 2.0, 1.0});
  CHECK(g.total_mass() == 4.0);
  CHECK(g.ball_volume(0, 2.0) == 3.0);
  CHECK_THROWS_AS(MetricMeasureGraph::custom(pts, {{0, 1}}, {1, 1, 1}), DomainError);
  CHECK_THROWS_AS(MetricMeasureGraph::custom(pts, {{0, 1}, {1, 2}}, {1, 0, 1}), DomainError);
  CHECK_THROWS_AS(MetricMeasureGraph::custom(pts, {{0, 5}}, {1, 1, 1}), DomainError);
  CHECK_THROWS_AS(MetricMeasureGraph::custom({}, {}, {}), DomainError);
}

TEST_CASE("volume fit recovers the line dimension") {
  auto g = MetricMeasureGraph::line(1000);
  std::vector<double> radii{4, 16, 64, 256};
  std::vector<int> centers{g.line_vertex(0), g.line_vertex(100)};
  auto fit = fit_volume_exponent(g, radii, centers);
  // Open balls on the line hold 2 ceil(r) - 1 points.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double r : radii) {
    double x = std::log(r), y = std::log(2 * r - 1);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  double n = double(radii.size());
  CHECK(fit.exponent == Approx((n * sxy - sx * sy) / (n * sxx - sx * sx)).epsilon(1e-9));
  CHECK(fit.exponent == Approx(1.0).epsilon(0.05));
  CHECK(fit.doubling_max == Approx(15.0 / 7.0));
  CHECK_THROWS_AS(fit_volume_exponent(g, std::vector<double>{4.0}, centers), DomainError);
}

TEST_CASE("gasket volume doubling is bounded") {
  auto g = MetricMeasureGraph::gasket(6);
  auto centers = interior_centers(g, 16.0, 10);
  REQUIRE(!centers.empty());
  for (int x : centers)
    for (int c : g.corners()) CHECK(g.distance(x, c) >= 16);
  std::vector<double> radii{2, 4, 8};
  auto fit = fit_volume_exponent(g, radii, centers);
  CHECK(fit.doubling_min >= 2.0);
  CHECK(fit.doubling_max <= 4.0);
}

TEST_CASE("chain condition and metric checks") {
  auto g = MetricMeasureGraph::gasket(4);
  auto c = g.corners();
  std::vector<std::pair<int, int>> pairs{{c[0], c[1]}, {c[0], g.find_vertex({8.0, 0.0})}};
  std::vector<int> ns{1, 2, 4, 16};
  auto rep = chain_condition_check(g, 1.0, pairs, ns);
  CHECK(rep.pass);
  CHECK(rep.checks == pairs.size() * ns.size());
  CHECK(rep.worst_ratio <= 2.0);
  std::vector<std::pair<int, int>> same{{c[0], c[0]}};
  CHECK_THROWS_AS(chain_condition_check(g, 1.0, same, ns), DomainError);

  auto m = check_metric(g, 100, 7);
  CHECK(m.triangle_ok);
  CHECK(m.symmetric_ok);
  CHECK(m.euclid_ratio_min >= 1.0 - 1e-12);
  CHECK(m.euclid_ratio_max <= 2.5);
}

TEST_CASE("csv exports") {
  auto g = MetricMeasureGraph::gasket(0);
  auto v = g.vertices_csv();
  auto e = g.edges_csv();
  CHECK(std::count(v.begin(), v.end(), '\n') == 4);
  CHECK(std::count(e.begin(), e.end(), '\n') == 4);
}
