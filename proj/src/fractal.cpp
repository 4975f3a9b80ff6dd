#include "hkl/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include "hkl/errors.hpp"

namespace hkl {

namespace {

const double kRowHeight = std::sqrt(3.0) / 2.0;

// Gasket vertices live on integer (X, Y) with x = X/2, y = Y * sqrt(3)/2.
std::int64_t lattice_key(std::int64_t X, std::int64_t Y) { return (X << 32) ^ (Y & 0xffffffff); }

}  // namespace

MetricMeasureGraph MetricMeasureGraph::gasket(int level, int max_level) {
  if (level < 0) throw DomainError("gasket level must be >= 0");
  if (level > max_level) throw ResourceError("gasket level above the configured maximum");

  using Cell = std::pair<int, int>;
  std::vector<Cell> cells = {{0, 0}, {2, 0}, {1, 1}};
  std::vector<std::pair<int, int>> edges = {{0, 1}, {1, 2}, {0, 2}};
  for (int n = 1; n <= level; ++n) {
    const int side = 1 << (n - 1);
    const Cell offsets[3] = {{0, 0}, {2 * side, 0}, {side, side}};
    std::unordered_map<std::int64_t, int> seen;
    std::vector<Cell> next_cells;
    std::vector<std::pair<int, int>> next_edges;
    next_cells.reserve(cells.size() * 3);
    next_edges.reserve(edges.size() * 3);
    for (const auto& off : offsets) {
      std::vector<int> remap(cells.size());
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const int X = cells[i].first + off.first;
        const int Y = cells[i].second + off.second;
        auto [it, inserted] = seen.emplace(lattice_key(X, Y), int(next_cells.size()));
        if (inserted) next_cells.push_back({X, Y});
        remap[i] = it->second;
      }
      for (const auto& [a, b] : edges) next_edges.push_back({remap[a], remap[b]});
    }
    cells = std::move(next_cells);
    edges = std::move(next_edges);
  }

  MetricMeasureGraph g;
  g.kind_ = SpaceKind::gasket;
  g.level_ = level;
  for (const auto& [X, Y] : cells) {
    g.index_.emplace(lattice_key(X, Y), int(g.coords_.size()));
    g.coords_.push_back({0.5 * X, kRowHeight * Y});
  }
  g.edges_ = std::move(edges);
  g.masses_.assign(g.coords_.size(), 1.0);
  g.ambient_degree_.assign(g.coords_.size(), 4);
  g.ambient_degree_[0] = 2;  // (0,0) is the corner of the unbounded gasket
  g.finalize();
  return g;
}

MetricMeasureGraph MetricMeasureGraph::line(std::int64_t half_length) {
  if (half_length < 1) throw DomainError("line half length must be >= 1");
  if (half_length > (std::int64_t{1} << 28)) throw ResourceError("line half length too large");
  MetricMeasureGraph g;
  g.kind_ = SpaceKind::line;
  g.half_length_ = half_length;
  const auto n = static_cast<std::size_t>(2 * half_length + 1);
  g.coords_.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.coords_[i] = {double(std::int64_t(i) - half_length), 0.0};
  for (std::size_t i = 0; i + 1 < n; ++i) g.edges_.push_back({int(i), int(i + 1)});
  g.masses_.assign(n, 1.0);
  g.ambient_degree_.assign(n, 2);
  g.finalize();
  return g;
}

MetricMeasureGraph MetricMeasureGraph::custom(std::vector<Point> coordinates,
                                              std::vector<std::pair<int, int>> edges,
                                              std::vector<double> masses) {
  if (coordinates.empty()) throw DomainError("graph needs at least one vertex");
  if (masses.size() != coordinates.size()) throw DomainError("one mass per vertex");
  for (double m : masses) {
    if (!(m > 0.0)) throw DomainError("vertex masses must be positive");
  }
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= int(coordinates.size()) || b >= int(coordinates.size()) || a == b) {
      throw DomainError("edge endpoints out of range");
    }
  }
  MetricMeasureGraph g;
  g.kind_ = SpaceKind::custom;
  g.coords_ = std::move(coordinates);
  g.edges_ = std::move(edges);
  g.masses_ = std::move(masses);
  g.finalize();
  g.ambient_degree_.resize(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) g.ambient_degree_[v] = g.degree(int(v));
  const auto d = g.distances_from(0);
  if (std::any_of(d->begin(), d->end(), [](int x) { return x < 0; })) {
    throw DomainError("graph is not connected");
  }
  return g;
}

void MetricMeasureGraph::finalize() {
  const std::size_t n = coords_.size();
  std::vector<int> degree(n, 0);
  for (const auto& [a, b] : edges_) {
    ++degree[a];
    ++degree[b];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + degree[v];
  adjacency_.assign(offsets_[n], 0);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [a, b] : edges_) {
    adjacency_[fill[a]++] = b;
    adjacency_[fill[b]++] = a;
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(adjacency_.begin() + offsets_[v], adjacency_.begin() + offsets_[v + 1]);
  }
  total_mass_ = 0.0;
  for (double m : masses_) total_mass_ += m;
}

int MetricMeasureGraph::find_vertex(Point p) const {
  if (kind_ == SpaceKind::line) {
    if (std::abs(p.y) > 1e-9) return -1;
    return line_vertex(std::llround(p.x));
  }
  if (kind_ == SpaceKind::gasket) {
    const auto X = std::llround(2.0 * p.x);
    const auto Y = std::llround(p.y / kRowHeight);
    auto it = index_.find(lattice_key(X, Y));
    return it == index_.end() ? -1 : it->second;
  }
  for (std::size_t v = 0; v < coords_.size(); ++v) {
    if (std::hypot(coords_[v].x - p.x, coords_[v].y - p.y) < 1e-9) return int(v);
  }
  return -1;
}

std::vector<int> MetricMeasureGraph::corners() const {
  if (kind_ == SpaceKind::line) return {0, int(size()) - 1};
  if (kind_ == SpaceKind::gasket) {
    const double side = std::ldexp(1.0, level_);
    return {find_vertex({0.0, 0.0}), find_vertex({side, 0.0}),
            find_vertex({side / 2.0, side * kRowHeight})};
  }
  return {};
}

int MetricMeasureGraph::line_vertex(std::int64_t x) const {
  if (kind_ != SpaceKind::line || x < -half_length_ || x > half_length_) return -1;
  return int(x + half_length_);
}

std::shared_ptr<const MetricMeasureGraph::BallProfile> MetricMeasureGraph::profile(int v) const {
  if (v < 0 || v >= int(size())) throw DomainError("vertex out of range");
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->profiles.find(v);
    if (it != cache_->profiles.end()) return it->second;
  }
  auto dist = std::make_shared<std::vector<int>>(size(), -1);
  if (kind_ == SpaceKind::line) {
    for (std::size_t u = 0; u < size(); ++u) (*dist)[u] = std::abs(int(u) - v);
  } else {
    std::deque<int> queue = {v};
    (*dist)[v] = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int w : neighbors(u)) {
        if ((*dist)[w] < 0) {
          (*dist)[w] = (*dist)[u] + 1;
          queue.push_back(w);
        }
      }
    }
  }
  auto prof = std::make_shared<BallProfile>();
  int max_d = 0;
  for (int d : *dist) max_d = std::max(max_d, d);
  prof->mass_within.assign(std::size_t(max_d) + 1, 0.0);
  for (std::size_t u = 0; u < size(); ++u) {
    if ((*dist)[u] >= 0) prof->mass_within[(*dist)[u]] += masses_[u];
  }
  for (std::size_t d = 1; d < prof->mass_within.size(); ++d) {
    prof->mass_within[d] += prof->mass_within[d - 1];
  }
  prof->distances = std::move(dist);
  std::lock_guard<std::mutex> lock(cache_->mutex);
  return cache_->profiles.emplace(v, std::move(prof)).first->second;
}

std::shared_ptr<const std::vector<int>> MetricMeasureGraph::distances_from(int v) const {
  return profile(v)->distances;
}

int MetricMeasureGraph::distance(int u, int v) const {
  if (kind_ == SpaceKind::line) return std::abs(u - v);
  return (*distances_from(u))[v];
}

double MetricMeasureGraph::ball_volume(int x, double r) const {
  if (!(r > 0.0)) throw DomainError("ball radius must be positive");
  if (kind_ == SpaceKind::line) {
    // Open ball: integer offsets k with |k| < r.
    const auto k = static_cast<std::int64_t>(std::ceil(r)) - 1;
    const std::int64_t pos = x;
    const std::int64_t lo = std::max<std::int64_t>(0, pos - k);
    const std::int64_t hi = std::min<std::int64_t>(std::int64_t(size()) - 1, pos + k);
    return double(hi - lo + 1);
  }
  const auto prof = profile(x);
  const auto k = static_cast<std::int64_t>(std::ceil(r)) - 1;
  if (k < 0) return 0.0;
  const auto idx = std::min<std::size_t>(std::size_t(k), prof->mass_within.size() - 1);
  return prof->mass_within[idx];
}

std::vector<int> MetricMeasureGraph::shortest_path(int u, int v) const {
  if (kind_ == SpaceKind::line) {
    std::vector<int> path;
    const int step = v >= u ? 1 : -1;
    for (int w = u;; w += step) {
      path.push_back(w);
      if (w == v) break;
    }
    return path;
  }
  // Walk back from v along strictly decreasing distance to u.
  const auto dist = distances_from(u);
  if ((*dist)[v] < 0) throw DomainError("vertices are not connected");
  std::vector<int> path = {v};
  int w = v;
  while (w != u) {
    for (int x : neighbors(w)) {
      if ((*dist)[x] == (*dist)[w] - 1) {
        w = x;
        break;
      }
    }
    path.push_back(w);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

int MetricMeasureGraph::eccentricity(int v) const {
  const auto prof = profile(v);
  return int(prof->mass_within.size()) - 1;
}

std::string MetricMeasureGraph::vertices_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "vertex,x,y,mass,degree\n";
  for (std::size_t v = 0; v < size(); ++v) {
    out << v << ',' << coords_[v].x << ',' << coords_[v].y << ',' << masses_[v] << ','
        << degree(int(v)) << '\n';
  }
  return out.str();
}

std::string MetricMeasureGraph::edges_csv() const {
  std::ostringstream out;
  out << "source,target\n";
  for (const auto& [a, b] : edges_) out << a << ',' << b << '\n';
  return out.str();
}

VolumeFit fit_volume_exponent(const MetricMeasureGraph& g, std::span<const double> radii,
                              std::span<const int> centers) {
  if (radii.size() < 2 || centers.empty()) throw DomainError("need two radii and a center");
  VolumeFit fit;
  fit.doubling_min = std::numeric_limits<double>::infinity();
  fit.centers = centers.size();
  double slope_sum = 0.0;
  double residual_sum = 0.0;
  for (int x : centers) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> lx, ly;
    for (double r : radii) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(g.ball_volume(x, r)));
      const double ratio = g.ball_volume(x, 2.0 * r) / g.ball_volume(x, r);
      fit.doubling_min = std::min(fit.doubling_min, ratio);
      fit.doubling_max = std::max(fit.doubling_max, ratio);
    }
    const double n = double(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double rss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double e = ly[i] - intercept - slope * lx[i];
      rss += e * e;
    }
    slope_sum += slope;
    residual_sum += std::sqrt(rss / n);
  }
  fit.exponent = slope_sum / double(centers.size());
  fit.residual = residual_sum / double(centers.size());
  return fit;
}

std::vector<int> interior_centers(const MetricMeasureGraph& g, double margin, std::size_t count) {
  std::vector<std::shared_ptr<const std::vector<int>>> from_corners;
  for (int c : g.corners()) from_corners.push_back(g.distances_from(c));
  std::vector<int> eligible;
  for (std::size_t v = 0; v < g.size(); ++v) {
    bool ok = true;
    for (const auto& d : from_corners) ok = ok && (*d)[v] >= margin;
    if (ok) eligible.push_back(int(v));
  }
  if (eligible.size() <= count) return eligible;
  std::vector<int> picked;
  for (std::size_t i = 0; i < count; ++i) picked.push_back(eligible[i * eligible.size() / count]);
  return picked;
}

ChainReport chain_condition_check(const MetricMeasureGraph& g, double A_candidate,
                                  std::span<const std::pair<int, int>> pairs,
                                  std::span<const int> n_values) {
  ChainReport report;
  for (const auto& [x, y] : pairs) {
    if (x == y) throw DomainError("chain check needs distinct vertices");
    const auto path = g.shortest_path(x, y);
    const int d = int(path.size()) - 1;
    for (int n : n_values) {
      if (n < 1) throw DomainError("chain length must be >= 1");
      int previous = 0;
      int max_step = 0;
      for (int k = 1; k <= n; ++k) {
        const int index = int(std::lround(double(k) * d / n));
        max_step = std::max(max_step, index - previous);
        previous = index;
      }
      ++report.checks;
      report.worst_ratio = std::max(report.worst_ratio, double(max_step) * n / d);
      if (max_step > A_candidate * d / n + 1.0) report.pass = false;
    }
  }
  return report;
}

MetricReport check_metric(const MetricMeasureGraph& g, std::size_t samples, std::uint64_t seed) {
  MetricReport report;
  report.euclid_ratio_min = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, int(g.size()) - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    const int x = pick(rng), y = pick(rng), z = pick(rng);
    const int dxy = g.distance(x, y), dyz = g.distance(y, z), dxz = g.distance(x, z);
    report.symmetric_ok = report.symmetric_ok && dxy == g.distance(y, x);
    report.triangle_ok = report.triangle_ok && dxz <= dxy + dyz;
    if (x != y) {
      const auto a = g.coordinate(x), b = g.coordinate(y);
      const double ratio = dxy / std::hypot(a.x - b.x, a.y - b.y);
      report.euclid_ratio_min = std::min(report.euclid_ratio_min, ratio);
      report.euclid_ratio_max = std::max(report.euclid_ratio_max, ratio);
    }
  }
  return report;
}

}  // namespace hkl
