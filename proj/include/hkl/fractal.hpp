#pragma once

// Discrete metric measure spaces: level-n Sierpinski gasket graphs and the
// integer line, with hop metric, unit masses and an open-ball volume oracle.

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace hkl {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class SpaceKind { gasket, line, custom };

class MetricMeasureGraph {
 public:
  /// Level-n gasket with unit edges; corners (0,0), (2^n,0), (2^(n-1), 2^(n-1) sqrt 3).
  static MetricMeasureGraph gasket(int level, int max_level = 10);
  /// Path graph on {-L..L}; vertex i sits at x = i - L.
  static MetricMeasureGraph line(std::int64_t half_length);
  /// Arbitrary connected graph with unit edge lengths.
  static MetricMeasureGraph custom(std::vector<Point> coordinates,
                                   std::vector<std::pair<int, int>> edges,
                                   std::vector<double> masses);

  SpaceKind kind() const { return kind_; }
  int level() const { return level_; }
  std::int64_t half_length() const { return half_length_; }
  std::size_t size() const { return coords_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const std::pair<int, int>> edges() const { return edges_; }

  std::span<const int> neighbors(int v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  int degree(int v) const { return offsets_[v + 1] - offsets_[v]; }
  /// Degree of the vertex in the unbounded space the graph approximates;
  /// larger than degree() where the graph was cut off.
  int ambient_degree(int v) const { return ambient_degree_[v]; }
  double mass(int v) const { return masses_[v]; }
  double total_mass() const { return total_mass_; }
  Point coordinate(int v) const { return coords_[v]; }

  /// Vertex at the given coordinate, or -1.
  int find_vertex(Point p) const;
  /// The outer corners (gasket) or endpoints (line).
  std::vector<int> corners() const;
  /// Line vertex for integer position x (-L..L), or -1.
  int line_vertex(std::int64_t x) const;

  /// Hop distances from v to every vertex; memoized and shared between
  /// threads.
  std::shared_ptr<const std::vector<int>> distances_from(int v) const;
  int distance(int u, int v) const;
  /// mu(B(x, r)) for the open ball d(x, y) < r.
  double ball_volume(int x, double r) const;
  /// Some shortest path from u to v, both ends included.
  std::vector<int> shortest_path(int u, int v) const;
  int eccentricity(int v) const;

  std::string vertices_csv() const;
  std::string edges_csv() const;

 private:
  struct BallProfile {
    std::shared_ptr<const std::vector<int>> distances;
    /// cumulative mass by distance: mass_within[d] = mu{y : d(x,y) <= d}.
    std::vector<double> mass_within;
  };

  MetricMeasureGraph() = default;
  void finalize();
  std::shared_ptr<const BallProfile> profile(int v) const;

  SpaceKind kind_ = SpaceKind::custom;
  int level_ = 0;
  std::int64_t half_length_ = 0;
  std::vector<Point> coords_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<int> offsets_;
  std::vector<int> adjacency_;
  std::vector<int> ambient_degree_;
  std::vector<double> masses_;
  double total_mass_ = 0.0;
  std::unordered_map<std::int64_t, int> index_;

  struct Cache {
    std::mutex mutex;
    std::unordered_map<int, std::shared_ptr<const BallProfile>> profiles;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

struct VolumeFit {
  double exponent = 0.0;
  double residual = 0.0;
  /// min and max of V(x, 2r)/V(x, r) over centers and radii.
  double doubling_min = 0.0;
  double doubling_max = 0.0;
  std::size_t centers = 0;
};

/// Least-squares slope of log V(x, r) against log r, averaged over centers.
VolumeFit fit_volume_exponent(const MetricMeasureGraph& g, std::span<const double> radii,
                              std::span<const int> centers);

/// Vertices whose distance to every corner is at least `margin`, spread
/// evenly over the index range, at most `count` of them.
std::vector<int> interior_centers(const MetricMeasureGraph& g, double margin, std::size_t count);

struct ChainReport {
  double worst_ratio = 0.0;
  bool pass = true;
  std::size_t checks = 0;
};

/// For each pair and n, subsamples a geodesic at n+1 waypoints and reports
/// max_k d(z_{k-1}, z_k) * n / d(x, y). Passes iff every step is at most
/// A d(x, y)/n + 1.
ChainReport chain_condition_check(const MetricMeasureGraph& g, double A_candidate,
                                  std::span<const std::pair<int, int>> pairs,
                                  std::span<const int> n_values);

struct MetricReport {
  bool triangle_ok = true;
  bool symmetric_ok = true;
  /// Range of d(x, y)/|x - y| over the sampled pairs.
  double euclid_ratio_min = 0.0;
  double euclid_ratio_max = 0.0;
};

/// Spot-checks symmetry and the triangle inequality on `samples` random
/// triples drawn from a seeded generator.
MetricReport check_metric(const MetricMeasureGraph& g, std::size_t samples, std::uint64_t seed);

}  // namespace hkl
