#pragma once

// Simple random walk, subordinator, subordinate chain Y_t = Z_{S_t} and the
// direct jump chain, with deterministic multi-threaded kernel estimation.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hkl/envelope.hpp"
#include "hkl/fractal.hpp"
#include "hkl/scalefn.hpp"

namespace hkl {

using Rng = std::mt19937_64;

/// Step table of the simple random walk killed where the ambient space
/// continues beyond the graph.
class KilledWalk;

/// Seed of walker `index`'s private stream: splitmix64 of (seed, index).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

/// Plain simple random walk on the graph (uniform over graph neighbors).
/// Returns n_steps + 1 vertices starting with x0.
std::vector<int> diffusion_walk(const MetricMeasureGraph& g, int x0, std::int64_t n_steps, Rng& rng);

/// E^x0[time to leave the open ball B(x0, r)] for the simple random walk,
/// by a sparse symmetric solve. Throws SolveError when the ball is the whole
/// graph.
double mean_exit_time(const MetricMeasureGraph& g, int x0, double r);

/// E^x0[time to hit `targets`] for the simple random walk.
double mean_hitting_time(const MetricMeasureGraph& g, int x0, std::span<const int> targets);

struct SubordinatorOptions {
  /// Neglected small-jump variance, relative to the squared typical size of
  /// S at the smallest time of interest.
  double variance_budget = 1e-4;
  /// Fixed truncation level; chosen from the budget when absent.
  std::optional<double> epsilon;
  int per_decade = 64;
};

/// Subordinator with Levy density 1/(t psi(F^-1(t))), truncated at epsilon:
/// jumps below epsilon are replaced by their mean drift.
class Subordinator {
 public:
  static Subordinator build(const ScalingFunction& F, const ScalingFunction& psi, double t_min,
                            SubordinatorOptions options = {});

  double epsilon() const { return epsilon_; }
  /// m(eps) = int_0^eps t nu(dt).
  double drift() const { return drift_; }
  /// Lambda(eps) = nu(eps, inf).
  double rate() const { return rate_; }
  /// Typical size 1/lambda with t_min phi(lambda) = 1.
  double typical_size() const { return typical_size_; }

  /// nu(x, inf) for x >= epsilon.
  double tail(double x) const;
  double sample_jump(Rng& rng) const;
  /// S_{t+dt} - S_t.
  double sample_increment(double dt, Rng& rng) const;
  /// lambda m(eps) + int_eps^inf (1 - e^(-lambda t)) nu(dt).
  double truncated_exponent(double lambda) const;

 private:
  Subordinator() = default;
  double sample_s(double target) const;

  ScalingFunction F_ = ScalingFunction::power(1.0);
  ScalingFunction psi_ = ScalingFunction::power(1.0);
  double epsilon_ = 0.0;
  double drift_ = 0.0;
  double rate_ = 0.0;
  double typical_size_ = 0.0;
  // Tail G(s) = nu(F(s), inf) on a log grid in s, decreasing.
  std::vector<double> log_s_;
  std::vector<double> log_G_;
  double tail_exponent_ = 0.0;
};

double sample_subordinator(const Subordinator& sub, double t, Rng& rng);

/// Position of a walker at one checkpoint; vertex -1 means killed.
struct Outcome {
  int vertex = -1;
  /// Distance from the start; on the line the displacement of the unbounded
  /// walk, reported even after the walker left the graph.
  double distance = 0.0;
};

class PathSampler {
 public:
  virtual ~PathSampler() = default;
  /// Fills out[k] with the state at times[k] (increasing) of one path.
  virtual void run(int x0, std::span<const double> times, Rng& rng,
                   std::span<Outcome> out) const = 0;
  virtual std::string name() const = 0;
};

/// Y_t = Z_{S_t} with Z the killed simple random walk. On the line the walk
/// is advanced by exact binomial increments and a walker is killed once its
/// position at a checkpoint falls outside the graph.
class SubordinateSampler : public PathSampler {
 public:
  SubordinateSampler(const MetricMeasureGraph& g, Subordinator sub);
  void run(int x0, std::span<const double> times, Rng& rng, std::span<Outcome> out) const override;
  std::string name() const override { return "subordinate"; }
  const Subordinator& subordinator() const { return sub_; }

 private:
  const MetricMeasureGraph* g_;
  Subordinator sub_;
  std::shared_ptr<const KilledWalk> walk_;
};

/// Continuous-time chain with jump kernel J(x, y) = 1/(V(x, d) psi(d)).
/// On the line the infinite-line volumes 2d - 1 are used and jumps beyond
/// the graph kill the walker. On other graphs (at most 2048 vertices) the
/// kernel is symmetrized: (J(x, y) + J(y, x))/2.
class JumpChainSampler : public PathSampler {
 public:
  JumpChainSampler(const MetricMeasureGraph& g, ScalingFunction psi);
  void run(int x0, std::span<const double> times, Rng& rng, std::span<Outcome> out) const override;
  std::string name() const override { return "jump_chain"; }
  /// Total jump rate out of x.
  double total_rate(int x) const;

 private:
  const MetricMeasureGraph* g_;
  ScalingFunction psi_;
  // line: cumulative rates over d = 1..D (both directions) and the tail rate.
  std::vector<double> line_cdf_;
  double line_tail_ = 0.0;
  // dense: per-vertex cumulative rates.
  std::vector<std::vector<double>> dense_cdf_;
};

/// The killed simple random walk observed at integer times floor(t).
class DiffusionSampler : public PathSampler {
 public:
  explicit DiffusionSampler(const MetricMeasureGraph& g);
  void run(int x0, std::span<const double> times, Rng& rng, std::span<Outcome> out) const override;
  std::string name() const override { return "diffusion"; }

 private:
  const MetricMeasureGraph* g_;
  std::shared_ptr<const KilledWalk> walk_;
};

Outcome subordinate_chain(const MetricMeasureGraph& g, int x0, double t, const Subordinator& sub,
                          Rng& rng);
Outcome jump_chain(const MetricMeasureGraph& g, int x0, double t, const ScalingFunction& psi,
                   Rng& rng);

struct RunOptions {
  std::size_t walkers = 100000;
  std::uint64_t seed = 1;
  /// 0 selects the hardware concurrency.
  unsigned threads = 1;
};

/// Runs options.walkers independent paths; walker i uses stream_seed(seed, i).
/// Result is row-major: walker i, checkpoint k at [i * times.size() + k].
/// Bit-identical for any thread count.
std::vector<Outcome> simulate_paths(int x0, std::span<const double> times,
                                    const PathSampler& sampler, const RunOptions& options);

struct EmpiricalKernel {
  int origin = 0;
  double t = 0.0;
  std::vector<std::int64_t> counts;
  std::vector<double> masses;
  std::int64_t walkers = 0;
  std::int64_t defect = 0;

  /// count(y) / (N mass(y)).
  double p_hat(int y) const;
  /// Half-width of the 95% Wilson interval of p_hat(y).
  double halfwidth(int y) const;
  /// sum_y p_hat(y) mass(y).
  double surviving_fraction() const;
  double defect_fraction() const { return double(defect) / double(walkers); }
};

std::vector<EmpiricalKernel> estimate_kernels(const MetricMeasureGraph& g, int x0,
                                              std::span<const double> times,
                                              const PathSampler& sampler,
                                              const RunOptions& options);

/// Single-time estimator; requires N >= 1000.
EmpiricalKernel estimate_kernel(const MetricMeasureGraph& g, int x0, double t,
                                const PathSampler& sampler, std::size_t N, std::uint64_t seed,
                                unsigned threads = 1);

/// Kernel averaged over the vertices at distance [r_lo, r_hi) from the origin.
struct KernelCell {
  double t = 0.0;
  double r_lo = 0.0;
  double r_hi = 0.0;
  std::int64_t count = 0;
  double mass = 0.0;
  double p_hat = 0.0;
  double halfwidth = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Pools kernel counts over distance shells [edges[i], edges[i+1]).
std::vector<KernelCell> radial_cells(const EmpiricalKernel& kernel, const MetricMeasureGraph& g,
                                     std::span<const double> edges);

struct SandwichResult {
  /// max over used cells of max(p_hat/upper, lower/p_hat), unit constants.
  double C = 0.0;
  std::vector<KernelCell> cells;
  std::size_t cells_used = 0;
  bool pass = false;
};

/// Compares radial cells with at least min_count samples against the
/// envelope (evaluated with its constants set to 1, averaged over the
/// shell by mass).
SandwichResult envelope_sandwich_test(std::span<const EmpiricalKernel> kernels,
                                      const MetricMeasureGraph& g, const EnvelopeSpec& spec,
                                      const VolumeOracle& vol, std::span<const double> edges,
                                      std::int64_t min_count = 30, double C_max = 100.0);

struct MomentLilResult {
  /// (N, mean of F(d(x0, X_t)) over the first N walkers).
  std::vector<std::pair<std::size_t, double>> moment_curve;
  /// Relative change between consecutive points of the curve.
  std::vector<double> drifts;
  /// Per path: max over t_k = 2^k in [16, horizon] of d(x0, X_{t_k}) / h(t_k).
  std::vector<double> lil_sup;
  double lil_q50 = 0.0;
  double lil_q90 = 0.0;
  double lil_q99 = 0.0;
};

/// `n_values` are nested walker counts (prefixes of one run).
MomentLilResult moment_and_lil(int x0, const ScalingFunction& F, const PathSampler& sampler,
                               double moment_time, double horizon,
                               std::span<const std::size_t> n_values, std::uint64_t seed,
                               unsigned threads = 1);

}  // namespace hkl
