#include "hkl/montecarlo.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "hkl/construct.hpp"
#include "hkl/errors.hpp"
#include "hkl/quadrature.hpp"

namespace hkl {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// Slot k of vertex v is a neighbor or -1 (killed).
class KilledWalk {
 public:
  explicit KilledWalk(const MetricMeasureGraph& g) {
    offsets_.reserve(g.size() + 1);
    offsets_.push_back(0);
    for (std::size_t v = 0; v < g.size(); ++v) {
      auto nb = g.neighbors(int(v));
      int amb = std::max<int>(g.ambient_degree(int(v)), int(nb.size()));
      for (int k = 0; k < amb; ++k) slots_.push_back(k < int(nb.size()) ? nb[k] : -1);
      offsets_.push_back(int(slots_.size()));
    }
  }

  // Advances n steps from v; returns -1 once killed.
  int walk(int v, std::int64_t n, Rng& rng) const {
    std::uint64_t bits = 0;
    int nbits = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      int lo = offsets_[v];
      int amb = offsets_[v + 1] - lo;
      int k;
      if (amb == 4 || amb == 2) {
        int need = amb == 4 ? 2 : 1;
        if (nbits < need) {
          bits = rng();
          nbits = 64;
        }
        k = int(bits & std::uint64_t(amb - 1));
        bits >>= need;
        nbits -= need;
      } else {
        k = std::uniform_int_distribution<int>(0, amb - 1)(rng);
      }
      v = slots_[lo + k];
      if (v < 0) return -1;
    }
    return v;
  }

 private:
  std::vector<int> offsets_;
  std::vector<int> slots_;
};

namespace {

double wilson_halfwidth(std::int64_t k, std::int64_t n) {
  const double z = 1.959963984540054;
  double p = double(k) / double(n);
  double nn = double(n);
  double denom = 1.0 + z * z / nn;
  return z / denom * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn));
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed;
  std::uint64_t a = splitmix64(state);
  state = a ^ (index * 0xd1342543de82ef95ULL + 1);
  splitmix64(state);
  return splitmix64(state);
}

std::vector<int> diffusion_walk(const MetricMeasureGraph& g, int x0, std::int64_t n_steps,
                                Rng& rng) {
  if (x0 < 0 || std::size_t(x0) >= g.size()) throw DomainError("diffusion_walk: bad start vertex");
  if (n_steps < 0) throw DomainError("diffusion_walk: negative step count");
  std::vector<int> path;
  path.reserve(std::size_t(n_steps) + 1);
  path.push_back(x0);
  int v = x0;
  for (std::int64_t i = 0; i < n_steps; ++i) {
    auto nb = g.neighbors(v);
    if (nb.empty()) throw DomainError("diffusion_walk: isolated vertex");
    v = nb[std::uniform_int_distribution<std::size_t>(0, nb.size() - 1)(rng)];
    path.push_back(v);
  }
  return path;
}

namespace {

double solve_exit(const MetricMeasureGraph& g, int x0, const std::vector<char>& inside) {
  std::vector<int> index(g.size(), -1);
  int n = 0;
  for (std::size_t v = 0; v < g.size(); ++v)
    if (inside[v]) index[v] = n++;
  if (n == int(g.size())) throw SolveError("exit time: the region is the whole graph");
  if (!inside[x0]) return 0.0;

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs(n);
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (!inside[v]) continue;
    int i = index[v];
    double deg = g.degree(int(v));
    trip.emplace_back(i, i, deg);
    rhs[i] = deg;
    for (int w : g.neighbors(int(v)))
      if (inside[w]) trip.emplace_back(i, index[w], -1.0);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success) throw SolveError("exit time: factorization failed");
  Eigen::VectorXd u = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !u.allFinite())
    throw SolveError("exit time: solve failed");
  return u[index[x0]];
}

}  // namespace

double mean_exit_time(const MetricMeasureGraph& g, int x0, double r) {
  if (!(r > 0.0)) throw DomainError("mean_exit_time: radius must be positive");
  auto dist = g.distances_from(x0);
  std::vector<char> inside(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) inside[v] = (*dist)[v] < r;
  return solve_exit(g, x0, inside);
}

double mean_hitting_time(const MetricMeasureGraph& g, int x0, std::span<const int> targets) {
  if (targets.empty()) throw DomainError("mean_hitting_time: no targets");
  std::vector<char> inside(g.size(), 1);
  for (int v : targets) inside.at(std::size_t(v)) = 0;
  return solve_exit(g, x0, inside);
}

// ---------------------------------------------------------------- subordinator

Subordinator Subordinator::build(const ScalingFunction& F, const ScalingFunction& psi,
                                 double t_min, SubordinatorOptions options) {
  if (!(t_min > 0.0)) throw DomainError("Subordinator: t_min must be positive");
  Subordinator sub;
  sub.F_ = F;
  sub.psi_ = psi;

  // Typical size: t_min phi(lambda) = 1.
  auto excess = [&](double lam) { return std::log(t_min * laplace_exponent(F, psi, lam)); };
  double lo = 1.0, hi = 1.0;
  while (excess(lo) > 0.0) {
    lo *= 0.25;
    if (lo < 1e-200) throw DomainError("Subordinator: cannot bracket the typical size");
  }
  while (excess(hi) < 0.0) {
    hi *= 4.0;
    if (hi > 1e200) throw DomainError("Subordinator: cannot bracket the typical size");
  }
  for (int it = 0; it < 60 && hi / lo > 1.0 + 1e-9; ++it) {
    double mid = std::sqrt(lo * hi);
    (excess(mid) > 0.0 ? hi : lo) = mid;
  }
  double sigma = 1.0 / std::sqrt(lo * hi);
  sub.typical_size_ = sigma;

  if (options.epsilon) {
    sub.epsilon_ = *options.epsilon;
    if (!(sub.epsilon_ > 0.0)) throw DomainError("Subordinator: epsilon must be positive");
  } else {
    // Small-jump variance int_0^eps t^2 nu(dt) = int_0^s_eps F F'/psi ds.
    auto half_square = ScalingFunction::composed(
        "F^2/2", [F](double s) { return 0.5 * F(s) * F(s); },
        [F](double s) { return F(s) * F.derivative(s); });
    double eps = sigma;
    for (int it = 0;; ++it) {
      double s_eps = generalized_inverse(F, eps);
      double var = integral_from_zero(half_square, psi, s_eps);
      if (t_min * var <= options.variance_budget * sigma * sigma) break;
      eps *= 0.5;
      if (it > 400) throw DomainError("Subordinator: truncation level not found");
    }
    sub.epsilon_ = eps;
  }

  double s_eps = generalized_inverse(F, sub.epsilon_);
  sub.drift_ = integral_from_zero(F, psi, s_eps);

  auto g = [&](double s) { return F.derivative(s) / (F(s) * psi(s)); };
  auto gs = [&](double s) { return g(s) * s; };
  const double step = std::log(10.0) / options.per_decade;
  double ref = gs(s_eps);
  if (!(ref > 0.0) || !std::isfinite(ref)) throw TabulationError("Subordinator: bad Levy density");

  std::vector<double> s_grid{s_eps};
  for (int i = 1;; ++i) {
    double s = s_eps * std::exp(step * i);
    s_grid.push_back(s);
    if (i >= 2 * options.per_decade && gs(s) < 1e-13 * ref) break;
    if (i > 60 * options.per_decade) break;
  }
  double s_hi = s_grid.back();
  double kappa = -std::log10(gs(s_hi) / gs(s_hi / 10.0));
  if (!(kappa > 0.05) || !std::isfinite(kappa))
    throw TabulationError("Subordinator: tail does not decay like a power");
  sub.tail_exponent_ = kappa;

  std::vector<double> G(s_grid.size());
  G.back() = gs(s_hi) / kappa;
  for (std::size_t i = s_grid.size() - 1; i-- > 0;)
    G[i] = G[i + 1] + integrate_log(g, s_grid[i], s_grid[i + 1]);
  sub.log_s_.resize(s_grid.size());
  sub.log_G_.resize(s_grid.size());
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    sub.log_s_[i] = std::log(s_grid[i]);
    sub.log_G_[i] = std::log(G[i]);
    if (!std::isfinite(sub.log_G_[i])) throw TabulationError("Subordinator: non-finite tail");
    if (i > 0 && std::abs(sub.log_G_[i] - sub.log_G_[i - 1]) > 1.0)
      throw TabulationError("Subordinator: tail table too coarse");
  }
  sub.rate_ = G.front();
  return sub;
}

double Subordinator::sample_s(double target) const {
  double log_t = std::log(target);
  if (log_t <= log_G_.back())
    return std::exp(log_s_.back() - (log_t - log_G_.back()) / tail_exponent_);
  // log_G_ is decreasing; find i with log_G_[i] >= log_t > log_G_[i + 1].
  auto it = std::lower_bound(log_G_.begin(), log_G_.end(), log_t,
                             [](double a, double b) { return a > b; });
  std::size_t j = std::size_t(it - log_G_.begin());
  if (j == 0) return std::exp(log_s_.front());
  std::size_t i = j - 1;
  double w = (log_t - log_G_[i]) / (log_G_[j] - log_G_[i]);
  return std::exp(log_s_[i] + w * (log_s_[j] - log_s_[i]));
}

double Subordinator::tail(double x) const {
  if (x < epsilon_) throw DomainError("Subordinator::tail: below the truncation level");
  double ls = std::log(generalized_inverse(F_, x));
  if (ls >= log_s_.back()) return std::exp(log_G_.back() - tail_exponent_ * (ls - log_s_.back()));
  auto it = std::upper_bound(log_s_.begin(), log_s_.end(), ls);
  std::size_t j = std::size_t(it - log_s_.begin());
  if (j == 0) return rate_;
  std::size_t i = j - 1;
  double w = (ls - log_s_[i]) / (log_s_[j] - log_s_[i]);
  return std::exp(log_G_[i] + w * (log_G_[j] - log_G_[i]));
}

double Subordinator::sample_jump(Rng& rng) const {
  double u = 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return F_(sample_s(u * rate_));
}

double Subordinator::sample_increment(double dt, Rng& rng) const {
  if (dt < 0.0) throw DomainError("Subordinator: negative time step");
  if (dt == 0.0) return 0.0;
  long long n = std::poisson_distribution<long long>(dt * rate_)(rng);
  double sum = dt * drift_;
  for (long long i = 0; i < n; ++i) sum += sample_jump(rng);
  return sum;
}

double Subordinator::truncated_exponent(double lambda) const {
  if (!(lambda > 0.0)) throw DomainError("truncated_exponent: lambda must be positive");
  auto g = [&](double s) { return F_.derivative(s) / (F_(s) * psi_(s)); };
  auto integrand = [&](double s) { return -std::expm1(-lambda * F_(s)) * g(s); };
  double total = lambda * drift_;
  double a = std::exp(log_s_.front());
  double s_hi = std::exp(log_s_.back());
  while (a < s_hi) {
    double b = a * 10.0 * (1.0 + 1e-9) >= s_hi ? s_hi : a * 10.0;
    total += integrate_log(integrand, a, b);
    a = b;
  }
  // Beyond the table the density follows its power tail; there 1 - e^(-lambda F) is ~1
  // once lambda F is large.
  double g_hi = g(s_hi);
  auto tail_g = [&](double s) { return g_hi * std::pow(s / s_hi, -tail_exponent_ - 1.0); };
  for (int k = 0; k < 40; ++k) {
    double b = a * 10.0;
    if (lambda * F_(a) > 50.0) {
      total += tail_g(a) * a / tail_exponent_;
      return total;
    }
    total += integrate_log([&](double s) { return -std::expm1(-lambda * F_(s)) * tail_g(s); },
                           a, b);
    a = b;
  }
  total += tail_g(a) * a / tail_exponent_;
  return total;
}

double sample_subordinator(const Subordinator& sub, double t, Rng& rng) {
  return sub.sample_increment(t, rng);
}

// ---------------------------------------------------------------- samplers

SubordinateSampler::SubordinateSampler(const MetricMeasureGraph& g, Subordinator sub)
    : g_(&g), sub_(std::move(sub)) {
  if (g.kind() != SpaceKind::line) walk_ = std::make_shared<KilledWalk>(g);
}

void SubordinateSampler::run(int x0, std::span<const double> times, Rng& rng,
                             std::span<Outcome> out) const {
  double S = 0.0;
  double prev_t = 0.0;
  std::int64_t steps_done = 0;
  if (g_->kind() == SpaceKind::line) {
    const std::int64_t L = g_->half_length();
    const std::int64_t start = std::int64_t(x0) - L;
    double pos = 0.0;
    bool killed = false;
    for (std::size_t k = 0; k < times.size(); ++k) {
      S += sub_.sample_increment(times[k] - prev_t, rng);
      prev_t = times[k];
      double steps = std::nearbyint(S);
      double n = steps - double(steps_done);
      if (n <= 0x1p40) {
        auto b = std::binomial_distribution<long long>(static_cast<long long>(n), 0.5)(rng);
        pos += 2.0 * double(b) - n;
      } else {
        pos += std::round(std::sqrt(n) * std::normal_distribution<double>()(rng));
      }
      steps_done = steps < 0x1p62 ? std::int64_t(steps) : std::int64_t(0x1p62);
      double x = double(start) + pos;
      if (std::abs(x) > double(L)) killed = true;
      out[k].vertex = killed ? -1 : int(std::int64_t(x) + L);
      out[k].distance = std::abs(pos);
    }
    return;
  }

  auto dist = g_->distances_from(x0);
  int v = x0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    S += sub_.sample_increment(times[k] - prev_t, rng);
    prev_t = times[k];
    if (v >= 0) {
      std::int64_t steps = std::int64_t(std::min(std::nearbyint(S), 0x1p62));
      v = walk_->walk(v, steps - steps_done, rng);
      steps_done = steps;
    }
    out[k].vertex = v;
    out[k].distance = v >= 0 ? double((*dist)[v]) : kNaN;
  }
}

JumpChainSampler::JumpChainSampler(const MetricMeasureGraph& g, ScalingFunction psi)
    : g_(&g), psi_(std::move(psi)) {
  if (g.kind() == SpaceKind::line) {
    std::int64_t D = 4 * g.half_length();
    line_cdf_.resize(std::size_t(D));
    double acc = 0.0;
    for (std::int64_t d = 1; d <= D; ++d) {
      acc += 2.0 / ((2.0 * double(d) - 1.0) * psi_(double(d)));
      line_cdf_[std::size_t(d - 1)] = acc;
    }
    auto density = [&](double x) { return 2.0 / ((2.0 * x - 1.0) * psi_(x)); };
    double a = double(D) + 0.5, tail = 0.0;
    for (int k = 0; k < 400; ++k) {
      double block = integrate_log(density, a, 2.0 * a);
      tail += block;
      a *= 2.0;
      if (block < 1e-16 * (acc + tail)) break;
    }
    line_tail_ = tail;
    return;
  }
  std::size_t n = g.size();
  if (n > 2048) throw ResourceError("JumpChainSampler: dense kernel limited to 2048 vertices");
  dense_cdf_.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t x = 0; x < n; ++x) {
    auto dx = g.distances_from(int(x));
    double acc = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      if (y != x) {
        double d = (*dx)[y];
        double p = psi_(d);
        double J = 0.5 * (1.0 / (g.ball_volume(int(x), d) * p) + 1.0 / (g.ball_volume(int(y), d) * p));
        acc += J * g.mass(int(y));
      }
      dense_cdf_[x][y] = acc;
    }
  }
}

double JumpChainSampler::total_rate(int x) const {
  if (!line_cdf_.empty()) return line_cdf_.back() + line_tail_;
  return dense_cdf_.at(std::size_t(x)).back();
}

void JumpChainSampler::run(int x0, std::span<const double> times, Rng& rng,
                           std::span<Outcome> out) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double tau = 0.0;
  if (!line_cdf_.empty()) {
    const std::int64_t L = g_->half_length();
    const std::int64_t start = std::int64_t(x0) - L;
    const double total = total_rate(x0);
    std::exponential_distribution<double> hold(total);
    std::int64_t pos = 0;
    bool killed = false;
    for (std::size_t k = 0; k < times.size(); ++k) {
      while (!killed) {
        double e = hold(rng);
        if (tau + e > times[k]) {
          tau = times[k];
          break;
        }
        tau += e;
        double u = unif(rng) * total;
        if (u >= line_cdf_.back()) {
          killed = true;
          break;
        }
        auto it = std::upper_bound(line_cdf_.begin(), line_cdf_.end(), u);
        std::int64_t d = std::int64_t(it - line_cdf_.begin()) + 1;
        pos += (rng() & 1) ? d : -d;
        if (std::abs(start + pos) > L) killed = true;
      }
      out[k].vertex = killed ? -1 : int(start + pos + L);
      out[k].distance = killed ? kNaN : double(std::abs(pos));
    }
    return;
  }
  auto dist = g_->distances_from(x0);
  int v = x0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (;;) {
      const auto& cdf = dense_cdf_[std::size_t(v)];
      double total = cdf.back();
      if (!(total > 0.0)) break;
      double e = std::exponential_distribution<double>(total)(rng);
      if (tau + e > times[k]) {
        tau = times[k];
        break;
      }
      tau += e;
      double u = unif(rng) * total;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      v = int(std::min<std::ptrdiff_t>(it - cdf.begin(), std::ptrdiff_t(cdf.size()) - 1));
    }
    out[k].vertex = v;
    out[k].distance = double((*dist)[v]);
  }
}

DiffusionSampler::DiffusionSampler(const MetricMeasureGraph& g)
    : g_(&g), walk_(std::make_shared<KilledWalk>(g)) {}

void DiffusionSampler::run(int x0, std::span<const double> times, Rng& rng,
                           std::span<Outcome> out) const {
  auto dist = g_->distances_from(x0);
  int v = x0;
  std::int64_t done = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::int64_t steps = std::int64_t(std::floor(times[k]));
    if (v >= 0 && steps > done) v = walk_->walk(v, steps - done, rng);
    done = std::max(done, steps);
    out[k].vertex = v;
    out[k].distance = v >= 0 ? double((*dist)[v]) : kNaN;
  }
}

Outcome subordinate_chain(const MetricMeasureGraph& g, int x0, double t, const Subordinator& sub,
                          Rng& rng) {
  SubordinateSampler sampler(g, sub);
  Outcome o;
  double times[1] = {t};
  sampler.run(x0, times, rng, std::span<Outcome>(&o, 1));
  return o;
}

Outcome jump_chain(const MetricMeasureGraph& g, int x0, double t, const ScalingFunction& psi,
                   Rng& rng) {
  JumpChainSampler sampler(g, psi);
  Outcome o;
  double times[1] = {t};
  sampler.run(x0, times, rng, std::span<Outcome>(&o, 1));
  return o;
}

// ---------------------------------------------------------------- estimation

std::vector<Outcome> simulate_paths(int x0, std::span<const double> times,
                                    const PathSampler& sampler, const RunOptions& options) {
  if (times.empty()) throw DomainError("simulate_paths: no checkpoints");
  for (std::size_t k = 0; k < times.size(); ++k)
    if (!(times[k] >= 0.0) || (k > 0 && times[k] < times[k - 1]))
      throw DomainError("simulate_paths: checkpoints must be non-negative and increasing");
  const std::size_t K = times.size();
  const std::size_t N = options.walkers;
  std::vector<Outcome> out(N * K);
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = unsigned(std::min<std::size_t>(threads, std::max<std::size_t>(N, 1)));

  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      Rng rng(stream_seed(options.seed, i));
      sampler.run(x0, times, rng, std::span<Outcome>(out.data() + i * K, K));
    }
  };
  if (threads <= 1) {
    work(0, N);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t) {
    std::size_t lo = N * t / threads, hi = N * (t + 1) / threads;
    pool.emplace_back([&, t, lo, hi] {
      try {
        work(lo, hi);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double EmpiricalKernel::p_hat(int y) const {
  return double(counts.at(std::size_t(y))) / (double(walkers) * masses[std::size_t(y)]);
}

double EmpiricalKernel::halfwidth(int y) const {
  return wilson_halfwidth(counts.at(std::size_t(y)), walkers) / masses[std::size_t(y)];
}

double EmpiricalKernel::surviving_fraction() const {
  std::int64_t alive = 0;
  for (auto c : counts) alive += c;
  return double(alive) / double(walkers);
}

std::vector<EmpiricalKernel> estimate_kernels(const MetricMeasureGraph& g, int x0,
                                              std::span<const double> times,
                                              const PathSampler& sampler,
                                              const RunOptions& options) {
  if (x0 < 0 || std::size_t(x0) >= g.size()) throw DomainError("estimate_kernels: bad origin");
  if (options.walkers == 0) throw DomainError("estimate_kernels: no walkers");
  auto paths = simulate_paths(x0, times, sampler, options);
  const std::size_t K = times.size();
  std::vector<double> masses(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) masses[v] = g.mass(int(v));
  std::vector<EmpiricalKernel> kernels(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& ker = kernels[k];
    ker.origin = x0;
    ker.t = times[k];
    ker.counts.assign(g.size(), 0);
    ker.masses = masses;
    ker.walkers = std::int64_t(options.walkers);
  }
  for (std::size_t i = 0; i < options.walkers; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      int v = paths[i * K + k].vertex;
      if (v < 0)
        ++kernels[k].defect;
      else
        ++kernels[k].counts[std::size_t(v)];
    }
  return kernels;
}

EmpiricalKernel estimate_kernel(const MetricMeasureGraph& g, int x0, double t,
                                const PathSampler& sampler, std::size_t N, std::uint64_t seed,
                                unsigned threads) {
  if (N < 1000) throw DomainError("estimate_kernel: at least 1000 walkers required");
  if (!(t > 0.0)) throw DomainError("estimate_kernel: time must be positive");
  double times[1] = {t};
  return std::move(estimate_kernels(g, x0, times, sampler, {N, seed, threads}).front());
}

std::vector<KernelCell> radial_cells(const EmpiricalKernel& kernel, const MetricMeasureGraph& g,
                                     std::span<const double> edges) {
  if (edges.size() < 2) throw DomainError("radial_cells: need at least two edges");
  auto dist = g.distances_from(kernel.origin);
  std::vector<KernelCell> cells(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    cells[i].t = kernel.t;
    cells[i].r_lo = edges[i];
    cells[i].r_hi = edges[i + 1];
  }
  for (std::size_t v = 0; v < g.size(); ++v) {
    double d = (*dist)[v];
    auto it = std::upper_bound(edges.begin(), edges.end(), d);
    if (it == edges.begin() || it == edges.end()) continue;
    auto& c = cells[std::size_t(it - edges.begin()) - 1];
    c.count += kernel.counts[v];
    c.mass += kernel.masses[v];
  }
  for (auto& c : cells) {
    if (c.mass <= 0.0) continue;
    c.p_hat = double(c.count) / (double(kernel.walkers) * c.mass);
    c.halfwidth = wilson_halfwidth(c.count, kernel.walkers) / c.mass;
  }
  return cells;
}

SandwichResult envelope_sandwich_test(std::span<const EmpiricalKernel> kernels,
                                      const MetricMeasureGraph& g, const EnvelopeSpec& spec,
                                      const VolumeOracle& vol, std::span<const double> edges,
                                      std::int64_t min_count, double C_max) {
  SandwichResult res;
  for (const auto& ker : kernels) {
    auto cells = radial_cells(ker, g, edges);
    auto dist = g.distances_from(ker.origin);
    std::map<int, Bounds> cache;
    for (auto& c : cells) {
      double lw = 0.0, up = 0.0;
      for (std::size_t v = 0; v < g.size(); ++v) {
        double d = (*dist)[v];
        if (d < c.r_lo || d >= c.r_hi) continue;
        auto [it, fresh] = cache.try_emplace((*dist)[v]);
        if (fresh) it->second = envelope_forms(spec, ker.t, ker.origin, d, vol);
        lw += it->second.lower * g.mass(int(v));
        up += it->second.upper * g.mass(int(v));
      }
      if (c.mass > 0.0) {
        c.lower = lw / c.mass;
        c.upper = up / c.mass;
      }
      if (c.count >= min_count && c.upper > 0.0) {
        double ratio = c.p_hat / c.upper;
        if (c.lower > 0.0) ratio = std::max(ratio, c.lower / c.p_hat);
        res.C = std::max(res.C, ratio);
        ++res.cells_used;
      }
      res.cells.push_back(c);
    }
  }
  res.pass = res.cells_used > 0 && res.C <= C_max;
  return res;
}

MomentLilResult moment_and_lil(int x0, const ScalingFunction& F, const PathSampler& sampler,
                               double moment_time, double horizon,
                               std::span<const std::size_t> n_values, std::uint64_t seed,
                               unsigned threads) {
  if (n_values.empty()) throw DomainError("moment_and_lil: no walker counts");
  if (!(moment_time > 0.0)) throw DomainError("moment_and_lil: moment time must be positive");
  std::vector<double> lil_times;
  for (double t = 16.0; t <= horizon; t *= 2.0) lil_times.push_back(t);
  std::vector<double> times = lil_times;
  times.push_back(moment_time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::size_t k_moment = std::size_t(std::find(times.begin(), times.end(), moment_time) - times.begin());
  std::vector<std::size_t> k_lil;
  std::vector<double> h;
  for (double t : lil_times) {
    k_lil.push_back(std::size_t(std::find(times.begin(), times.end(), t) - times.begin()));
    h.push_back(lil_h(F, t));
  }

  std::size_t N = *std::max_element(n_values.begin(), n_values.end());
  auto paths = simulate_paths(x0, times, sampler, {N, seed, threads});
  const std::size_t K = times.size();

  MomentLilResult res;
  std::vector<std::size_t> ns(n_values.begin(), n_values.end());
  std::sort(ns.begin(), ns.end());
  double sum = 0.0;
  std::size_t done = 0;
  for (std::size_t n : ns) {
    for (; done < n; ++done) sum += F(paths[done * K + k_moment].distance);
    res.moment_curve.emplace_back(n, sum / double(n));
  }
  for (std::size_t i = 1; i < res.moment_curve.size(); ++i)
    res.drifts.push_back(
        std::abs(res.moment_curve[i].second / res.moment_curve[i - 1].second - 1.0));

  if (!k_lil.empty()) {
    res.lil_sup.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      double m = 0.0;
      for (std::size_t j = 0; j < k_lil.size(); ++j)
        m = std::max(m, paths[i * K + k_lil[j]].distance / h[j]);
      res.lil_sup[i] = m;
    }
    std::vector<double> sorted = res.lil_sup;
    std::sort(sorted.begin(), sorted.end());
    auto q = [&](double p) { return sorted[std::size_t(p * double(sorted.size() - 1))]; };
    res.lil_q50 = q(0.5);
    res.lil_q90 = q(0.9);
    res.lil_q99 = q(0.99);
  }
  return res;
}

}  // namespace hkl
