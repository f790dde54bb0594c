#include "tcikit/devlab.hpp"

#include "tcikit/criteria.hpp"
#include "tcikit/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <thread>

namespace tcikit {

void ExperimentConfig::validate() const {
  if (replicas < 1) throw std::invalid_argument("replicas must be at least 1");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
  for (int n : sample_sizes)
    if (n < 1) throw std::invalid_argument("sample sizes must be at least 1");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] >= 0.0)) throw std::invalid_argument("t-grid must be nonnegative");
    if (k > 0 && t_grid[k] < t_grid[k - 1]) throw std::invalid_argument("t-grid must be sorted ascending");
  }
}

std::mt19937_64 replica_engine(std::uint64_t seed, std::uint64_t salt, std::uint64_t replica) {
  auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x); };
  auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(salt), hi(salt), lo(replica), hi(replica)};
  return std::mt19937_64(seq);
}

namespace {

// counts hits within this distance below a threshold; lattice values of L_n
// such as 0.7 - 0.5 land one ulp under t = 0.2
constexpr Real kHitSlack = 1e-12;

Real uniform01(std::mt19937_64& e) { return static_cast<Real>(e() >> 11) * 0x1.0p-53; }

struct Sampler {
  std::vector<Real> cdf;

  explicit Sampler(const ProbMeasure& mu) {
    const Vector& w = mu.weights();
    Real acc = 0.0;
    for (Index i = 0; i < w.size(); ++i) {
      acc += w[i];
      cdf.push_back(acc);
    }
    // the last atom with positive mass closes the CDF
    Index last = w.size() - 1;
    while (last > 0 && w[last] <= 0.0) --last;
    for (Index i = last; i < w.size(); ++i) cdf[i] = 1.0;
  }

  void counts(int n, std::mt19937_64& e, Vector& out) const {
    out.setZero(static_cast<Index>(cdf.size()));
    for (int k = 0; k < n; ++k) {
      const Real u = uniform01(e);
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      out[it - cdf.begin()] += 1.0;
    }
  }
};

// Runs replicas [0, count) split over threads; f(replica, engine, acc) adds
// into a per-thread accumulator of `width` longs, merged by summation.
std::vector<long> count_replicas(const ExperimentConfig& cfg, std::uint64_t salt, long count, std::size_t width,
                                 const std::function<void(long, std::mt19937_64&, std::vector<long>&)>& f) {
  const int threads = static_cast<int>(std::min<long>(cfg.threads, count));
  std::vector<std::vector<long>> acc(threads, std::vector<long>(width, 0));
  auto work = [&](int k) {
    const long begin = count * k / threads, end = count * (k + 1) / threads;
    for (long r = begin; r < end; ++r) {
      std::mt19937_64 e = replica_engine(cfg.seed, salt, static_cast<std::uint64_t>(r));
      f(r, e, acc[k]);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(work, k);
    for (auto& t : pool) t.join();
  }
  std::vector<long> total(width, 0);
  for (const auto& a : acc)
    for (std::size_t i = 0; i < width; ++i) total[i] += a[i];
  return total;
}

// Per-replica values, in replica order whatever the thread count.
std::vector<Real> replica_values(const ExperimentConfig& cfg, std::uint64_t salt, long count,
                                 const std::function<Real(std::mt19937_64&)>& f) {
  std::vector<Real> out(count);
  const int threads = static_cast<int>(std::min<long>(cfg.threads, count));
  auto work = [&](int k) {
    for (long r = count * k / threads; r < count * (k + 1) / threads; ++r) {
      std::mt19937_64 e = replica_engine(cfg.seed, salt, static_cast<std::uint64_t>(r));
      out[r] = f(e);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(work, k);
    for (auto& t : pool) t.join();
  }
  return out;
}

void add_hits(Real value, const std::vector<Real>& t, long* row) {
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (value < t[k] - kHitSlack) break;
    ++row[k];
  }
}

TailCell make_cell(int n, Real t, Index member, long hits, long replicas, Real alpha_t) {
  TailCell c;
  c.n = n;
  c.t = t;
  c.member = member;
  c.hits = hits;
  c.replicas = replicas;
  c.p_hat = static_cast<Real>(hits) / replicas;
  c.stderr_ = std::sqrt(c.p_hat * (1.0 - c.p_hat) / replicas);
  c.bound = std::exp(-n * alpha_t);
  c.pass = c.p_hat <= c.bound + 3.0 * c.stderr_;
  return c;
}

// salts keep the batches of different sample sizes and the centering batch apart
std::uint64_t tail_salt(int n) { return static_cast<std::uint64_t>(n); }
std::uint64_t center_salt(int n) { return (std::uint64_t{1} << 40) + static_cast<std::uint64_t>(n); }

// Shared driver for centered statistics: E Z from replicas / 10 draws, then
// the tail of Z - E Z.
TailReport centered_tail(const ExperimentConfig& cfg, const std::string& name,
                         const std::function<Real(int, std::mt19937_64&)>& statistic,
                         const RateFunction& alpha) {
  TailReport rep;
  rep.statistic = name;
  rep.seed = cfg.seed;
  rep.replicas = cfg.replicas;
  const std::size_t nt = cfg.t_grid.size();
  for (int n : cfg.sample_sizes) {
    const long batch = std::max<long>(1, cfg.replicas / 10);
    const std::vector<Real> zs =
        replica_values(cfg, center_salt(n), batch, [&](std::mt19937_64& e) { return statistic(n, e); });
    Real center = 0.0;
    for (Real z : zs) center += z;
    center /= static_cast<Real>(batch);
    rep.centers.push_back(center);
    const std::vector<long> hits =
        count_replicas(cfg, tail_salt(n), cfg.replicas, nt, [&](long, std::mt19937_64& e, std::vector<long>& acc) {
          add_hits(statistic(n, e) - center, cfg.t_grid, acc.data());
        });
    for (std::size_t k = 0; k < nt; ++k)
      rep.cells.push_back(make_cell(n, cfg.t_grid[k], -1, hits[k], cfg.replicas, alpha(cfg.t_grid[k])));
  }
  return rep;
}

}  // namespace

ProbMeasure sample_empirical(const ProbMeasure& mu, int n, std::mt19937_64& engine) {
  if (n < 1) throw std::invalid_argument("sample_empirical: n must be at least 1");
  Vector c;
  Sampler(mu).counts(n, engine, c);
  return ProbMeasure(mu.space(), c / static_cast<Real>(n));
}

bool TailReport::all_pass() const { return !witness().has_value(); }

std::optional<std::size_t> TailReport::witness() const {
  for (std::size_t k = 0; k < cells.size(); ++k)
    if (!cells[k].pass) return k;
  return std::nullopt;
}

TailReport deviation_tail(const ExperimentConfig& cfg, const ProbMeasure& mu, const RateFunction& alpha,
                          const CostMatrix& c, const PotentialFamily* family) {
  cfg.validate();
  if (c.rows() != mu.size() || c.cols() != mu.size()) throw DimensionMismatch("deviation_tail: cost size");
  if (family && family->space_size() != mu.size()) throw DimensionMismatch("deviation_tail: family size");
  const TransportEvaluator eval(mu, c);
  const Sampler sampler(mu);
  // member m contributes <phi_m, L_n> + <psi_m, mu>
  std::vector<Vector> phis;
  std::vector<Real> offsets;
  if (family)
    for (const auto& p : family->members()) {
      phis.push_back(p.phi);
      offsets.push_back(mu.expect(p.psi));
    }
  const std::size_t rows = 1 + phis.size(), nt = cfg.t_grid.size();
  std::vector<Real> alpha_t;
  for (Real t : cfg.t_grid) alpha_t.push_back(alpha(t));

  TailReport rep;
  rep.statistic = "transport";
  rep.seed = cfg.seed;
  rep.replicas = cfg.replicas;
  for (int n : cfg.sample_sizes) {
    const std::vector<long> hits = count_replicas(
        cfg, tail_salt(n), cfg.replicas, rows * nt, [&](long, std::mt19937_64& e, std::vector<long>& acc) {
          Vector counts;
          sampler.counts(n, e, counts);
          const Vector ln = counts / static_cast<Real>(n);
          add_hits(eval(ln), cfg.t_grid, acc.data());
          for (std::size_t m = 0; m < phis.size(); ++m)
            add_hits(phis[m].dot(ln) + offsets[m], cfg.t_grid, acc.data() + (m + 1) * nt);
        });
    for (std::size_t row = 0; row < rows; ++row)
      for (std::size_t k = 0; k < nt; ++k)
        rep.cells.push_back(make_cell(n, cfg.t_grid[k], static_cast<Index>(row) - 1, hits[row * nt + k],
                                      cfg.replicas, alpha_t[k]));
  }
  return rep;
}

PointSet enlargement(const PointSet& a, Real r, const CostMatrix& d) {
  if (a.empty()) throw std::invalid_argument("enlargement: empty set");
  if (!d.is_metric()) throw std::invalid_argument("enlargement: needs a metric");
  PointSet out;
  for (Index x = 0; x < d.rows(); ++x) {
    Real dist = kInf;
    for (Index y : a) dist = std::min(dist, d(x, y));
    if (dist <= r) out.push_back(x);
  }
  return out;
}

namespace {

PointSet mask_to_set(std::uint32_t mask) {
  PointSet s;
  for (Index i = 0; mask; ++i, mask >>= 1)
    if (mask & 1u) s.push_back(i);
  return s;
}

// bit i of balls[x] is set when d(x, i) <= r
std::vector<std::uint32_t> ball_masks(const CostMatrix& d, Real r) {
  std::vector<std::uint32_t> balls(d.rows(), 0);
  for (Index x = 0; x < d.rows(); ++x)
    for (Index y = 0; y < d.rows(); ++y)
      if (d(x, y) <= r) balls[x] |= std::uint32_t{1} << y;
  return balls;
}

std::vector<Real> subset_masses(const Vector& w) {
  const std::size_t full = std::size_t{1} << w.size();
  std::vector<Real> mass(full, 0.0);
  for (std::size_t m = 1; m < full; ++m) {
    const int low = __builtin_ctzll(m);
    mass[m] = mass[m & (m - 1)] + w[low];
  }
  return mass;
}

}  // namespace

ConcentrationCurve concentration_function(const ProbMeasure& mu, const CostMatrix& d, const std::vector<Real>& r_grid,
                                          const std::vector<PointSet>* sets) {
  if (!d.is_metric()) throw std::invalid_argument("concentration_function: needs a metric");
  if (d.rows() != mu.size()) throw DimensionMismatch("concentration_function: sizes");
  ConcentrationCurve out;
  out.r = r_grid;
  const Index n = mu.size();
  if (sets) {
    for (Real r : r_grid) {
      Real best = 0.0;
      PointSet arg;
      for (const auto& a : *sets) {
        if (a.empty() || mu.mass(a) < 0.5 - 1e-12) continue;
        const Real v = 1.0 - mu.mass(enlargement(a, r, d));
        if (v > best || arg.empty()) {
          best = std::max(best, v);
          arg = a;
        }
      }
      out.theta.push_back(best);
      out.argmax.push_back(arg);
    }
    return out;
  }
  if (n > 20) throw BudgetExceeded("concentration_function: more than 20 points needs a family of sets");
  const std::vector<Real> mass = subset_masses(mu.weights());
  const std::size_t full = mass.size();
  std::vector<std::uint32_t> en(full, 0);
  for (Real r : r_grid) {
    const std::vector<std::uint32_t> balls = ball_masks(d, r);
    Real best = -1.0;
    std::uint32_t arg = 0;
    for (std::size_t m = 1; m < full; ++m) {
      en[m] = en[m & (m - 1)] | balls[__builtin_ctzll(m)];
      if (mass[m] < 0.5 - 1e-12) continue;
      const Real v = mass[(full - 1) & ~static_cast<std::size_t>(en[m])];
      if (v > best) {
        best = v;
        arg = static_cast<std::uint32_t>(m);
      }
    }
    out.theta.push_back(std::max<Real>(best, 0.0));
    out.argmax.push_back(mask_to_set(arg));
  }
  return out;
}

MartonReport marton_bound_check(const ProbMeasure& mu, const CostMatrix& d, const RateFunction& alpha, int r_points,
                                Real tol) {
  if (!d.is_metric()) throw std::invalid_argument("marton_bound_check: needs a metric");
  const Index n = mu.size();
  if (d.rows() != n) throw DimensionMismatch("marton_bound_check: sizes");
  if (n > 12) throw BudgetExceeded("marton_bound_check: at most 12 points");
  if (r_points < 2) throw std::invalid_argument("marton_bound_check: r_points must be at least 2");
  const Real diam = d.max_entry();
  std::vector<Real> r_grid(r_points);
  for (int k = 0; k < r_points; ++k) r_grid[k] = diam * k / (r_points - 1);

  MartonReport rep;
  const Vector& w = mu.weights();
  const std::vector<Real> mass = subset_masses(w);
  std::vector<Real> dist(n);
  for (std::size_t m = 1; m < mass.size(); ++m) {
    if (mass[m] <= 0.0) continue;
    const Real ra = generalized_inverse(alpha, -std::log(std::min<Real>(1.0, mass[m])));
    for (Index x = 0; x < n; ++x) {
      dist[x] = kInf;
      for (Index y = 0; y < n; ++y)
        if (m >> y & 1u) dist[x] = std::min(dist[x], d(x, y));
    }
    for (Real r : r_grid) {
      if (r < ra) continue;
      Real inside = 0.0;
      for (Index x = 0; x < n; ++x)
        if (dist[x] <= r) inside += w[x];
      const Real slack = inside - 1.0 + std::exp(-alpha(r - ra));
      ++rep.cells;
      if (slack < rep.worst_slack) {
        rep.worst_slack = slack;
        rep.set = mask_to_set(static_cast<std::uint32_t>(m));
        rep.r = r;
        rep.r_a = ra;
      }
    }
  }
  rep.holds = !(rep.worst_slack < -tol);

  // deviation lemma over the 1-Lipschitz potentials
  const PotentialFamily lip = PotentialFamily::lipschitz_ball(d);
  for (Index k = 0; k < lip.size(); ++k) {
    const Vector& phi = lip.members()[k].phi;
    const Real mean = mu.expect(phi);
    for (Real t : r_grid) {
      Real p = 0.0;
      for (Index x = 0; x < n; ++x)
        if (phi[x] >= mean + t - kHitSlack) p += w[x];
      const Real slack = std::exp(-alpha(t)) - p;
      if (slack < rep.lemma_worst) {
        rep.lemma_worst = slack;
        rep.lemma_member = k;
        rep.lemma_t = t;
      }
    }
  }
  rep.lemma_holds = !(rep.lemma_worst < -tol);

  // concentration function past r0 = alpha^{-1}(log 2)
  if (std::log(2.0) <= alpha.supremum()) {
    const Real r0 = generalized_inverse(alpha, std::log(2.0));
    std::vector<Real> rs;
    for (Real r : r_grid)
      if (r >= r0) rs.push_back(r);
    const ConcentrationCurve theta = concentration_function(mu, d, rs);
    for (std::size_t k = 0; k < rs.size(); ++k)
      rep.concentration_worst = std::min(rep.concentration_worst, std::exp(-alpha(rs[k] - r0)) - theta.theta[k]);
    rep.concentration_holds = !(rep.concentration_worst < -tol);
  }
  return rep;
}

TailReport empirical_process(const ExperimentConfig& cfg, const ProbMeasure& mu, const CostMatrix& d,
                             const std::vector<Vector>& functions, const RateFunction& alpha) {
  cfg.validate();
  const Index n = mu.size();
  if (d.rows() != n) throw DimensionMismatch("empirical_process: sizes");
  for (std::size_t k = 0; k < functions.size(); ++k) {
    const Vector& g = functions[k];
    if (g.size() != n) throw DimensionMismatch("empirical_process: function size");
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (std::abs(g[i] - g[j]) > d(i, j) + 1e-12)
          throw std::invalid_argument("empirical_process: member " + std::to_string(k) + " is not 1-Lipschitz");
  }
  Matrix g(static_cast<Index>(functions.size()), n);
  for (std::size_t k = 0; k < functions.size(); ++k) g.row(static_cast<Index>(k)) = functions[k].transpose();
  const Vector& w = mu.weights();
  const Sampler sampler(mu);
  auto statistic = [&](int size, std::mt19937_64& e) {
    if (g.rows() == 0) return 0.0;
    Vector c;
    sampler.counts(size, e, c);
    return (g * (c / static_cast<Real>(size) - w)).cwiseAbs().maxCoeff();
  };
  return centered_tail(cfg, "empirical_process", statistic, alpha);
}

TailReport banach_mean_deviation(const ExperimentConfig& cfg, const ProbMeasure& mu, const Matrix& coords) {
  cfg.validate();
  if (coords.rows() != mu.size()) throw DimensionMismatch("banach_mean_deviation: one row per point");
  const Vector& w = mu.weights();
  const Vector mean = coords.transpose() * w;
  const Real m = orlicz_norm_pair(CostMatrix::euclidean(coords), mu).value;
  const Real m0 = orlicz_norm(coords.rowwise().norm(), mu).value;
  const RateFunction alpha = m > 0.0 ? RateFunction::sqrt_form(m) : RateFunction::indicator(0.0);
  const Sampler sampler(mu);
  auto statistic = [&](int size, std::mt19937_64& e) {
    Vector c;
    sampler.counts(size, e, c);
    return (coords.transpose() * (c / static_cast<Real>(size)) - mean).norm();
  };
  TailReport rep = centered_tail(cfg, "banach_mean", statistic, alpha);
  rep.m = m;
  rep.m0 = m0;
  for (auto& c : rep.cells) {
    c.reference_bound = m0 > 0.0 ? std::exp(-c.n * c.t * c.t / (8.0 * (2.0 * m0 * m0 + c.t * m0)))
                                  : (c.t > 0.0 ? 0.0 : 1.0);
    if (c.bound > c.reference_bound * (1.0 + 1e-12) + 1e-300) rep.ordering_holds = false;
  }
  return rep;
}

TailReport banach_mean_deviation(const ExperimentConfig& cfg, const ProbMeasure& mu) {
  if (!mu.space() || !mu.space()->coords())
    throw std::invalid_argument("banach_mean_deviation: the space has no coordinates");
  return banach_mean_deviation(cfg, mu, *mu.space()->coords());
}

}  // namespace tcikit
