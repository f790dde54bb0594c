#include "doctest.h"

#include "tcikit/criteria.hpp"
#include "tcikit/devlab.hpp"
#include "tcikit/transport.hpp"

#include <cmath>
#include <random>

using namespace tcikit;

namespace {

ProbMeasure random_measure(std::mt19937_64& rng, Index n, Real floor = 0.02) {
  std::uniform_real_distribution<Real> u(floor, 1.0);
  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = u(rng);
  return ProbMeasure(w / w.sum());
}

// P(|S / n - p| >= t) for S ~ Bin(n, p)
Real binomial_two_sided(int n, Real p, Real t) {
  Real total = 0.0;
  for (int k = 0; k <= n; ++k) {
    if (std::abs(static_cast<Real>(k) / n - p) < t - 1e-12) continue;
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                      (n - k) * std::log1p(-p));
  }
  return total;
}

std::vector<Real> t_grid_045() {
  std::vector<Real> t;
  for (int k = 0; k <= 9; ++k) t.push_back(0.05 * k);
  return t;
}

}  // namespace

TEST_CASE("sample_empirical") {
  const ProbMeasure mu = ProbMeasure::uniform(4);
  std::mt19937_64 e = replica_engine(5, 0, 0);
  const ProbMeasure ln = sample_empirical(mu, 100000, e);
  CHECK(0.5 * tv_norm(ln, mu) < 0.02);

  std::mt19937_64 e2 = replica_engine(5, 0, 0);
  CHECK(sample_empirical(mu, 100000, e2).weights() == ln.weights());

  const ProbMeasure dirac = ProbMeasure::dirac(3, 2);
  for (int n : {1, 7, 50}) CHECK(sample_empirical(dirac, n, e).weights() == dirac.weights());

  // zero-mass atoms are never drawn
  const ProbMeasure holes(Vector{{0.0, 0.5, 0.0, 0.5, 0.0}});
  const Vector w = sample_empirical(holes, 5000, e).weights();
  CHECK(w[0] == 0.0);
  CHECK(w[2] == 0.0);
  CHECK(w[4] == 0.0);
  CHECK_THROWS_AS(sample_empirical(mu, 0, e), std::invalid_argument);
}

TEST_CASE("experiment config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.t_grid = {0.2, 0.1};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.t_grid = {0.1};
  c.replicas = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.replicas = 5;
  c.sample_sizes = {0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("deviation_tail on the two-point space") {
  const ProbMeasure mu = ProbMeasure::uniform(2);
  const CostMatrix h = CostMatrix::hamming(2);
  const PotentialFamily lip = PotentialFamily::lipschitz_ball(h);
  const RateFunction alpha = best_alpha(lip, mu);

  ExperimentConfig cfg;
  cfg.seed = 2024;
  cfg.replicas = 20000;
  cfg.sample_sizes = {10, 50, 200};
  cfg.t_grid = t_grid_045();
  const TailReport rep = deviation_tail(cfg, mu, alpha, h, &lip);
  CHECK(rep.all_pass());
  CHECK(rep.cells.size() == 3 * 10 * (1 + static_cast<std::size_t>(lip.size())));
  for (const auto& c : rep.cells) {
    if (c.t == 0.0 && c.member == -1) {
      CHECK(c.p_hat == 1.0);
      CHECK(c.bound == 1.0);
    }
    if (c.member != -1) continue;
    // T(L_n) = |L_n(0) - 1/2|
    const Real exact = std::min<Real>(1.0, binomial_two_sided(c.n, 0.5, c.t));
    CHECK(std::abs(c.p_hat - exact) <= 5.0 * std::sqrt(exact * (1.0 - exact) / c.replicas) + 1e-12);
  }

  // threads do not change anything
  ExperimentConfig par = cfg;
  par.threads = 3;
  const TailReport rep3 = deviation_tail(par, mu, alpha, h, &lip);
  REQUIRE(rep3.cells.size() == rep.cells.size());
  for (std::size_t k = 0; k < rep.cells.size(); ++k) CHECK(rep3.cells[k].hits == rep.cells[k].hits);

  const TailReport doubled = deviation_tail(cfg, mu, RateFunction::rescaled(alpha, 2.0, 1.0), h);
  REQUIRE(doubled.witness().has_value());
  const TailCell& w = doubled.cells[*doubled.witness()];
  CHECK(w.t > 0.0);
  CHECK(w.p_hat > w.bound + 3.0 * w.stderr_);
}

TEST_CASE("deviation bound is sharp enough to fail at t = 1/2 for n = 10") {
  // 2 / 1024 against e^{-10 log 2}: the bound is not valid at every n there
  const RateFunction alpha = best_alpha(PotentialFamily::lipschitz_ball(CostMatrix::hamming(2)), ProbMeasure::uniform(2));
  CHECK(binomial_two_sided(10, 0.5, 0.5) > std::exp(-10.0 * alpha(0.5)));
  for (int n : {10, 50, 200})
    for (Real t : t_grid_045()) CHECK(binomial_two_sided(n, 0.5, t) <= std::exp(-n * alpha(t)) + 1e-12);
}

TEST_CASE("enlargement") {
  const CostMatrix d = CostMatrix::line(3);
  CHECK(enlargement({0}, 1.0, d) == PointSet{0, 1});
  CHECK(enlargement({1}, 0.0, d) == PointSet{1});
  CHECK(enlargement({0}, 2.0, d) == PointSet{0, 1, 2});
  CHECK(enlargement({0, 2}, 0.5, d) == PointSet{0, 2});
  CHECK_THROWS_AS(enlargement({}, 1.0, d), std::invalid_argument);
}

TEST_CASE("concentration_function") {
  const CostMatrix h = CostMatrix::hamming(2);
  const ConcentrationCurve c = concentration_function(ProbMeasure::uniform(2), h, {0.0, 0.3, 0.99, 1.0, 2.0});
  CHECK(c.theta[0] == doctest::Approx(0.5));
  CHECK(c.theta[1] == doctest::Approx(0.5));
  CHECK(c.theta[2] == doctest::Approx(0.5));
  CHECK(c.theta[3] == doctest::Approx(0.0));
  CHECK(c.theta[4] == doctest::Approx(0.0));

  const ConcentrationCurve one = concentration_function(ProbMeasure::dirac(1, 0), CostMatrix::hamming(1), {0.0, 1.0});
  CHECK(one.theta[0] == 0.0);
  CHECK(one.theta[1] == 0.0);

  // the subset DP against explicit sets
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 3 + static_cast<Index>(rng() % 4);
    const ProbMeasure mu = random_measure(rng, n);
    const CostMatrix d = CostMatrix::line(n);
    std::vector<PointSet> sets;
    for (std::uint32_t m = 1; m < (1u << n); ++m) {
      PointSet s;
      for (Index i = 0; i < n; ++i)
        if (m >> i & 1u) s.push_back(i);
      sets.push_back(s);
    }
    const std::vector<Real> rs{0.0, 0.5, 1.0, 1.5, 2.0, static_cast<Real>(n)};
    const ConcentrationCurve a = concentration_function(mu, d, rs);
    const ConcentrationCurve b = concentration_function(mu, d, rs, &sets);
    for (std::size_t k = 0; k < rs.size(); ++k) {
      CHECK(a.theta[k] == doctest::Approx(b.theta[k]).epsilon(1e-12));
      CHECK(mu.mass(a.argmax[k]) >= 0.5 - 1e-12);
      CHECK(1.0 - mu.mass(enlargement(a.argmax[k], rs[k], d)) == doctest::Approx(a.theta[k]));
    }
    CHECK(a.theta.back() == 0.0);
  }
  CHECK_THROWS_AS(concentration_function(ProbMeasure::uniform(21), CostMatrix::hamming(21), {1.0}), BudgetExceeded);
}

TEST_CASE("marton_bound_check") {
  const CostMatrix h = CostMatrix::hamming(2);
  const ProbMeasure mu = ProbMeasure::uniform(2);
  const RateFunction alpha = best_alpha(PotentialFamily::lipschitz_ball(h), mu);
  const MartonReport ok = marton_bound_check(mu, h, alpha);
  CHECK(ok.holds);
  CHECK(ok.lemma_holds);
  CHECK(ok.concentration_holds);
  CHECK(ok.cells > 0);

  const MartonReport bad = marton_bound_check(mu, h, RateFunction::rescaled(alpha, 3.0, 1.0));
  CHECK_FALSE(bad.holds);
  CHECK(bad.set.size() == 1);
  // the witness is a genuine violation
  const RateFunction a3 = RateFunction::rescaled(alpha, 3.0, 1.0);
  CHECK(mu.mass(enlargement(bad.set, bad.r, h)) < 1.0 - std::exp(-a3(bad.r - bad.r_a)));

  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 6; ++rep) {
    const Index n = 3 + static_cast<Index>(rng() % 3);
    const ProbMeasure m = random_measure(rng, n, 0.05);
    const CostMatrix d = rep % 2 ? CostMatrix::line(n) : CostMatrix::hamming(n);
    const MartonReport r = marton_bound_check(m, d, best_alpha(PotentialFamily::lipschitz_ball(d), m), 40);
    CHECK(r.holds);
    CHECK(r.lemma_holds);
    CHECK(r.concentration_holds);
  }
  CHECK_THROWS_AS(marton_bound_check(ProbMeasure::uniform(13), CostMatrix::hamming(13), alpha), BudgetExceeded);
}

TEST_CASE("empirical_process") {
  const CostMatrix h = CostMatrix::hamming(2);
  const ProbMeasure mu = ProbMeasure::uniform(2);
  const RateFunction alpha = best_alpha(PotentialFamily::lipschitz_ball(h), mu);
  ExperimentConfig cfg;
  cfg.replicas = 5000;
  cfg.sample_sizes = {10, 50};
  cfg.t_grid = t_grid_045();

  const TailReport zero = empirical_process(cfg, mu, h, {Vector::Zero(2)}, alpha);
  CHECK(zero.all_pass());
  for (Real c : zero.centers) CHECK(c == 0.0);

  CHECK_THROWS_AS(empirical_process(cfg, mu, h, {Vector{{0.0, 2.0}}}, alpha), std::invalid_argument);

  // over the Lipschitz vertices Z_n is T_d(L_n, mu)
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const Index n = 2 + static_cast<Index>(rng() % 3);
    const ProbMeasure m = random_measure(rng, n);
    const CostMatrix d = rep % 2 ? CostMatrix::line(n) : CostMatrix::hamming(n);
    const auto vertices = lipschitz_vertices(d);
    REQUIRE(vertices.has_value());
    std::mt19937_64 e = replica_engine(9, 1, static_cast<std::uint64_t>(rep));
    const ProbMeasure ln = sample_empirical(m, 7, e);
    Real z = 0.0;
    for (const Vector& g : *vertices) z = std::max(z, std::abs(g.dot(ln.weights() - m.weights())));
    CHECK(z == doctest::Approx(solve_ot(m, ln, d).value).epsilon(1e-9));
  }

  // eight random 1-Lipschitz members on three points
  const CostMatrix line = CostMatrix::line(3);
  const ProbMeasure m3(Vector{{0.2, 0.5, 0.3}});
  std::vector<Vector> g;
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  while (g.size() < 8) {
    const Vector v{{0.0, u(rng), 0.0}};
    Vector w = v;
    w[2] = w[1] + u(rng);
    g.push_back(w);
  }
  const TailReport rep = empirical_process(cfg, m3, line, g, best_alpha(PotentialFamily::lipschitz_ball(line), m3));
  CHECK(rep.all_pass());
  CHECK(rep.centers.size() == 2);
  CHECK(rep.centers[0] > rep.centers[1]);
}

TEST_CASE("banach_mean_deviation") {
  ExperimentConfig cfg;
  cfg.replicas = 5000;
  cfg.sample_sizes = {20, 100};
  cfg.t_grid = {0.0, 0.05, 0.1, 0.2, 0.3, 0.5};

  const Matrix pm{{-1.0}, {1.0}};
  const TailReport sym = banach_mean_deviation(cfg, ProbMeasure::uniform(2), pm);
  CHECK(sym.all_pass());
  CHECK(sym.ordering_holds);
  CHECK(sym.m <= 2.0 * sym.m0 + 1e-12);

  const Matrix point{{0.3, -2.0}};
  const TailReport dirac = banach_mean_deviation(cfg, ProbMeasure::dirac(1, 0), point);
  CHECK(dirac.all_pass());
  for (Real c : dirac.centers) CHECK(c == 0.0);

  std::mt19937_64 rng(17);
  std::normal_distribution<Real> g(0.0, 1.0);
  for (int rep = 0; rep < 4; ++rep) {
    const Index n = 3 + static_cast<Index>(rng() % 4), q = 1 + static_cast<Index>(rng() % 3);
    Matrix x(n, q);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < q; ++j) x(i, j) = g(rng);
    const TailReport r = banach_mean_deviation(cfg, random_measure(rng, n), x);
    CHECK(r.all_pass());
    CHECK(r.ordering_holds);
  }

  CHECK_THROWS_AS(banach_mean_deviation(cfg, ProbMeasure::uniform(2)), std::invalid_argument);
}
