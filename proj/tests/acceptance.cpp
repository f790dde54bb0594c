// One line per acceptance criterion. Exit status 1 if any criterion fails.
// Usage: acceptance [C1 C5 ...]   (no arguments: all of them)

#include "tcikit/criteria.hpp"
#include "tcikit/devlab.hpp"
#include "tcikit/duality.hpp"
#include "tcikit/lp.hpp"
#include "tcikit/ratefn.hpp"
#include "tcikit/tensor.hpp"
#include "tcikit/transport.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace tcikit;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector random_simplex(std::mt19937_64& rng, Index n, Real zero_prob = 0.0) {
  std::exponential_distribution<Real> e(1.0);
  std::bernoulli_distribution zero(zero_prob);
  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = zero(rng) ? 0.0 : e(rng);
  if (w.sum() == 0.0) w[0] = 1.0;
  return w / w.sum();
}

ProbMeasure random_measure(std::mt19937_64& rng, Index n, Real floor = 0.02) {
  std::uniform_real_distribution<Real> u(floor, 1.0);
  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = u(rng);
  return ProbMeasure(w / w.sum());
}

CostMatrix random_euclidean(std::mt19937_64& rng, Index n, Index dim = 2) {
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  Matrix pts(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j) pts(i, j) = u(rng);
  return CostMatrix::euclidean(pts);
}

// ---- exact rational transport oracle

using Rational = boost::multiprecision::cpp_rational;

Rational to_rational(Real x) {
  int e = 0;
  const Real m = std::frexp(x, &e);
  Rational r(static_cast<long long>(std::ldexp(m, 53)));
  const int shift = e - 53;
  if (shift >= 0) r *= Rational(boost::multiprecision::cpp_int(1) << shift);
  else r /= Rational(boost::multiprecision::cpp_int(1) << -shift);
  return r;
}

// the marginals are renormalized in exact arithmetic so both totals are 1
Real rational_ot(const Vector& a, const Vector& b, const Matrix& c) {
  const Index n = a.size(), m = b.size();
  const auto at = [m](Index i, Index j) { return static_cast<std::size_t>(i * m + j); };
  lp::Problem<Rational> p;
  p.c.resize(static_cast<std::size_t>(n * m));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) p.c[at(i, j)] = to_rational(c(i, j));
  std::vector<Rational> ra, rb;
  Rational sa = 0, sb = 0;
  for (Index i = 0; i < n; ++i) ra.push_back(to_rational(a[i])), sa += ra.back();
  for (Index j = 0; j < m; ++j) rb.push_back(to_rational(b[j])), sb += rb.back();
  for (Index i = 0; i < n; ++i) {
    std::vector<Rational> row(static_cast<std::size_t>(n * m), 0);
    for (Index j = 0; j < m; ++j) row[at(i, j)] = 1;
    p.a.push_back(row);
    p.b.push_back(ra[i] / sa);
  }
  for (Index j = 0; j < m; ++j) {
    std::vector<Rational> row(static_cast<std::size_t>(n * m), 0);
    for (Index i = 0; i < n; ++i) row[at(i, j)] = 1;
    p.a.push_back(row);
    p.b.push_back(rb[j] / sb);
  }
  const auto sol = lp::minimize(p);
  if (sol.status != lp::Status::optimal) return std::numeric_limits<Real>::quiet_NaN();
  return sol.value.convert_to<Real>();
}

// ---- criteria

Outcome c1() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<Real> u(0.0, 3.0);
  Real worst_gap = 0.0, worst_oracle = 0.0;
  int oracle_cases = 0, infeasible = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 8), m = 1 + static_cast<Index>(rng() % 8);
    const ProbMeasure mu(random_simplex(rng, n, 0.15)), nu(random_simplex(rng, m, 0.15));
    Matrix c(n, m);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) c(i, j) = u(rng);
    if (n == m) c.diagonal().setZero();
    const CostMatrix cost(c, CostKind::general);
    const OtSolution sol = solve_ot(mu, nu, cost);
    // dual value recomputed from the potentials, which must be feasible
    const Real dual = mu.weights().dot(sol.dual.psi) + nu.weights().dot(sol.dual.phi);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j)
        if (sol.dual.psi[i] + sol.dual.phi[j] > c(i, j) + 1e-9) ++infeasible;
    if ((sol.plan.pi.rowwise().sum() - mu.weights()).cwiseAbs().maxCoeff() > 1e-9 ||
        (sol.plan.pi.colwise().sum().transpose() - nu.weights()).cwiseAbs().maxCoeff() > 1e-9 ||
        sol.plan.pi.minCoeff() < 0.0)
      ++infeasible;
    worst_gap = std::max(worst_gap, std::abs(sol.value - dual));
    if (n <= 5 && m <= 5) {
      ++oracle_cases;
      const Real exact = rational_ot(mu.weights(), nu.weights(), c);
      worst_oracle = std::max(worst_oracle, std::isnan(exact) ? kInf : std::abs(exact - sol.value));
    }
  }
  return {worst_gap <= 1e-8 && worst_oracle <= 1e-8 && infeasible == 0,
          fmt("100 instances, max |primal-dual| %.2e, rational oracle on %d instances max diff %.2e, %d "
              "feasibility failures",
              worst_gap, oracle_cases, worst_oracle, infeasible)};
}

Outcome c2() {
  std::mt19937_64 rng(102);
  Real worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 7);
    CostMatrix d = trial % 4 == 0   ? CostMatrix::hamming(n, 0.5 + trial * 0.01)
                   : trial % 4 == 1 ? CostMatrix::line(n)
                                    : random_euclidean(rng, n, 1 + trial % 3);
    const ProbMeasure mu(random_simplex(rng, n, 0.1)), nu(random_simplex(rng, n, 0.1));
    worst = std::max(worst, std::abs(kr_dual_norm(nu, mu, d) - solve_ot(mu, nu, d).value));
  }
  return {worst <= 1e-8, fmt("100 metric instances (Hamming, line, Euclidean), max |KR - OT| %.2e", worst)};
}

Outcome c3() {
  std::mt19937_64 rng(103);
  long violations = 0;
  Real tightest = kInf;
  for (int trial = 0; trial < 100000; ++trial) {
    const Index n = 2 + trial % 5;
    const ProbMeasure mu(random_simplex(rng, n)), nu(random_simplex(rng, n, 0.2));
    const Real h = relative_entropy(nu, mu);
    const Real tv = tv_norm(nu, mu);
    if (0.5 * tv * tv > h + 1e-12) ++violations;
    if (h > 0.0 && is_finite(h)) tightest = std::min(tightest, h - 0.5 * tv * tv);
  }
  return {violations == 0, fmt("1e5 pairs n <= 6, %ld violations, smallest slack %.2e", violations, tightest)};
}

RateFunction random_sampled(std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  const int k = 2 + static_cast<int>(rng() % 12);
  std::vector<Real> t{0.0}, v{0.0};
  Real slope = u(rng) < 0.3 ? 0.0 : u(rng);
  for (int i = 0; i < k; ++i) {
    const Real dt = 0.05 + u(rng);
    t.push_back(t.back() + dt);
    v.push_back(v.back() + slope * dt);
    slope += 2.0 * u(rng);
  }
  const int kind = static_cast<int>(rng() % 3);
  if (kind == 0) return RateFunction::sampled(t, v, t.back());
  if (kind == 1) return RateFunction::sampled(t, v, t.back() + 1.0 + u(rng), slope);
  return RateFunction::sampled(t, v, kInf, slope);
}

// sup |f - g| on [0, t_max] (both infinite counts as equal)
Real sup_distance(const RateFunction& f, const RateFunction& g, Real t_max, int points = 4001) {
  Real worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const Real t = t_max * i / (points - 1);
    const Real a = f(t), b = g(t);
    if (is_finite(a) != is_finite(b)) return kInf;
    if (is_finite(a)) worst = std::max(worst, std::abs(a - b));
  }
  return worst;
}

// sup of |(f box g)^* - (f^* + g^*)| / max(1, f^* + g^*) for s up to 10, or
// up to 0.999 of a pole of the conjugates
Real identity_error(const RateFunction& f, const RateFunction& g) {
  const RateFunction fc = monotone_conjugate(f), gc = monotone_conjugate(g);
  const RateFunction lhs = monotone_conjugate(inf_convolution(f, g));
  const Real s_max = std::min<Real>(10.0, 0.999 * std::min(fc.domain_end(), gc.domain_end()));
  Real worst = 0.0;
  for (int k = 0; k <= 4000; ++k) {
    const Real s = s_max * k / 4000.0;
    const Real exact = fc(s) + gc(s), got = lhs(s);
    if (is_finite(exact) != is_finite(got)) return kInf;
    if (is_finite(exact)) worst = std::max(worst, std::abs(got - exact) / std::max<Real>(1.0, exact));
  }
  return worst;
}

Outcome c4() {
  const std::vector<RateFunction> suite{
      RateFunction::zero(),         RateFunction::pinsker(),      RateFunction::quadratic(3),
      RateFunction::linear(0.5),    RateFunction::indicator(2),   RateFunction::sqrt_form(0.3),
      RateFunction::bernstein(2),   RateFunction::rescaled(RateFunction::sqrt_form(1), 2, 0.5)};
  std::mt19937_64 rng(104);
  std::vector<RateFunction> sampled;
  for (int i = 0; i < 50; ++i) sampled.push_back(random_sampled(rng));

  Real inv = 0.0;
  for (const auto& f : suite) inv = std::max(inv, sup_distance(monotone_conjugate(monotone_conjugate(f)), f, 10.0));
  for (const auto& f : sampled) inv = std::max(inv, sup_distance(monotone_conjugate(monotone_conjugate(f)), f, 30.0));

  Real additive = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < suite.size(); ++i)
    for (std::size_t j = i; j < suite.size(); ++j, ++pairs) additive = std::max(additive, identity_error(suite[i], suite[j]));
  for (std::size_t i = 0; i < sampled.size(); ++i, ++pairs)
    additive = std::max(additive, identity_error(sampled[i], i % 2 ? suite[1 + i % 7] : sampled[(i + 1) % sampled.size()]));
  return {inv <= 1e-6 && additive <= 1e-6,
          fmt("involution sup %.2e on 8 closed forms + 50 sampled; (f box g)^* = f^* + g^* on %d pairs, max "
              "error %.2e (relative to max(1, value))",
              inv, pairs, additive)};
}

Outcome c5() {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  const Real h = 1e-5;
  int agree = 0, scenarios = 0, rejected = 0, holds = 0;
  std::string disagreement;
  while (scenarios < 50) {
    const Real p = 0.05 + 0.9 * u(rng), scale = 0.5 + 1.5 * u(rng);
    const ProbMeasure mu(Vector{{1.0 - p, p}});
    const CostMatrix d = CostMatrix::hamming(2, scale);
    const PotentialFamily fam = PotentialFamily::lipschitz_ball(d);
    const RateFunction best = best_alpha(fam, mu);
    RateFunction alpha;
    switch (rng() % 4) {
      case 0: alpha = RateFunction::rescaled(best, 0.3 + 1.4 * u(rng), 1.0); break;
      case 1: alpha = RateFunction::quadratic((0.5 + 3.5 * u(rng)) / (scale * scale)); break;
      case 2: alpha = RateFunction::sqrt_form((0.2 + u(rng)) * scale); break;
      default: alpha = RateFunction::rescaled(RateFunction::pinsker(), 1.0, (1.0 + 2.0 * u(rng)) / scale); break;
    }
    // a verdict that flips under a 0.1% rescaling is beyond grid resolution
    const bool lo = bg_check(RateFunction::rescaled(alpha, 0.999, 1.0), fam, mu).holds_b;
    const bool hi = bg_check(RateFunction::rescaled(alpha, 1.001, 1.0), fam, mu).holds_b;
    if (lo != hi) {
      ++rejected;
      continue;
    }
    ++scenarios;
    const bool b = bg_check(alpha, fam, mu).holds_b;
    const bool a = primal_check(alpha, mu, d, h).holds_a;
    holds += b ? 1 : 0;
    if (a == b) ++agree;
    else if (disagreement.empty()) disagreement = fmt(" first disagreement p=%.4f scale=%.4f %s", p, scale, alpha.describe().c_str());
  }
  // constructed cases on a fixed asymmetric measure
  const ProbMeasure mu(Vector{{0.3, 0.7}});
  const CostMatrix d = CostMatrix::hamming(2);
  const PotentialFamily fam = PotentialFamily::lipschitz_ball(d);
  const RateFunction best = best_alpha(fam, mu);
  const RateFunction doubled = RateFunction::rescaled(best, 2.0, 1.0);
  const bool pass_ok = bg_check(best, fam, mu).holds_b && primal_check(best, mu, d, h).holds_a;
  const BgReport bad_b = bg_check(doubled, fam, mu);
  const PrimalReport bad_a = primal_check(doubled, mu, d, h);
  const bool fail_ok = !bad_b.holds_b && !bad_a.holds_a &&
                       doubled(std::abs(bad_a.nu[1] - 0.7)) > relative_entropy(ProbMeasure(bad_a.nu), mu);
  return {agree == scenarios && pass_ok && fail_ok,
          fmt("%d/%d scenarios agree (%d hold, %d fail; %d borderline draws rejected), best_alpha passes: %s, "
              "2 x best_alpha falsified with witness: %s",
              agree, scenarios, holds, scenarios - holds, rejected, pass_ok ? "yes" : "no", fail_ok ? "yes" : "no") +
              disagreement};
}

// sup |f - g| over t in [0, t_hi]
Real sup_on(const std::function<Real(Real)>& f, const std::function<Real(Real)>& g, Real t_hi, int points = 2001) {
  Real worst = 0.0;
  for (int k = 0; k <= points - 1; ++k) {
    const Real t = t_hi * k / (points - 1);
    const Real a = f(t), b = g(t);
    if (is_finite(a) != is_finite(b)) return kInf;
    if (is_finite(a)) worst = std::max(worst, std::abs(a - b));
  }
  return worst;
}

Outcome c6() {
  std::mt19937_64 rng(106);
  struct Case {
    ProbMeasure mu;
    CostMatrix d;
    Real h;
  };
  std::vector<Case> cases;
  cases.push_back({ProbMeasure::uniform(2), CostMatrix::hamming(2), 1e-5});
  for (int i = 0; i < 3; ++i) cases.push_back({random_measure(rng, 2, 0.05), CostMatrix::hamming(2, 0.5 + i * 0.5), 1e-5});
  cases.push_back({ProbMeasure::uniform(3), CostMatrix::line(3), 1.0 / 2000});
  cases.push_back({random_measure(rng, 3, 0.05), CostMatrix::hamming(3), 1.0 / 2000});
  cases.push_back({random_measure(rng, 3, 0.05), random_euclidean(rng, 3), 1.0 / 2000});
  Real worst_j = 0.0, worst_reg = 0.0;
  for (const auto& c : cases) {
    const PotentialFamily fam = PotentialFamily::lipschitz_ball(c.d);
    const RateFunction alpha = best_alpha(fam, c.mu);
    const IncreasingFunction j = j_phi(fam, c.mu);
    const IncreasingFunction brute = best_transport_brute(c.mu, c.d, c.h);
    const RateFunction reg = convex_regularization(j);
    const Real t_hi = 0.9 * alpha.domain_end();
    worst_j = std::max(worst_j, sup_on([&](Real t) { return brute(t); }, [&](Real t) { return j(t); }, t_hi));
    worst_reg = std::max(worst_reg, sup_on([&](Real t) { return reg(t); }, [&](Real t) { return alpha(t); }, t_hi));
  }
  return {worst_j <= 2e-3 && worst_reg <= 2e-3,
          fmt("4 two-point cases (h = 1e-5), 3 three-point cases (h = 1/2000), t <= 0.9 t_max: sup |J - J_Phi| "
              "%.2e, sup |conv J_Phi - Lambda*| %.2e",
              worst_j, worst_reg)};
}

Outcome c7() {
  const ProbMeasure mu1(Vector{{0.3, 0.7}});
  const ProbMeasure mu2(Vector{{0.55, 0.45}});
  const CostMatrix h = CostMatrix::hamming(2);
  const RateFunction a1 = best_alpha(PotentialFamily::lipschitz_ball(h), mu1);
  const RateFunction a2 = best_alpha(PotentialFamily::lipschitz_ball(h), mu2);
  const ProductTciReport ok = verify_product_tci(mu1, mu2, h, h, a1, a2, 1.0 / 180.0);

  const RateFunction inflated = RateFunction::rescaled(a1, 3.0, 1.0);
  const ProductTciReport bad = verify_product_tci(mu1, mu2, h, h, inflated, a2, 1.0 / 40.0);
  bool witness = false;
  if (!bad.holds && bad.nu.size() == 4) {
    const ProbMeasure prod = product_measure(mu1, mu2);
    const Real t = TransportEvaluator(prod, tensor_cost(h, h))(bad.nu);
    witness = tensorize_alpha(inflated, a2)(t) > relative_entropy(ProbMeasure(bad.nu), prod);
  }
  return {ok.holds && ok.points >= 1e6 && !bad.holds && witness,
          fmt("%.0f product-simplex points, violations: %s (smallest slack H - alpha(T) %.2e); 3 x alpha_1 falsified with a verified "
              "witness: %s",
              ok.points, ok.holds ? "none" : "yes", ok.worst_slack, witness ? "yes" : "no")};
}

// max over a grid of <f, phi>_mu subject to int e^{|phi|} dmu <= 2, zooming
// in around the best cell; the last coordinate takes the largest allowed value
Real dual_norm_grid(const Vector& f, const ProbMeasure& mu, int steps, int rounds = 6) {
  const Index n = f.size();
  const Vector& w = mu.weights();
  const Vector af = f.cwiseAbs();
  Real best = 0.0;
  const auto value = [&](Real used, Real partial) {
    const Real room = (2.0 - used) / w[n - 1];
    return room < 1.0 ? -kInf : partial + w[n - 1] * af[n - 1] * std::log(room);
  };
  Real lo0 = 0.0, hi0 = std::log(2.0 / w[0]), lo1 = 0.0, hi1 = n == 3 ? std::log(2.0 / w[1]) : 0.0;
  for (int r = 0; r < rounds; ++r) {
    Real bp = lo0, bq = lo1;
    const int k_max = n == 3 ? steps : 0;
    for (int i = 0; i <= steps; ++i)
      for (int k = 0; k <= k_max; ++k) {
        const Real p = lo0 + (hi0 - lo0) * i / steps;
        const Real q = n == 3 ? lo1 + (hi1 - lo1) * k / steps : 0.0;
        const Real used = w[0] * std::exp(p) + (n == 3 ? w[1] * std::exp(q) : 0.0);
        const Real v = value(used, w[0] * af[0] * p + (n == 3 ? w[1] * af[1] * q : 0.0));
        if (v > best) best = v, bp = p, bq = q;
      }
    const Real r0 = 4.0 * (hi0 - lo0) / steps, r1 = 4.0 * (hi1 - lo1) / steps;
    lo0 = std::max(0.0, bp - r0), hi0 = bp + r0;
    lo1 = std::max(0.0, bq - r1), hi1 = bq + r1;
  }
  return best;
}

Outcome c8() {
  std::mt19937_64 rng(108);
  std::uniform_real_distribution<Real> u(0.0, 3.0);
  long viol_ckp = 0, viol_nei = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    const Index n = 1 + trial % 5;
    const ProbMeasure mu(random_simplex(rng, n)), nu(random_simplex(rng, n, 0.1));
    Vector chi(n);
    for (Index i = 0; i < n; ++i) chi[i] = u(rng);
    if (chi.maxCoeff() == 0.0) chi[0] = 1.0;
    const Real h = relative_entropy(nu, mu);
    if (alpha_weighted_ckp(chi, mu)(weighted_tv(nu, mu, chi)) > h + 1e-9) ++viol_ckp;
    if (alpha_orlicz_nei(mu)(orlicz_nei_target(nu, mu)) > h + 1e-9) ++viol_nei;
  }
  std::normal_distribution<Real> g(0.0, 1.0);
  Real worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + trial % 2;
    const ProbMeasure mu = random_measure(rng, n, 0.05);
    Vector f(n);
    for (Index i = 0; i < n; ++i) f[i] = g(rng);
    const Real v = orlicz_dual_norm(f, mu);
    const Real grid = dual_norm_grid(f, mu, n == 2 ? 2000 : 200);
    worst = std::max(worst, std::abs(v - grid) / std::max<Real>(1e-12, v));
    if (grid > v * (1.0 + 1e-10)) worst = kInf;
  }
  return {viol_ckp == 0 && viol_nei == 0 && worst <= 1e-6,
          fmt("1e5 (mu, nu, chi) with n <= 5: %ld weighted-CKP and %ld Orlicz-NEI violations; dual norm vs a zoomed "
              "grid oracle on 40 cases n <= 3, max relative gap %.2e",
              viol_ckp, viol_nei, worst)};
}

Outcome c9() {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<Real> u(0.0, 2.0);
  Real worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 1 + trial % 8;
    const ProbMeasure mu(random_simplex(rng, n, 0.15)), nu(random_simplex(rng, n, 0.15));
    Vector chi(n);
    for (Index i = 0; i < n; ++i) chi[i] = u(rng);
    const Real t = solve_ot(mu, nu, chi_metric(chi)).value;
    worst = std::max(worst, std::abs(t - weighted_tv(nu, mu, chi)));
  }
  return {worst <= 1e-8, fmt("1e3 triples n <= 8, max |T_{d_chi} - |chi (nu - mu)|_TV| %.2e", worst)};
}

Outcome c10() {
  std::mt19937_64 rng(110);
  std::normal_distribution<Real> g(0.0, 1.0);
  long violations = 0;
  Real worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 1 + trial % 6;
    const ProbMeasure mu = random_measure(rng, n);
    Vector z(n);
    for (Index i = 0; i < n; ++i) z[i] = (trial % 3 ? 1.0 : 10.0) * g(rng);
    for (Real delta : {0.25, 0.5, 0.9}) {
      const Real m = cramer_moment(z, mu, delta);
      const Real bound = (1.0 + delta) / (1.0 - delta);
      worst = std::max(worst, m / bound);
      if (!cramer_moment_check(z, mu, delta) || m > bound * (1.0 + 1e-12)) ++violations;
    }
  }
  return {violations == 0,
          fmt("1e3 random Z x delta in {0.25, 0.5, 0.9}: %ld violations, largest E e^{delta h(Z)} / bound %.4f",
              violations, worst)};
}

Outcome c11() {
  std::mt19937_64 rng(111);
  long cells = 0;
  int spaces = 0;
  bool ok = true;
  Real worst = kInf;
  const auto run = [&](const ProbMeasure& mu, const CostMatrix& d) {
    const RateFunction alpha = best_alpha(PotentialFamily::lipschitz_ball(d), mu);
    const MartonReport r = marton_bound_check(mu, d, alpha, 100);
    ok = ok && r.holds;
    worst = std::min(worst, r.worst_slack);
    cells += r.cells;
    ++spaces;
  };
  for (Index n = 2; n <= 12; n += 2) {
    run(ProbMeasure::uniform(n), CostMatrix::hamming(n));
    run(random_measure(rng, n, 0.05), CostMatrix::hamming(n));
    run(random_measure(rng, n, 0.05), CostMatrix::line(n));
  }
  for (Index n = 3; n <= 7; ++n) run(random_measure(rng, n, 0.05), random_euclidean(rng, n));
  return {ok, fmt("%d spaces n <= 12 (Hamming, line, Euclidean), all subsets x 100 radii, %ld (A, r) cells, "
                  "smallest slack %.2e",
                  spaces, cells, worst)};
}

Outcome c12() {
  const ProbMeasure mu = ProbMeasure::uniform(2);
  const CostMatrix h = CostMatrix::hamming(2);
  const PotentialFamily lip = PotentialFamily::lipschitz_ball(h);
  ExperimentConfig cfg;
  cfg.seed = 20240601;
  cfg.replicas = 100000;
  cfg.sample_sizes = {10, 50, 200};
  cfg.t_grid.clear();
  for (int k = 0; k <= 9; ++k) cfg.t_grid.push_back(0.05 * k);
  const auto t0 = std::chrono::steady_clock::now();
  const TailReport rep = deviation_tail(cfg, mu, best_alpha(lip, mu), h, &lip);
  const Real secs = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  long failed = 0;
  for (const auto& c : rep.cells) failed += c.pass ? 0 : 1;
  return {failed == 0 && secs < 180.0,
          fmt("seed %llu, N = 1e5, n in {10, 50, 200}, t in {0, 0.05, ..., 0.45}: %zu cells, %ld failing, %.1f s",
              static_cast<unsigned long long>(cfg.seed), rep.cells.size(), failed, secs)};
}

Outcome c13() {
  // (sqrt(1+u) - 1)^2 >= u^2 / (2 (2 + u)) on a log grid of u
  long viol1 = 0;
  for (int k = 0; k <= 2000; ++k) {
    const Real u = std::pow(10.0, -8.0 + 11.0 * k / 2000.0);
    const Real r = u / (std::sqrt(1.0 + u) + 1.0);
    if (r * r < u * u / (2.0 * (2.0 + u)) * (1.0 - 1e-12)) ++viol1;
  }
  std::mt19937_64 rng(113);
  std::normal_distribution<Real> g(0.0, 1.0);
  long viol2 = 0, viol_order = 0, mc_fail = 0;
  Real ratio = 0.0;
  ExperimentConfig cfg;
  cfg.seed = 113;
  cfg.replicas = 2000;
  cfg.sample_sizes = {20, 100};
  cfg.t_grid = {0.0, 0.1, 0.3, 0.6, 1.0};
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 5, q = 1 + trial % 3;
    Matrix x(n, q);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < q; ++j) x(i, j) = (1.0 + trial % 4) * g(rng);
    const ProbMeasure mu = random_measure(rng, n);
    const Real m = orlicz_norm_pair(CostMatrix::euclidean(x), mu).value;
    const Real m0 = orlicz_norm(x.rowwise().norm(), mu).value;
    ratio = std::max(ratio, m / m0);
    if (m > 2.0 * m0 * (1.0 + 1e-9)) ++viol2;
    for (int k = 0; k <= 400; ++k) {
      const Real t = m0 * std::pow(10.0, -4.0 + 8.0 * k / 400.0);
      const Real r = (t / m) / (std::sqrt(1.0 + t / m) + 1.0);
      if (r * r < t * t / (8.0 * (2.0 * m0 * m0 + t * m0)) * (1.0 - 1e-12)) ++viol_order;
    }
    const TailReport rep = banach_mean_deviation(cfg, mu, x);
    if (!rep.all_pass() || !rep.ordering_holds) ++mc_fail;
  }
  return {viol1 == 0 && viol2 == 0 && viol_order == 0 && mc_fail == 0,
          fmt("(sqrt(1+u)-1)^2 >= u^2/(2(2+u)) on 2001 log-spaced u: %ld violations; 20 R^q measures: M <= 2 M0 violations %ld (max "
              "M/M0 %.3f), Yur-like exponent below Yurinskii's at %ld grid points, Monte Carlo cells failing or "
              "out of order in %ld measures",
              viol1, viol2, ratio, viol_order, mc_fail)};
}

Outcome c14() {
  std::mt19937_64 rng(114);
  long violations = 0, points = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 3;
    const ProbMeasure mu = random_measure(rng, n);
    const CostMatrix d = trial % 3 == 0 ? CostMatrix::hamming(n) : trial % 3 == 1 ? CostMatrix::line(n)
                                                                                  : random_euclidean(rng, n);
    const PotentialFamily fam = PotentialFamily::lipschitz_ball(d);
    const RateFunction alpha = best_alpha(fam, mu);
    // a non-constant member
    Index pick = static_cast<Index>(rng() % static_cast<std::size_t>(fam.size()));
    while (fam.members()[pick].phi.maxCoeff() - fam.members()[pick].phi.minCoeff() < 1e-9) pick = (pick + 1) % fam.size();
    const QuadraticCap cap = quadratic_cap(fam.members()[pick].phi, mu);
    for (int k = 0; k <= 500; ++k, ++points) {
      const Real t = cap.t_limit() * k / 500.0;
      if (alpha(t) > cap(t) + 1e-9) ++violations;
    }
  }
  return {violations == 0, fmt("20 random mu on 2-4 points, %ld points on [0, s1 sigma1^2]: %ld violations", points,
                               violations)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"C1 Kantorovich duality", c1},      {"C2 Kantorovich-Rubinstein", c2},
      {"C3 Pinsker", c3},                  {"C4 class-C calculus", c4},
      {"C5 Bobkov-Gotze equivalence", c5}, {"C6 best-function identity", c6},
      {"C7 tensorization", c7},            {"C8 weighted CKP and Orlicz NEI", c8},
      {"C9 chi-metric identity", c9},      {"C10 Cramer moment bound", c10},
      {"C11 Marton concentration", c11},   {"C12 Monte Carlo deviation", c12},
      {"C13 Yurinskii comparison", c13},   {"C14 quadratic cap", c14}};
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) only.insert(argv[i]);
  int failed = 0;
  for (const auto& [name, run] : all) {
    const std::string id = name.substr(0, name.find(' '));
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const Real secs = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
