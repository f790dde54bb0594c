#include "doctest.h"

#include "tcikit/tensor.hpp"

#include <cmath>
#include <random>

using namespace tcikit;

namespace {

ProbMeasure random_measure(std::mt19937_64& rng, Index n, Real floor = 0.05) {
  std::uniform_real_distribution<Real> u(floor, 1.0);
  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = u(rng);
  return ProbMeasure(w / w.sum());
}

// inf_{0 <= u <= t} f(u) + g(t - u) by a dense scan
template <class F, class G>
Real scan_infconv(const F& f, const G& g, Real t, int points = 20000) {
  Real best = kInf;
  for (int k = 0; k <= points; ++k) {
    const Real u = t * k / points;
    best = std::min(best, f(u) + g(t - u));
  }
  return best;
}

}  // namespace

TEST_CASE("tensorize_alpha examples") {
  const RateFunction q = RateFunction::quadratic(1.0);
  const RateFunction z = tensorize_alpha(q, RateFunction::zero());
  for (Real t : {0.0, 0.3, 1.0, 5.0}) CHECK(z(t) == doctest::Approx(0.0).epsilon(1e-12));

  const RateFunction qq = tensorize_alpha(RateFunction::quadratic(3.0), RateFunction::quadratic(3.0));
  for (Real t : {0.1, 0.7, 2.0}) CHECK(qq(t) == doctest::Approx(1.5 * t * t).epsilon(1e-6));

  const RateFunction pp = tensorize_alpha(RateFunction::pinsker(), RateFunction::pinsker());
  CHECK(pp(2.0) == doctest::Approx(1.0).epsilon(1e-6));

  // unequal factors against a scan
  const RateFunction a = RateFunction::sqrt_form(0.7);
  const RateFunction b = RateFunction::quadratic(0.4);
  const RateFunction ab = tensorize_alpha(a, b);
  for (Real t : {0.05, 0.5, 1.5, 4.0}) {
    const Real ref = scan_infconv(a, b, t);
    CHECK(ab(t) <= ref + 1e-9);
    CHECK(ab(t) == doctest::Approx(ref).epsilon(1e-5));
  }
}

TEST_CASE("tensorize_alpha conjugate is additive") {
  const RateFunction a = RateFunction::sqrt_form(0.5);
  const RateFunction b = RateFunction::quadratic(2.0);
  const RateFunction lhs = monotone_conjugate(tensorize_alpha(a, b));
  const RateFunction ca = monotone_conjugate(a);
  const RateFunction cb = monotone_conjugate(b);
  for (Real s : {0.0, 0.1, 0.4, 0.9, 1.5}) CHECK(lhs(s) == doctest::Approx(ca(s) + cb(s)).epsilon(1e-4));
}

TEST_CASE("tensorize_n") {
  CHECK_THROWS_AS(tensorize_n(RateFunction::pinsker(), 0), std::invalid_argument);
  const RateFunction lin = tensorize_n(RateFunction::linear(2.5), 7);
  for (Real t : {0.0, 0.4, 3.0}) CHECK(lin(t) == doctest::Approx(2.5 * t));
  const RateFunction q = tensorize_n(RateFunction::quadratic(2.0), 4);
  for (Real t : {0.2, 1.0, 6.0}) CHECK(q(t) == doctest::Approx(0.5 * t * t));
  const RateFunction a = RateFunction::sqrt_form(0.3);
  for (int n : {1, 2, 5, 10}) {
    const RateFunction an = tensorize_n(a, n);
    for (Real t : {0.01, 0.2, 1.3}) CHECK(an(n * t) == doctest::Approx(n * a(t)));
  }
}

TEST_CASE("transport of product measures is subadditive") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n1 = 2 + static_cast<Index>(rng() % 2), n2 = 2 + static_cast<Index>(rng() % 3);
    const ProbMeasure mu1 = random_measure(rng, n1), mu2 = random_measure(rng, n2);
    const ProbMeasure nu1 = random_measure(rng, n1), nu2 = random_measure(rng, n2);
    const CostMatrix c1 = rep % 2 ? CostMatrix::line(n1) : CostMatrix::hamming(n1);
    const CostMatrix c2 = CostMatrix::power(CostMatrix::line(n2), 1.0 + (rep % 3));
    const Real joint =
        solve_ot(product_measure(mu1, mu2), product_measure(nu1, nu2), tensor_cost(c1, c2)).value;
    const Real split = solve_ot(mu1, nu1, c1).value + solve_ot(mu2, nu2, c2).value;
    CHECK(joint <= split + 1e-9);
  }
}

TEST_CASE("verify_product_tci on Hamming factors") {
  const ProbMeasure mu1(Vector{{0.3, 0.7}});
  const ProbMeasure mu2(Vector{{0.55, 0.45}});
  const CostMatrix h = CostMatrix::hamming(2);
  const RateFunction a1 = best_alpha(PotentialFamily::lipschitz_ball(h), mu1);
  const RateFunction a2 = best_alpha(PotentialFamily::lipschitz_ball(h), mu2);

  const Real step = 1.0 / 180.0;
  const ProductTciReport ok = verify_product_tci(mu1, mu2, h, h, a1, a2, step);
  CHECK(ok.points >= 1e6);
  CHECK(ok.holds);
  CHECK(ok.worst_slack >= -1e-9);

  const RateFunction inflated = RateFunction::rescaled(a1, 3.0, 1.0);
  const ProductTciReport bad = verify_product_tci(mu1, mu2, h, h, inflated, a2, 1.0 / 40.0);
  CHECK_FALSE(bad.holds);
  REQUIRE(bad.nu.size() == 4);
  // the witness really violates the inequality
  const Real t = TransportEvaluator(product_measure(mu1, mu2), tensor_cost(h, h))(bad.nu);
  const Real hh = relative_entropy(ProbMeasure(bad.nu), product_measure(mu1, mu2));
  CHECK(tensorize_alpha(inflated, a2)(t) > hh + 1e-6);

  CHECK_THROWS(verify_product_tci(mu1, ProbMeasure::uniform(3), h, h, a1, a2, 0.1));
}

TEST_CASE("dimension_free_diagnostic") {
  const CostMatrix d = CostMatrix::line(3);
  const DimensionFreeReport dirac = dimension_free_diagnostic(ProbMeasure::dirac(3, 1), d);
  CHECK(dirac.dirac);
  CHECK(dirac.every_alpha_admissible);
  // best_alpha is the indicator of {0}
  CHECK_FALSE(dirac.alpha_zero);
  CHECK_FALSE(is_finite(dirac.slope[0]));

  const ProbMeasure mu(Vector{{0.2, 0.5, 0.3}});
  const DimensionFreeReport rep = dimension_free_diagnostic(mu, d);
  CHECK_FALSE(rep.dirac);
  CHECK_FALSE(rep.every_alpha_admissible);
  CHECK_FALSE(rep.alpha_zero);
  CHECK(rep.vanishing_slope);
  REQUIRE(rep.slope.size() == 2);
  CHECK(rep.slope[0] < rep.slope[1]);

  // a linear transportation function fails near 0
  const PrimalReport lin = primal_check(RateFunction::linear(1.0), mu, d, 1e-2);
  CHECK_FALSE(lin.holds_a);
}

TEST_CASE("dimension_free_diagnostic on the uniform two-point space") {
  const DimensionFreeReport rep = dimension_free_diagnostic(ProbMeasure::uniform(2), CostMatrix::hamming(2));
  CHECK(rep.vanishing_slope);
  // Lambda = log cosh(s / 2), so alpha(t) ~ 2 t^2 near 0
  CHECK(rep.slope[0] == doctest::Approx(2e-3).epsilon(1e-2));
  CHECK(rep.slope[1] == doctest::Approx(2e-2).epsilon(1e-2));
}
