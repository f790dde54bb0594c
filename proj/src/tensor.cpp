#include "tcikit/tensor.hpp"

#include "tcikit/transport.hpp"

#include <stdexcept>

namespace tcikit {

RateFunction tensorize_alpha(const RateFunction& alpha1, const RateFunction& alpha2) {
  return inf_convolution(alpha1, alpha2);
}

RateFunction tensorize_n(const RateFunction& alpha, int n) {
  if (n < 1) throw std::invalid_argument("tensorize_n: n must be at least 1");
  if (n == 1) return alpha;
  return RateFunction::rescaled(alpha, static_cast<Real>(n), 1.0 / n);
}

ProductTciReport verify_product_tci(const ProbMeasure& mu1, const ProbMeasure& mu2, const CostMatrix& c1,
                                    const CostMatrix& c2, const RateFunction& alpha1, const RateFunction& alpha2,
                                    Real h, Real tol, double budget) {
  if (c1.rows() != mu1.size() || c2.rows() != mu2.size()) throw DimensionMismatch("verify_product_tci: sizes");
  const ProbMeasure mu = product_measure(mu1, mu2);
  const CostMatrix c = tensor_cost(c1, c2);
  const RateFunction alpha = tensorize_alpha(alpha1, alpha2);
  const TransportEvaluator eval(mu, c);
  const Vector& w = mu.weights();
  ProductTciReport rep;
  rep.nu = w;
  for_each_simplex_point(
      SimplexGrid::with_step(mu.size(), h),
      [&](const Vector& nu) {
        rep.points += 1;
        Real hh = 0.0;
        for (Index i = 0; i < nu.size(); ++i) {
          if (nu[i] <= 0.0) continue;
          if (w[i] <= 0.0) return;
          hh += nu[i] * std::log(nu[i] / w[i]);
        }
        const Real gap = std::max(hh, 0.0) - alpha(std::max(0.0, eval(nu)));
        if (gap < rep.worst_slack) {
          rep.worst_slack = gap;
          rep.nu = nu;
        }
      },
      budget);
  rep.holds = !(rep.worst_slack < -tol);
  return rep;
}

DimensionFreeReport dimension_free_diagnostic(const ProbMeasure& mu, const CostMatrix& d,
                                              const std::vector<Real>& t_grid, Real slope_tol) {
  if (!d.is_metric()) throw std::invalid_argument("dimension_free_diagnostic: needs a metric");
  DimensionFreeReport rep;
  rep.dirac = mu.is_dirac();
  rep.every_alpha_admissible = rep.dirac;
  const RateFunction alpha = best_alpha(PotentialFamily::lipschitz_ball(d), mu);
  rep.alpha_zero = true;
  rep.vanishing_slope = true;
  for (Real t : t_grid) {
    const Real a = alpha(t);
    rep.alpha_zero = rep.alpha_zero && a == 0.0;
    rep.t.push_back(t);
    rep.slope.push_back(a / t);
    rep.vanishing_slope = rep.vanishing_slope && a / t < slope_tol;
  }
  return rep;
}

}  // namespace tcikit
