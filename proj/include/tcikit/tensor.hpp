#pragma once

#include "tcikit/duality.hpp"
#include "tcikit/measures.hpp"
#include "tcikit/ratefn.hpp"

#include <vector>

namespace tcikit {

/// alpha1 box alpha2, the transportation function of the product TCI.
RateFunction tensorize_alpha(const RateFunction& alpha1, const RateFunction& alpha2);
/// t -> n alpha(t / n)
RateFunction tensorize_n(const RateFunction& alpha, int n);

struct ProductTciReport {
  bool holds = true;
  /// min over the grid of H(nu | mu1 x mu2) - (alpha1 box alpha2)(T(nu))
  Real worst_slack = kInf;
  Vector nu;
  double points = 0;
};

/// Sweeps the product simplex lattice with T = T_{C1 (+) C2}(mu1 x mu2, .).
ProductTciReport verify_product_tci(const ProbMeasure& mu1, const ProbMeasure& mu2, const CostMatrix& c1,
                                    const CostMatrix& c2, const RateFunction& alpha1, const RateFunction& alpha2,
                                    Real h, Real tol = 1e-9, double budget = 5e7);

struct DimensionFreeReport {
  bool dirac = false;
  /// Dirac mu: T(mu, nu) < inf forces nu = mu, so every alpha in C works
  bool every_alpha_admissible = false;
  /// best_alpha over the Lipschitz ball vanishes on the t-grid
  bool alpha_zero = false;
  std::vector<Real> t;
  std::vector<Real> slope;  // best_alpha(t) / t
  /// every slope below slope_tol: no nonzero linear transportation function
  bool vanishing_slope = false;
};

DimensionFreeReport dimension_free_diagnostic(const ProbMeasure& mu, const CostMatrix& d,
                                              const std::vector<Real>& t_grid = {1e-3, 1e-2},
                                              Real slope_tol = 0.05);

}  // namespace tcikit
