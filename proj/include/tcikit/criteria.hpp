#pragma once

#include "tcikit/duality.hpp"
#include "tcikit/measures.hpp"
#include "tcikit/ratefn.hpp"

#include <vector>

namespace tcikit {

/// Orlicz norm for rho(s) = e^|s| - 1, with the integral at the returned b.
struct OrliczEstimate {
  Real value = 0.0;
  /// sum mu e^{|phi| / value} (2 up to the bisection tolerance; 1 when value = 0)
  Real certificate = 1.0;
};

/// inf{ b > 0 : sum_i mu_i e^{|phi_i| / b} <= 2 }
OrliczEstimate orlicz_norm(const Vector& phi, const ProbMeasure& mu);
/// inf{ b > 0 : sum_ij mu_i mu_j e^{d_ij / b} <= 2 }
OrliczEstimate orlicz_norm_pair(const CostMatrix& d, const ProbMeasure& mu);
/// sup{ sum mu_i f_i phi_i : sum mu_i e^{|phi_i|} <= 2 }. At the multiplier
/// lambda the maximizer is phi_i = sign(f_i) max(0, log(|f_i| / lambda)).
Real orlicz_dual_norm(const Vector& f, const ProbMeasure& mu);

/// Lambda_phi(s) <= |phi|^2 s^2 / (1 - |phi| s) on a grid of [0, 1/|phi|),
/// with Lambda_phi the log-Laplace transform of the centered phi.
bool bernstein_bound_check(const Vector& phi, const ProbMeasure& mu, int grid = 2000);

/// (sqrt(t / |chi|_rho + 1) - 1)^2 for ||chi (nu - mu)||_TV.
RateFunction alpha_weighted_ckp(const Vector& chi, const ProbMeasure& mu);
/// (sqrt(t + 1) - 1)^2 for ||dnu/dmu - 1||^*_rho.
RateFunction alpha_orlicz_nei(const ProbMeasure& mu);
/// ||dnu/dmu - 1||^*_rho; infinite unless nu << mu.
Real orlicz_nei_target(const ProbMeasure& nu, const ProbMeasure& mu);
/// (sqrt(t / |d|_{rho, mu x mu} + 1) - 1)^2 for the dual Lipschitz norm.
RateFunction alpha_lipschitz_orlicz(const CostMatrix& d, const ProbMeasure& mu);

/// max((sqrt(a t + 1) - 1)^2, 2 gamma(t / 2) - 2 log B), B = sum mu e^{gamma(d(x1, .))}.
/// Throws std::invalid_argument unless sum mu e^{a d(x_o, .)} <= 2 for some x_o.
RateFunction alpha_t1_integral(const CostMatrix& d, const ProbMeasure& mu, Real a, const RateFunction& gamma,
                               Index x1);
/// max(0, 2 gamma(2^-p t) - 2 log B), B = sum mu e^{gamma(d(x_o, .)^p)}; for c = d^p.
RateFunction alpha_dp(const CostMatrix& d, Real p, const ProbMeasure& mu, const RateFunction& gamma, Index x_o);
/// 2 max(0, 2 gamma(t / 4) - gamma(chi(x_o)) - log B), B = sum mu e^{gamma(chi)}; for c <= chi (+) chi.
RateFunction alpha_chi_envelope(const Vector& chi, const ProbMeasure& mu, const RateFunction& gamma, Index x_o);
/// (sqrt(t / |chi|_rho + 1) - 1)^2 for c <= chi (+) chi.
RateFunction alpha_small_t(const Vector& chi, const ProbMeasure& mu);
/// max(0, beta(t) - log A), A = sum_y mu_y exp beta(sum_x mu_x C(x, y)).
RateFunction alpha_moment(const CostMatrix& c, const ProbMeasure& mu, const RateFunction& beta);

struct NecessityReport {
  /// sum_x mu_x exp(u alpha(2^-p d(x_o, x)^p)) for every base point x_o.
  std::vector<Real> integrals;
  Real delta = 0.0;
  Real bound = 1.0;  // (1 + delta) / (1 - delta)
  /// max over members of sum mu exp(delta alpha((phi + <psi, mu>)_+))
  Real family_max = 1.0;
  Index worst_member = 0;
  bool family_holds = true;
};

/// Records the integrals of the necessity statements and checks the
/// exponential-moment bound over the family with delta = u / 2. Without a
/// family, the Lipschitz ball of d is used for p = 1 and the Q^c family of d^p
/// otherwise.
NecessityReport necessity_check(const RateFunction& alpha, const CostMatrix& d, Real p, const ProbMeasure& mu,
                                Real u, const PotentialFamily* family = nullptr);

/// Two-sided Cramer transform h of Z = z under mu at the atoms; exact up to
/// root-finding tolerance.
std::vector<Real> cramer_at_atoms(const Vector& z, const ProbMeasure& mu);
/// sum mu_i e^{delta h(z_i)} <= (1 + delta) / (1 - delta) + 1e-9
bool cramer_moment_check(const Vector& z, const ProbMeasure& mu, Real delta);
Real cramer_moment(const Vector& z, const ProbMeasure& mu, Real delta);

}  // namespace tcikit
