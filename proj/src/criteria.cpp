#include "tcikit/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tcikit {

namespace {

// log sum w_k e^{x_k / b}
Real log_integral(const std::vector<Real>& x, const std::vector<Real>& w, Real b) {
  Real top = -kInf;
  for (Real v : x) top = std::max(top, v / b);
  Real s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * std::exp(x[k] / b - top);
  return top + std::log(s);
}

OrliczEstimate orlicz_weighted(const std::vector<Real>& x, const std::vector<Real>& w) {
  Real m = 0.0;
  for (Real v : x) m = std::max(m, v);
  if (m == 0.0) return {0.0, 1.0};
  const Real log2 = std::log(2.0);
  // e^{|phi| / b} <= e^{m / b}, so b = m / log 2 already satisfies the constraint
  Real hi = m / log2;
  Real lo = 0.5 * hi;
  while (log_integral(x, w, lo) <= log2) {
    hi = lo;
    lo *= 0.5;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const Real mid = std::sqrt(lo * hi);
    (log_integral(x, w, mid) <= log2 ? hi : lo) = mid;
  }
  return {hi, std::exp(log_integral(x, w, hi))};
}

RateFunction sqrt_or_zero(Real m) {
  if (!(m > 0.0)) throw std::invalid_argument("Orlicz norm vanishes; the weight is 0 mu-a.e.");
  return RateFunction::sqrt_form(m);
}

Real log_sum_exp_weighted(const Vector& z, const ProbMeasure& mu, Real s) {
  Real top = -kInf;
  for (Index i = 0; i < z.size(); ++i)
    if (mu[i] > 0.0) top = std::max(top, s * z[i]);
  Real acc = 0.0;
  for (Index i = 0; i < z.size(); ++i)
    if (mu[i] > 0.0) acc += mu[i] * std::exp(s * z[i] - top);
  return top + std::log(acc);
}

// Lambda'(s) for the uncentered z
Real lambda_prime(const Vector& z, const ProbMeasure& mu, Real s) {
  Real top = -kInf;
  for (Index i = 0; i < z.size(); ++i)
    if (mu[i] > 0.0) top = std::max(top, s * z[i]);
  Real num = 0.0, den = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    if (mu[i] <= 0.0) continue;
    const Real w = mu[i] * std::exp(s * z[i] - top);
    num += w * z[i];
    den += w;
  }
  return num / den;
}

}  // namespace

OrliczEstimate orlicz_norm(const Vector& phi, const ProbMeasure& mu) {
  if (phi.size() != mu.size()) throw DimensionMismatch("orlicz_norm: sizes differ");
  std::vector<Real> x, w;
  for (Index i = 0; i < phi.size(); ++i)
    if (mu[i] > 0.0) {
      x.push_back(std::abs(phi[i]));
      w.push_back(mu[i]);
    }
  return orlicz_weighted(x, w);
}

OrliczEstimate orlicz_norm_pair(const CostMatrix& d, const ProbMeasure& mu) {
  if (!d.is_metric()) throw std::invalid_argument("orlicz_norm_pair: needs a metric");
  if (d.rows() != mu.size()) throw DimensionMismatch("orlicz_norm_pair: sizes differ");
  std::vector<Real> x, w;
  for (Index i = 0; i < mu.size(); ++i)
    for (Index j = 0; j < mu.size(); ++j)
      if (mu[i] > 0.0 && mu[j] > 0.0) {
        x.push_back(d(i, j));
        w.push_back(mu[i] * mu[j]);
      }
  return orlicz_weighted(x, w);
}

Real orlicz_dual_norm(const Vector& f, const ProbMeasure& mu) {
  if (f.size() != mu.size()) throw DimensionMismatch("orlicz_dual_norm: sizes differ");
  std::vector<std::pair<Real, Real>> atoms;  // (|f|, mu)
  for (Index i = 0; i < f.size(); ++i)
    if (mu[i] > 0.0) atoms.emplace_back(std::abs(f[i]), mu[i]);
  std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (atoms.empty() || atoms.front().first == 0.0) return 0.0;
  // With S the atoms above lambda the constraint reads
  // sum_S mu |f| / lambda + mu(S^c) = 2.
  Real mass_in = 0.0, weighted = 0.0;
  Real lambda = 0.0;
  std::size_t k = 0;
  while (k < atoms.size()) {
    mass_in += atoms[k].second;
    weighted += atoms[k].second * atoms[k].first;
    ++k;
    lambda = weighted / (2.0 - (1.0 - mass_in));
    const Real next = k < atoms.size() ? atoms[k].first : 0.0;
    if (lambda >= next) break;
  }
  Real value = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    if (atoms[i].first > lambda) value += atoms[i].second * atoms[i].first * std::log(atoms[i].first / lambda);
  return value;
}

bool bernstein_bound_check(const Vector& phi, const ProbMeasure& mu, int grid) {
  const Real b = orlicz_norm(phi, mu).value;
  if (b == 0.0) return true;
  for (int k = 0; k < grid; ++k) {
    const Real s = static_cast<Real>(k) / (grid * b);
    const Real lam = log_laplace(phi, -phi, mu, s);
    const Real bound = b * b * s * s / (1.0 - b * s);
    if (lam > bound + 1e-9) return false;
  }
  return true;
}

RateFunction alpha_weighted_ckp(const Vector& chi, const ProbMeasure& mu) {
  if ((chi.array() < 0.0).any()) throw std::invalid_argument("alpha_weighted_ckp: chi must be nonnegative");
  return sqrt_or_zero(orlicz_norm(chi, mu).value);
}

RateFunction alpha_orlicz_nei(const ProbMeasure&) { return RateFunction::sqrt_form(1.0); }

Real orlicz_nei_target(const ProbMeasure& nu, const ProbMeasure& mu) {
  if (nu.size() != mu.size()) throw DimensionMismatch("orlicz_nei_target: sizes differ");
  Vector f(mu.size());
  for (Index i = 0; i < mu.size(); ++i) {
    if (mu[i] > 0.0)
      f[i] = nu[i] / mu[i] - 1.0;
    else if (nu[i] > 0.0)
      return kInf;
    else
      f[i] = 0.0;
  }
  return orlicz_dual_norm(f, mu);
}

RateFunction alpha_lipschitz_orlicz(const CostMatrix& d, const ProbMeasure& mu) {
  return sqrt_or_zero(orlicz_norm_pair(d, mu).value);
}

RateFunction alpha_t1_integral(const CostMatrix& d, const ProbMeasure& mu, Real a, const RateFunction& gamma,
                               Index x1) {
  if (!d.is_metric()) throw std::invalid_argument("alpha_t1_integral: needs a metric");
  if (!(a >= 0.0)) throw std::invalid_argument("alpha_t1_integral: a must be nonnegative");
  const Index n = mu.size();
  if (d.rows() != n || x1 < 0 || x1 >= n) throw DimensionMismatch("alpha_t1_integral: sizes differ");
  RateFunction small = RateFunction::zero();
  if (a > 0.0) {
    Real best = kInf;
    for (Index xo = 0; xo < n; ++xo) {
      Real s = 0.0;
      for (Index i = 0; i < n; ++i) s += mu[i] * std::exp(a * d(xo, i));
      best = std::min(best, s);
    }
    if (best > 2.0 + 1e-12)
      throw std::invalid_argument("alpha_t1_integral: sum mu e^{a d(x_o, .)} exceeds 2 at every base point");
    small = RateFunction::sqrt_form(1.0 / a);
  }
  Real b = 0.0;
  for (Index i = 0; i < n; ++i) b += mu[i] * std::exp(gamma(d(x1, i)));
  const RateFunction large = RateFunction::rescaled(gamma, 2.0, 0.5, 2.0 * std::log(b));
  return pointwise_max(small, large);
}

RateFunction alpha_dp(const CostMatrix& d, Real p, const ProbMeasure& mu, const RateFunction& gamma, Index x_o) {
  if (!(p >= 1.0)) throw std::invalid_argument("alpha_dp: p must be at least 1");
  if (!d.is_metric()) throw std::invalid_argument("alpha_dp: needs a metric");
  const Index n = mu.size();
  if (d.rows() != n || x_o < 0 || x_o >= n) throw DimensionMismatch("alpha_dp: sizes differ");
  Real b = 0.0;
  for (Index i = 0; i < n; ++i) b += mu[i] * std::exp(gamma(std::pow(d(x_o, i), p)));
  return RateFunction::rescaled(gamma, 2.0, std::pow(2.0, -p), 2.0 * std::log(b));
}

RateFunction alpha_chi_envelope(const Vector& chi, const ProbMeasure& mu, const RateFunction& gamma, Index x_o) {
  if ((chi.array() < 0.0).any()) throw std::invalid_argument("alpha_chi_envelope: chi must be nonnegative");
  const Index n = mu.size();
  if (chi.size() != n || x_o < 0 || x_o >= n) throw DimensionMismatch("alpha_chi_envelope: sizes differ");
  Real b = 0.0;
  for (Index i = 0; i < n; ++i) b += mu[i] * std::exp(gamma(chi[i]));
  return RateFunction::rescaled(gamma, 4.0, 0.25, 2.0 * gamma(chi[x_o]) + 2.0 * std::log(b));
}

RateFunction alpha_small_t(const Vector& chi, const ProbMeasure& mu) { return alpha_weighted_ckp(chi, mu); }

RateFunction alpha_moment(const CostMatrix& c, const ProbMeasure& mu, const RateFunction& beta) {
  const Index n = mu.size();
  if (c.rows() != n || c.cols() != n) throw DimensionMismatch("alpha_moment: sizes differ");
  // T_c(mu, nu) <= <c_mu, nu> with c_mu(y) = sum_x mu_x c(x, y)
  const Vector c_mu = c.matrix().transpose() * mu.weights();
  Real a = 0.0;
  for (Index y = 0; y < n; ++y)
    if (mu[y] > 0.0) a += mu[y] * std::exp(beta(c_mu[y]));
  return RateFunction::rescaled(beta, 1.0, 1.0, std::log(a));
}

NecessityReport necessity_check(const RateFunction& alpha, const CostMatrix& d, Real p, const ProbMeasure& mu,
                                Real u, const PotentialFamily* family) {
  if (!(u >= 0.0 && u < 2.0)) throw std::invalid_argument("necessity_check: u must lie in [0, 2)");
  if (!(p >= 1.0)) throw std::invalid_argument("necessity_check: p must be at least 1");
  const Index n = mu.size();
  if (d.rows() != n) throw DimensionMismatch("necessity_check: sizes differ");
  NecessityReport rep;
  for (Index xo = 0; xo < n; ++xo) {
    Real s = 0.0;
    for (Index i = 0; i < n; ++i)
      if (mu[i] > 0.0) s += mu[i] * std::exp(u * alpha(std::pow(2.0, -p) * std::pow(d(xo, i), p)));
    rep.integrals.push_back(s);
  }
  rep.delta = 0.5 * u;
  rep.bound = (1.0 + rep.delta) / (1.0 - rep.delta);
  std::optional<PotentialFamily> own;
  if (family == nullptr) {
    own = p == 1.0 ? PotentialFamily::lipschitz_ball(d) : PotentialFamily::from_cost(CostMatrix::power(d, p), mu);
    family = &*own;
  }
  rep.family_max = -kInf;
  for (Index m = 0; m < family->size(); ++m) {
    const Vector z = member_variable(family->members()[m], mu);
    Real s = 0.0;
    for (Index i = 0; i < n; ++i)
      if (mu[i] > 0.0) s += mu[i] * std::exp(rep.delta * alpha(std::max(0.0, z[i])));
    if (s > rep.family_max) {
      rep.family_max = s;
      rep.worst_member = m;
    }
  }
  rep.family_holds = !(rep.family_max > rep.bound + 1e-9);
  return rep;
}

std::vector<Real> cramer_at_atoms(const Vector& z, const ProbMeasure& mu) {
  if (z.size() != mu.size()) throw DimensionMismatch("cramer_at_atoms: sizes differ");
  Real zmax = -kInf, zmin = kInf;
  for (Index i = 0; i < z.size(); ++i)
    if (mu[i] > 0.0) {
      zmax = std::max(zmax, z[i]);
      zmin = std::min(zmin, z[i]);
    }
  Real p_top = 0.0, p_bottom = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    if (mu[i] <= 0.0) continue;
    if (z[i] == zmax) p_top += mu[i];
    if (z[i] == zmin) p_bottom += mu[i];
  }
  std::vector<Real> h(static_cast<std::size_t>(z.size()), kInf);
  for (Index i = 0; i < z.size(); ++i) {
    const Real x = z[i];
    if (x > zmax || x < zmin) continue;
    if (zmax == zmin) {
      h[static_cast<std::size_t>(i)] = 0.0;
    } else if (x == zmax) {
      h[static_cast<std::size_t>(i)] = -std::log(p_top);
    } else if (x == zmin) {
      h[static_cast<std::size_t>(i)] = -std::log(p_bottom);
    } else {
      // Lambda'(s) = x
      Real lo = -1.0, hi = 1.0;
      while (lambda_prime(z, mu, lo) > x) lo *= 2.0;
      while (lambda_prime(z, mu, hi) < x) hi *= 2.0;
      for (int it = 0; it < 200; ++it) {
        const Real mid = 0.5 * (lo + hi);
        (lambda_prime(z, mu, mid) < x ? lo : hi) = mid;
      }
      const Real s = 0.5 * (lo + hi);
      h[static_cast<std::size_t>(i)] = std::max(0.0, s * x - log_sum_exp_weighted(z, mu, s));
    }
  }
  return h;
}

Real cramer_moment(const Vector& z, const ProbMeasure& mu, Real delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("cramer_moment: delta must lie in [0, 1)");
  const auto h = cramer_at_atoms(z, mu);
  Real s = 0.0;
  for (Index i = 0; i < z.size(); ++i)
    if (mu[i] > 0.0) s += mu[i] * std::exp(delta * h[static_cast<std::size_t>(i)]);
  return s;
}

bool cramer_moment_check(const Vector& z, const ProbMeasure& mu, Real delta) {
  return !(cramer_moment(z, mu, delta) > (1.0 + delta) / (1.0 - delta) + 1e-9);
}

}  // namespace tcikit
