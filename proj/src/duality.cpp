#include "tcikit/duality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tcikit {

namespace {

constexpr Real kAtomTol = 1e-12;

// Distribution of z under mu, restricted to the support.
struct Atoms {
  std::vector<Real> z;
  std::vector<Real> p;
  Real zmax = -kInf;
  Real zmin = kInf;
  Real mean = 0.0;
  Real ptop = 0.0;
};

Atoms atoms_of(const Vector& z, const ProbMeasure& mu) {
  if (z.size() != mu.size()) throw DimensionMismatch("potential size differs from the measure");
  Atoms a;
  for (Index i = 0; i < z.size(); ++i) {
    if (mu[i] <= 0.0) continue;
    a.z.push_back(z[i]);
    a.p.push_back(mu[i]);
    a.zmax = std::max(a.zmax, z[i]);
    a.zmin = std::min(a.zmin, z[i]);
    a.mean += mu[i] * z[i];
  }
  const Real tol = kAtomTol * (1.0 + std::abs(a.zmax));
  for (std::size_t i = 0; i < a.z.size(); ++i)
    if (a.z[i] >= a.zmax - tol) a.ptop += a.p[i];
  return a;
}

// log sum p exp(s (z - zmax)) and the gap zmax - Lambda'(s).
struct LaplacePoint {
  Real log_sum;
  Real gap;
};

LaplacePoint laplace_at(const Atoms& a, Real s) {
  Real w_sum = 0.0, wg_sum = 0.0;
  for (std::size_t i = 0; i < a.z.size(); ++i) {
    const Real g = a.zmax - a.z[i];
    const Real w = a.p[i] * std::exp(-s * g);
    w_sum += w;
    wg_sum += w * g;
  }
  return {std::log(w_sum), wg_sum / w_sum};
}

Real lambda_at(const Atoms& a, Real s) {
  if (s == 0.0) return 0.0;
  return s * a.zmax + laplace_at(a, s).log_sum;
}

rate::Sampled infinite_piece() { return rate::Sampled{{0.0}, {kInf}, 0.0, 0.0}; }

rate::Sampled curve_from_atoms(const Atoms& a) {
  const Real scale = 1.0 + std::abs(a.zmax) + std::abs(a.zmin);
  const Real eps = kAtomTol * scale;
  if (a.zmax - a.zmin <= eps) {
    if (a.zmax > eps) return rate::Sampled{{0.0}, {0.0}, a.zmax, 0.0};
    if (a.zmax >= -eps) return rate::Sampled{{0.0}, {0.0}, 0.0, 0.0};
    return infinite_piece();
  }
  if (a.zmax < -eps) return infinite_piece();
  if (a.zmax <= eps) return rate::Sampled{{0.0}, {-std::log(a.ptop)}, 0.0, 0.0};

  std::vector<Real> ts, vs;
  Real s = 0.0;
  if (a.mean >= -eps) {
    ts.push_back(0.0);
    vs.push_back(0.0);
    if (a.mean > eps) {
      ts.push_back(a.mean);
      vs.push_back(0.0);
    }
  } else {
    // Lambda'(s0) = 0
    Real lo = 0.0, hi = 1.0 / (a.zmax - a.zmin);
    while (laplace_at(a, hi).gap > a.zmax) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const Real mid = 0.5 * (lo + hi);
      (laplace_at(a, mid).gap > a.zmax ? lo : hi) = mid;
    }
    s = hi;
    const LaplacePoint lp = laplace_at(a, s);
    ts.push_back(0.0);
    vs.push_back(std::max(0.0, -s * lp.gap - lp.log_sum));
  }

  const Real t_lo = std::max(a.mean, 0.0);
  const Real span = a.zmax - t_lo;
  const Real dt_max = span / 1000.0;
  const Real area = 8e-7;  // dt * ds; chord error is at most a quarter of it
  LaplacePoint cur = laplace_at(a, s);
  Real t = a.zmax - cur.gap;
  Real ds = std::min(1e-3 / (a.zmax - a.zmin), 0.1);
  for (int it = 0; it < 400000; ++it) {
    if (cur.gap * (s + 1.0) <= 1e-12 * scale) break;
    const Real s_next = s + ds;
    const LaplacePoint nxt = laplace_at(a, s_next);
    const Real t_next = a.zmax - nxt.gap;
    const Real dt = t_next - t;
    if ((dt > dt_max || dt * ds > area) && ds > 1e-12) {
      ds *= 0.5;
      continue;
    }
    s = s_next;
    cur = nxt;
    if (t_next > ts.back() && t_next < a.zmax) {
      ts.push_back(t_next);
      vs.push_back(std::max(vs.back(), -s * cur.gap - cur.log_sum));
    }
    t = t_next;
    if (dt < 0.25 * dt_max && dt * ds < 0.25 * area) ds *= 1.5;
  }
  const Real v_end = -std::log(a.ptop);
  if (ts.back() >= a.zmax) {
    ts.back() = a.zmax;
    vs.back() = v_end;
  } else {
    ts.push_back(a.zmax);
    vs.push_back(std::max(vs.back(), v_end));
  }
  return rate::Sampled{std::move(ts), std::move(vs), a.zmax, 0.0};
}

bool is_infinite(const rate::Sampled& piece) { return !(piece.v[0] < kInf); }

Real fast_entropy(const Vector& nu, const Vector& mu) {
  Real h = 0.0;
  for (Index i = 0; i < nu.size(); ++i) {
    if (nu[i] <= 0.0) continue;
    if (mu[i] <= 0.0) return kInf;
    h += nu[i] * std::log(nu[i] / mu[i]);
  }
  return std::max(h, 0.0);
}

std::vector<PotentialPair> sign_members(const Vector& chi) {
  const Index n = chi.size();
  if (n > 24) throw BudgetExceeded("sign-vector family: too many points");
  std::vector<PotentialPair> out;
  const unsigned long count = 1ul << n;
  // phi and -phi differ only by the sign; both are kept since the ball is symmetric
  for (unsigned long mask = 0; mask < count; ++mask) {
    Vector phi(n);
    for (Index i = 0; i < n; ++i) phi[i] = ((mask >> i) & 1ul) ? chi[i] : -chi[i];
    if (phi.isZero(0.0)) continue;
    out.push_back({-phi, phi});
  }
  return out;
}

}  // namespace

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::lipschitz_ball: return "lipschitz-ball";
    case FamilyKind::unit_sup_ball: return "unit-sup-ball";
    case FamilyKind::chi_ball: return "chi-ball";
    case FamilyKind::explicit_list: return "explicit";
  }
  return "unknown";
}

PotentialFamily::PotentialFamily(FamilyKind kind, Index n, std::vector<PotentialPair> members, bool exact)
    : kind_(kind), n_(n), exact_(exact) {
  members_.push_back({Vector::Zero(n), Vector::Zero(n)});
  for (auto& m : members) {
    if (m.phi.size() != n || m.psi.size() != n) throw DimensionMismatch("potential pair of the wrong size");
    if (m.phi.isZero(0.0) && m.psi.isZero(0.0)) continue;
    members_.push_back(std::move(m));
  }
}

PotentialFamily PotentialFamily::lipschitz_ball(const CostMatrix& d, const FamilyOptions& opts) {
  if (!d.is_metric()) throw std::invalid_argument("lipschitz_ball needs a metric");
  const Index n = d.rows();
  std::vector<PotentialPair> members;
  if (auto verts = lipschitz_vertices(d, opts.max_vertices)) {
    for (const auto& v : *verts) members.push_back({-v, v});
    return PotentialFamily(FamilyKind::lipschitz_ball, n, std::move(members), true);
  }
  // f = min_i (d_i. - psi_i) is 1-Lipschitz for any potential psi of a
  // random target; it is a worst-case phi for that target.
  std::mt19937_64 rng(opts.seed);
  std::gamma_distribution<Real> gamma(1.0, 1.0);
  const ProbMeasure mu = ProbMeasure::uniform(n);
  for (int r = 0; r < opts.random_members; ++r) {
    Vector w(n);
    for (Index i = 0; i < n; ++i) w[i] = gamma(rng);
    const DualPotentials pot = solve_dual(mu, ProbMeasure(w / w.sum()), d);
    Vector f(n);
    for (Index j = 0; j < n; ++j) f[j] = (d.matrix().col(j) - pot.psi).minCoeff();
    f.array() -= f[0];
    members.push_back({-f, f});
  }
  return PotentialFamily(FamilyKind::lipschitz_ball, n, std::move(members), false);
}

PotentialFamily PotentialFamily::unit_sup_ball(Index n) {
  PotentialFamily fam(FamilyKind::unit_sup_ball, n, sign_members(Vector::Ones(n)), true);
  return fam;
}

PotentialFamily PotentialFamily::chi_ball(const Vector& chi) {
  if ((chi.array() < 0.0).any()) throw std::invalid_argument("chi_ball: chi must be nonnegative");
  PotentialFamily fam(FamilyKind::chi_ball, chi.size(), sign_members(chi), true);
  fam.chi_ = chi;
  return fam;
}

PotentialFamily PotentialFamily::explicit_list(std::vector<PotentialPair> pairs, const std::optional<CostMatrix>& c) {
  if (pairs.empty()) throw std::invalid_argument("explicit family: no pairs");
  const Index n = pairs.front().phi.size();
  if (c) {
    if (c->rows() != n || c->cols() != n) throw DimensionMismatch("explicit family: cost size");
    for (const auto& p : pairs) {
      if (p.psi.size() != n || p.phi.size() != n) throw DimensionMismatch("explicit family: pair size");
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
          if (p.psi[i] + p.phi[j] > (*c)(i, j) + 1e-9)
            throw std::invalid_argument("explicit family: psi_i + phi_j exceeds C_ij");
    }
  }
  return PotentialFamily(FamilyKind::explicit_list, n, std::move(pairs), false);
}

PotentialFamily PotentialFamily::from_cost(const CostMatrix& c, const ProbMeasure& mu, const FamilyOptions& opts) {
  if (!c.is_square() || c.rows() != mu.size()) throw DimensionMismatch("from_cost: cost and measure sizes");
  const Index n = c.rows();
  std::mt19937_64 rng(opts.seed);
  std::gamma_distribution<Real> gamma(1.0, 1.0);
  std::vector<PotentialPair> members;
  for (int r = 0; r < opts.random_members; ++r) {
    Vector w(n);
    for (Index i = 0; i < n; ++i) w[i] = gamma(rng);
    const DualPotentials pot = solve_dual(mu, ProbMeasure(w / w.sum()), c);
    const Vector phi = -pot.psi;
    Vector q(n);
    for (Index j = 0; j < n; ++j) q[j] = (phi + c.matrix().col(j)).minCoeff();
    members.push_back({-phi, q});
  }
  return PotentialFamily(FamilyKind::explicit_list, n, std::move(members), false);
}

PotentialFamily PotentialFamily::with_members(const std::vector<PotentialPair>& extra) const {
  PotentialFamily out = *this;
  for (const auto& m : extra) {
    if (m.phi.size() != n_ || m.psi.size() != n_) throw DimensionMismatch("potential pair of the wrong size");
    out.members_.push_back(m);
  }
  out.exact_ = false;
  return out;
}

Vector member_variable(const PotentialPair& pair, const ProbMeasure& mu) {
  if (pair.phi.size() != mu.size() || pair.psi.size() != mu.size())
    throw DimensionMismatch("potential size differs from the measure");
  return pair.phi.array() + mu.expect(pair.psi);
}

Real log_laplace(const Vector& phi, const Vector& psi, const ProbMeasure& mu, Real s) {
  if (!(s >= 0.0)) throw std::domain_error("log_laplace: s must be nonnegative");
  return lambda_at(atoms_of(member_variable({psi, phi}, mu), mu), s);
}

rate::Sampled cramer_curve(const Vector& phi, const Vector& psi, const ProbMeasure& mu) {
  return curve_from_atoms(atoms_of(member_variable({psi, phi}, mu), mu));
}

RateFunction cramer_transform(const Vector& phi, const Vector& psi, const ProbMeasure& mu) {
  rate::Sampled c = cramer_curve(phi, psi, mu);
  if (c.v[0] > 0.0) throw NotInClassC("cramer_transform: E z < 0, the transform is positive at 0");
  return RateFunction::from_node(std::move(c));
}

LambdaCurve lambda_family(const PotentialFamily& family, const ProbMeasure& mu, const std::vector<Real>& s_grid) {
  if (family.size() == 0) throw std::invalid_argument("lambda_family: empty family");
  LambdaCurve out;
  out.s = s_grid;
  out.value.assign(s_grid.size(), -kInf);
  out.argmax.assign(s_grid.size(), 0);
  out.exact = family.exact();
  for (Index m = 0; m < family.size(); ++m) {
    const Atoms a = atoms_of(member_variable(family.members()[m], mu), mu);
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
      const Real v = lambda_at(a, s_grid[k]);
      if (v > out.value[k]) {
        out.value[k] = v;
        out.argmax[k] = m;
      }
    }
  }
  return out;
}

namespace {

Real family_tmax(const std::vector<Atoms>& atoms) {
  Real t = 0.0;
  for (const auto& a : atoms) t = std::max(t, a.zmax);
  return t;
}

Real family_lambda(const std::vector<Atoms>& atoms, Real s) {
  Real v = 0.0;
  for (const auto& a : atoms) v = std::max(v, lambda_at(a, s));
  return v;
}

}  // namespace

namespace {

// Uniform on [0, s_a] with half the points, geometric on [s_a, s_max] after.
std::vector<Real> make_s_grid(Real s_a, Real s_max, int points) {
  std::vector<Real> g;
  if (s_max <= s_a) {
    for (int k = 0; k < points; ++k) g.push_back(s_a * k / (points - 1));
    return g;
  }
  const int head = points / 2;
  for (int k = 0; k < head; ++k) g.push_back(s_a * k / head);
  const int tail = points - head;
  const Real ratio = std::log(s_max / s_a) / (tail - 1);
  for (int k = 0; k < tail; ++k) g.push_back(s_a * std::exp(ratio * k));
  g.back() = s_max;
  return g;
}

}  // namespace

std::vector<Real> adaptive_s_grid(const PotentialFamily& family, const ProbMeasure& mu, const DualityOptions& opts) {
  if (opts.s_points < 5) throw std::invalid_argument("adaptive_s_grid: need at least 5 points");
  std::vector<Atoms> atoms;
  Real spread = 0.0;
  for (const auto& m : family.members()) {
    atoms.push_back(atoms_of(member_variable(m, mu), mu));
    spread = std::max(spread, atoms.back().zmax - atoms.back().zmin);
  }
  const Real t_max = family_tmax(atoms);
  const Real s_a = spread > 0.0 ? 32.0 / spread : 1.0;
  Real s_max = s_a;
  if (t_max > 0.0) {
    for (int it = 0; it < 80; ++it) {
      const auto g = make_s_grid(s_a, s_max, opts.s_points);
      const Real s0 = g[g.size() - 2], s1 = g.back();
      const Real slope = (family_lambda(atoms, s1) - family_lambda(atoms, s0)) / (s1 - s0);
      if (slope >= t_max * (1.0 - opts.slope_tol)) break;
      s_max *= 2.0;
    }
  }
  return make_s_grid(s_a, s_max, opts.s_points);
}

RateFunction best_alpha(const PotentialFamily& family, const ProbMeasure& mu, const DualityOptions& opts) {
  std::vector<Atoms> atoms;
  for (const auto& m : family.members()) atoms.push_back(atoms_of(member_variable(m, mu), mu));
  const Real t_max = family_tmax(atoms);
  if (t_max <= 0.0) return RateFunction::indicator(0.0);
  const auto grid = adaptive_s_grid(family, mu, opts);
  const LambdaCurve lam = lambda_family(family, mu, grid);
  // Lambda_Phi has a corner wherever the maximizing member changes; put a
  // breakpoint on each crossing so the chords do not cut the corner.
  std::vector<Real> s{0.0}, v{0.0};
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const Index a = lam.argmax[k - 1], b = lam.argmax[k];
    if (a != b) {
      Real lo = grid[k - 1], hi = grid[k];
      for (int it = 0; it < 100 && hi - lo > 1e-14 * hi; ++it) {
        const Real mid = 0.5 * (lo + hi);
        (lambda_at(atoms[static_cast<std::size_t>(a)], mid) >= lambda_at(atoms[static_cast<std::size_t>(b)], mid)
             ? lo
             : hi) = mid;
      }
      const Real sc = 0.5 * (lo + hi);
      if (sc > s.back() && sc < grid[k]) {
        s.push_back(sc);
        v.push_back(std::max(v.back(), family_lambda(atoms, sc)));
      }
    }
    s.push_back(grid[k]);
    v.push_back(std::max(v.back(), lam.value[k]));
  }
  const RateFunction lambda_pl = RateFunction::from_node(rate::Sampled{std::move(s), std::move(v), kInf, t_max});
  return monotone_conjugate(lambda_pl);
}

IncreasingFunction j_phi(const PotentialFamily& family, const ProbMeasure& mu) {
  IncreasingFunction::Envelope env;
  env.of.push_back(rate::Sampled{{0.0}, {0.0}, 0.0, 0.0});
  for (const auto& m : family.members()) {
    rate::Sampled c = curve_from_atoms(atoms_of(member_variable(m, mu), mu));
    if (!is_infinite(c)) env.of.push_back(std::move(c));
  }
  return IncreasingFunction(std::move(env));
}

FamilyTransport::FamilyTransport(const PotentialFamily& family, const ProbMeasure& mu)
    : phi_(family.size(), mu.size()), offset_(family.size()) {
  if (family.space_size() != mu.size()) throw DimensionMismatch("family and measure sizes differ");
  for (Index m = 0; m < family.size(); ++m) {
    phi_.row(m) = family.members()[m].phi.transpose();
    offset_[m] = mu.expect(family.members()[m].psi);
  }
}

Real FamilyTransport::operator()(const Vector& nu) const { return (phi_ * nu + offset_).maxCoeff(); }

double SimplexGrid::size() const {
  // C(N + n - 1, n - 1)
  double c = 1.0;
  for (Index k = 1; k < n; ++k) c = c * static_cast<double>(divisions + k) / static_cast<double>(k);
  return c;
}

SimplexGrid SimplexGrid::with_step(Index n, Real h) {
  if (n < 1) throw std::invalid_argument("simplex grid: empty space");
  if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("simplex grid: step must lie in (0, 1]");
  return SimplexGrid{n, std::max(1L, std::lround(1.0 / h))};
}

Real default_simplex_step(Index n) {
  if (n <= 2) return 1e-3;
  if (n == 3) return 5e-3;
  return 2e-2;
}

void for_each_simplex_point(const SimplexGrid& grid, const std::function<void(const Vector&)>& f, double budget) {
  if (grid.size() > budget)
    throw BudgetExceeded("simplex grid has " + std::to_string(grid.size()) + " points, budget " +
                         std::to_string(budget));
  const Index n = grid.n;
  const long total = grid.divisions;
  const Real inv = 1.0 / static_cast<Real>(total);
  std::vector<long> k(static_cast<std::size_t>(n), 0);
  Vector nu(n);
  // odometer over compositions of total into n parts
  k[static_cast<std::size_t>(n - 1)] = total;
  while (true) {
    for (Index i = 0; i < n; ++i) nu[i] = static_cast<Real>(k[static_cast<std::size_t>(i)]) * inv;
    f(nu);
    if (n == 1) return;
    Index j = n - 2;
    const long rest = k[static_cast<std::size_t>(n - 1)];
    if (rest > 0) {
      ++k[static_cast<std::size_t>(j)];
      k[static_cast<std::size_t>(n - 1)] = rest - 1;
      continue;
    }
    // last slot empty: carry into the previous nonzero slot
    while (j >= 0 && k[static_cast<std::size_t>(j)] == 0) --j;
    if (j <= 0) return;
    const long moved = k[static_cast<std::size_t>(j)];
    k[static_cast<std::size_t>(j)] = 0;
    ++k[static_cast<std::size_t>(j - 1)];
    k[static_cast<std::size_t>(n - 1)] = moved - 1;
  }
}

IncreasingFunction best_transport_brute(const ProbMeasure& mu, const TransportFunctional& transport, Real h,
                                        double budget) {
  const SimplexGrid grid = SimplexGrid::with_step(mu.size(), h);
  std::vector<std::pair<Real, Real>> pts;  // (T, H)
  pts.reserve(static_cast<std::size_t>(std::min(grid.size(), budget)));
  const Vector& w = mu.weights();
  for_each_simplex_point(
      grid,
      [&](const Vector& nu) {
        const Real hh = fast_entropy(nu, w);
        if (hh < kInf) pts.emplace_back(transport(nu), hh);
      },
      budget);
  // mu itself, which need not lie on the lattice
  pts.emplace_back(0.0, 0.0);
  std::sort(pts.begin(), pts.end());
  IncreasingFunction::Step step;
  step.t.push_back(0.0);
  step.v.push_back(0.0);
  std::vector<Real> ts, vs;
  Real best = kInf;
  for (std::size_t i = pts.size(); i-- > 0;) {
    best = std::min(best, pts[i].second);
    if (pts[i].first <= 0.0) break;
    if (!ts.empty() && ts.back() == pts[i].first) {
      vs.back() = best;
      continue;
    }
    ts.push_back(pts[i].first);
    vs.push_back(best);
  }
  for (std::size_t i = ts.size(); i-- > 0;) {
    step.t.push_back(ts[i]);
    step.v.push_back(vs[i]);
  }
  return IncreasingFunction(std::move(step));
}

IncreasingFunction best_transport_brute(const ProbMeasure& mu, const CostMatrix& c, Real h, double budget) {
  const TransportEvaluator eval(mu, c);
  return best_transport_brute(mu, [&eval](const Vector& nu) { return eval(nu); }, h, budget);
}

BgReport bg_check(const RateFunction& alpha, const PotentialFamily& family, const ProbMeasure& mu,
                  const std::vector<Real>& s_grid, Real tol) {
  const RateFunction conj = monotone_conjugate(alpha);
  std::vector<Real> bound(s_grid.size());
  for (std::size_t k = 0; k < s_grid.size(); ++k) bound[k] = conj(s_grid[k]);
  BgReport rep;
  rep.worst_gap = -kInf;
  for (Index m = 0; m < family.size(); ++m) {
    const Atoms a = atoms_of(member_variable(family.members()[m], mu), mu);
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
      const Real gap = lambda_at(a, s_grid[k]) - bound[k];
      if (gap > rep.worst_gap) {
        rep.worst_gap = gap;
        rep.s = s_grid[k];
        rep.member = m;
      }
    }
  }
  rep.holds_b = !(rep.worst_gap > tol);
  return rep;
}

BgReport bg_check(const RateFunction& alpha, const PotentialFamily& family, const ProbMeasure& mu,
                  const DualityOptions& opts) {
  return bg_check(alpha, family, mu, adaptive_s_grid(family, mu, opts), opts.tol);
}

PrimalReport primal_check(const RateFunction& alpha, const ProbMeasure& mu, const TransportFunctional& transport,
                          Real h, Real tol, double budget) {
  const SimplexGrid grid = SimplexGrid::with_step(mu.size(), h);
  const Vector& w = mu.weights();
  PrimalReport rep;
  rep.worst_gap = -kInf;
  rep.nu = w;
  for_each_simplex_point(
      grid,
      [&](const Vector& nu) {
        rep.points += 1;
        const Real hh = fast_entropy(nu, w);
        if (!(hh < kInf)) return;
        const Real a = alpha(std::max(0.0, transport(nu)));
        const Real gap = a - hh;
        if (gap > rep.worst_gap) {
          rep.worst_gap = gap;
          rep.nu = nu;
        }
      },
      budget);
  rep.holds_a = !(rep.worst_gap > tol);
  return rep;
}

PrimalReport primal_check(const RateFunction& alpha, const ProbMeasure& mu, const CostMatrix& c, Real h, Real tol,
                          double budget) {
  const TransportEvaluator eval(mu, c);
  return primal_check(alpha, mu, [&eval](const Vector& nu) { return eval(nu); }, h, tol, budget);
}

QuadraticCap quadratic_cap(const Vector& phi, const ProbMeasure& mu, Real ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("quadratic_cap: ratio must lie in (0, 1)");
  const Vector z = phi.array() - mu.expect(phi);
  const Atoms a = atoms_of(z, mu);
  Real var = 0.0;
  for (std::size_t i = 0; i < a.z.size(); ++i) var += a.p[i] * a.z[i] * a.z[i];
  if (!(var > 0.0)) throw std::invalid_argument("quadratic_cap: phi is constant on the support");
  QuadraticCap cap;
  cap.sigma1_sq = ratio * var;
  // Lambda'(u) - sigma1^2 u is positive just after 0 and eventually negative
  const auto excess = [&](Real u) { return (a.zmax - laplace_at(a, u).gap) - cap.sigma1_sq * u; };
  const Real du = 1e-3 / (a.zmax - a.zmin);
  Real u = du;
  while (excess(u) >= 0.0) u += du;
  Real lo = u - du, hi = u;
  for (int it = 0; it < 100; ++it) {
    const Real mid = 0.5 * (lo + hi);
    (excess(mid) >= 0.0 ? lo : hi) = mid;
  }
  cap.s1 = lo;
  return cap;
}

}  // namespace tcikit
