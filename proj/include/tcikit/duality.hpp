#pragma once

#include "tcikit/measures.hpp"
#include "tcikit/ratefn.hpp"
#include "tcikit/transport.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tcikit {

/// (psi, phi) with psi (+) phi <= c (TCI) or psi = -phi (NEI).
struct PotentialPair {
  Vector psi;
  Vector phi;
};

enum class FamilyKind { lipschitz_ball, unit_sup_ball, chi_ball, explicit_list };

std::string to_string(FamilyKind kind);

struct FamilyOptions {
  std::size_t max_vertices = 1u << 15;
  /// Members drawn from optimal potentials of random targets when no exact
  /// vertex list exists.
  int random_members = 256;
  std::uint64_t seed = 1;
};

/// Finite list of potential pairs. The pair (0, 0) is always members()[0].
class PotentialFamily {
 public:
  /// {(-phi, phi) : phi 1-Lipschitz for d}; exact when the ball's vertices are
  /// enumerable, otherwise sampled from Kantorovich potentials (exact = false).
  static PotentialFamily lipschitz_ball(const CostMatrix& d, const FamilyOptions& opts = {});
  /// {(-phi, phi) : |phi| <= 1}, through the 2^n sign vectors.
  static PotentialFamily unit_sup_ball(Index n);
  /// {(-phi, phi) : |phi_i| <= chi_i}, through the sign vectors times chi.
  static PotentialFamily chi_ball(const Vector& chi);
  /// Supplied pairs, checked against psi_i + phi_j <= C_ij + 1e-9 when a cost
  /// is given.
  static PotentialFamily explicit_list(std::vector<PotentialPair> pairs, const std::optional<CostMatrix>& c = {});
  /// {(-phi, Q^c phi)} for a general square cost, Q^c phi(y) = min_x phi(x) + c(x, y),
  /// with phi from the negated source potentials of random targets. Never exact.
  static PotentialFamily from_cost(const CostMatrix& c, const ProbMeasure& mu, const FamilyOptions& opts = {});

  FamilyKind kind() const { return kind_; }
  const std::vector<PotentialPair>& members() const { return members_; }
  Index size() const { return static_cast<Index>(members_.size()); }
  Index space_size() const { return n_; }
  bool exact() const { return exact_; }
  const std::optional<Vector>& chi() const { return chi_; }

  /// A copy with extra members appended (the sup can only grow).
  PotentialFamily with_members(const std::vector<PotentialPair>& extra) const;

 private:
  PotentialFamily(FamilyKind kind, Index n, std::vector<PotentialPair> members, bool exact);

  FamilyKind kind_;
  Index n_;
  std::vector<PotentialPair> members_;
  bool exact_;
  std::optional<Vector> chi_;
};

/// z = phi + <psi, mu>; the random variable whose log-Laplace transform
/// enters the Bobkov-Gotze criterion.
Vector member_variable(const PotentialPair& pair, const ProbMeasure& mu);

/// log sum_i mu_i exp(s (phi_i + <psi, mu>)), max-shifted.
Real log_laplace(const Vector& phi, const Vector& psi, const ProbMeasure& mu, Real s);

/// t -> sup_{s >= 0} (s t - Lambda(s)) on t >= 0 as raw piecewise-linear data.
/// Breakpoints are exact points of the curve; the value at 0 is positive
/// when E z < 0.
rate::Sampled cramer_curve(const Vector& phi, const Vector& psi, const ProbMeasure& mu);
/// cramer_curve as a member of C. Throws NotInClassC when E z < 0 (the curve
/// is then positive at 0).
RateFunction cramer_transform(const Vector& phi, const Vector& psi, const ProbMeasure& mu);

/// Lambda_Phi(s) = max over members of log_laplace, on a grid.
struct LambdaCurve {
  std::vector<Real> s;
  std::vector<Real> value;
  /// Index of the maximizing member at each grid point.
  std::vector<Index> argmax;
  bool exact = false;
};

struct DualityOptions {
  int s_points = 4097;
  /// s_max doubles until the last chord slope of Lambda_Phi reaches
  /// t_max (1 - slope_tol).
  Real slope_tol = 1e-7;
  Real tol = 1e-9;
};

LambdaCurve lambda_family(const PotentialFamily& family, const ProbMeasure& mu, const std::vector<Real>& s_grid);
/// Grid used by best_alpha: uniform on [0, 32 / spread] with half the points,
/// then geometric up to an adaptive s_max.
std::vector<Real> adaptive_s_grid(const PotentialFamily& family, const ProbMeasure& mu,
                                  const DualityOptions& opts = {});

/// Lambda_Phi^* computed from the chords of Lambda_Phi on the adaptive grid
/// (a lower bound on the exact conjugate, tail slope max z).
RateFunction best_alpha(const PotentialFamily& family, const ProbMeasure& mu, const DualityOptions& opts = {});

/// Pointwise minimum over members of their Cramer curves.
IncreasingFunction j_phi(const PotentialFamily& family, const ProbMeasure& mu);

/// nu -> T(mu, nu)
using TransportFunctional = std::function<Real(const Vector&)>;

/// T_Phi(nu) = max over members of <phi, nu> + <psi, mu>.
class FamilyTransport {
 public:
  FamilyTransport(const PotentialFamily& family, const ProbMeasure& mu);
  Real operator()(const Vector& nu) const;

 private:
  Matrix phi_;  // one member per row
  Vector offset_;
};

/// Barycentric lattice {k / N : sum k = N} of the n-simplex, N = round(1/h).
struct SimplexGrid {
  Index n;
  long divisions;
  /// Number of lattice points, C(N + n - 1, n - 1).
  double size() const;
  static SimplexGrid with_step(Index n, Real h);
};

/// Calls f(nu) for every lattice point. Throws BudgetExceeded beyond budget.
void for_each_simplex_point(const SimplexGrid& grid, const std::function<void(const Vector&)>& f,
                            double budget = 5e7);

/// Default lattice steps: 1e-3 (n = 2), 5e-3 (n = 3), 2e-2 (n = 4).
Real default_simplex_step(Index n);

/// t -> min{ H(nu|mu) : nu on the lattice, T(nu) >= t }, left-continuous
/// step function.
IncreasingFunction best_transport_brute(const ProbMeasure& mu, const TransportFunctional& transport, Real h,
                                        double budget = 5e7);
IncreasingFunction best_transport_brute(const ProbMeasure& mu, const CostMatrix& c, Real h, double budget = 5e7);

struct BgReport {
  bool holds_b = true;
  Real worst_gap = 0.0;  // max of Lambda_m(s) - alpha^*(s)
  Real s = 0.0;
  Index member = 0;
};

/// Lambda_m(s) <= alpha^*(s) + tol for all members and s on the grid.
BgReport bg_check(const RateFunction& alpha, const PotentialFamily& family, const ProbMeasure& mu,
                  const DualityOptions& opts = {});
BgReport bg_check(const RateFunction& alpha, const PotentialFamily& family, const ProbMeasure& mu,
                  const std::vector<Real>& s_grid, Real tol = 1e-9);

struct PrimalReport {
  bool holds_a = true;
  Real worst_gap = 0.0;  // max of alpha(T(nu)) - H(nu|mu)
  Vector nu;
  double points = 0;
};

/// alpha(T(nu)) <= H(nu|mu) + tol over the simplex lattice.
PrimalReport primal_check(const RateFunction& alpha, const ProbMeasure& mu, const TransportFunctional& transport,
                          Real h, Real tol = 1e-9, double budget = 5e7);
PrimalReport primal_check(const RateFunction& alpha, const ProbMeasure& mu, const CostMatrix& c, Real h,
                          Real tol = 1e-9, double budget = 5e7);

/// theta_1(t) = t^2 / (2 sigma_1^2), valid on [0, s1 sigma_1^2], for a
/// non-constant member: sigma_1^2 = ratio Var(z), and s1 is the largest s with
/// Lambda'(u) >= sigma_1^2 u on [0, s].
struct QuadraticCap {
  Real sigma1_sq = 0.0;
  Real s1 = 0.0;
  Real t_limit() const { return s1 * sigma1_sq; }
  Real operator()(Real t) const { return t * t / (2.0 * sigma1_sq); }
};

QuadraticCap quadratic_cap(const Vector& phi, const ProbMeasure& mu, Real ratio = 0.9);

}  // namespace tcikit
