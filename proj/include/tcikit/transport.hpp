#pragma once

#include "tcikit/measures.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace tcikit {

/// A transport plan between two marginals together with its realized cost.
struct Coupling {
  Matrix pi;
  Real cost = 0.0;
};

/// Kantorovich potentials: psi on the source, phi on the target, with
/// psi_i + phi_j <= C_ij.
struct DualPotentials {
  Vector psi;
  Vector phi;
  Real value = 0.0;
};

struct OtOptions {
  Real feasibility_tol = 1e-9;
  Real duality_tol = 1e-8;
  std::size_t max_pivots = 0;  // 0: automatic cap before falling back to Bland's rule
};

struct OtSolution {
  Real value = 0.0;
  Coupling plan;
  DualPotentials dual;
  /// True when the transportation simplex hit its pivot cap and the dense
  /// Bland-rule simplex produced the answer instead.
  bool used_fallback = false;
};

/// Exact discrete optimal transport min_pi sum pi_ij C_ij by the
/// transportation simplex (MODI potentials, tree cycles). Zero-mass rows and
/// columns are eliminated before solving.
OtSolution solve_ot(const ProbMeasure& mu, const ProbMeasure& nu, const CostMatrix& c, const OtOptions& opts = {});

/// Optimal Kantorovich potentials. Their value equals the primal optimum.
DualPotentials solve_dual(const ProbMeasure& mu, const ProbMeasure& nu, const CostMatrix& c,
                          const OtOptions& opts = {});

/// Kantorovich-Rubinstein dual norm sup{ sum phi (nu - mu) : |phi_i - phi_j| <= d_ij },
/// solved as its own linear program (independent of solve_ot).
Real kr_dual_norm(const ProbMeasure& nu, const ProbMeasure& mu, const CostMatrix& d);

/// d_chi(x, y) = 1_{x != y} (chi(x) + chi(y)). Flagged metric iff chi has at
/// most one zero.
CostMatrix chi_metric(const Vector& chi);

/// (C1 (+) C2)_{(i,j),(k,l)} = C1_ik + C2_jl on the row-major product space.
CostMatrix tensor_cost(const CostMatrix& c1, const CostMatrix& c2);

/// |T_{d_chi}(mu, nu) - ||chi (nu - mu)||_TV| <= tol.
bool chi_tv_identity_check(const ProbMeasure& mu, const ProbMeasure& nu, const Vector& chi, Real tol = 1e-8);

/// Extreme points, modulo additive constants, of the 1-Lipschitz ball
/// { phi : phi_i - phi_j <= d_ij } (normalized so phi_0 = 0). Exact for the
/// discrete metric, for tree metrics, and by spanning-tree enumeration for
/// small n. Returns nullopt when the vertex count would exceed max_vertices or
/// no exact route applies.
std::optional<std::vector<Vector>> lipschitz_vertices(const CostMatrix& d, std::size_t max_vertices = 1u << 15);

/// Repeated evaluation of nu -> T_C(mu, nu) for a fixed (mu, C). Metric costs
/// with an available Lipschitz vertex list use max_v <v, nu - mu>; otherwise
/// the transportation simplex runs per call.
class TransportEvaluator {
 public:
  TransportEvaluator(const ProbMeasure& mu, const CostMatrix& c);

  Real operator()(const Vector& nu) const;
  bool uses_vertices() const { return vertices_.has_value(); }
  const ProbMeasure& reference() const { return mu_; }
  const CostMatrix& cost() const { return c_; }

 private:
  ProbMeasure mu_;
  CostMatrix c_;
  std::optional<Matrix> vertices_;  // one vertex per row
  Vector vertex_offsets_;           // <v, mu> per vertex
};

}  // namespace tcikit
