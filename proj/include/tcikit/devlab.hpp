#pragma once

#include "tcikit/duality.hpp"
#include "tcikit/measures.hpp"
#include "tcikit/ratefn.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tcikit {

struct ExperimentConfig {
  std::uint64_t seed = 1;
  long replicas = 10000;
  std::vector<int> sample_sizes{10};
  std::vector<Real> t_grid{0.0};
  /// Worker threads; results do not depend on it.
  int threads = 1;

  /// Throws std::invalid_argument on replicas < 1, n < 1, an unsorted or
  /// negative t-grid.
  void validate() const;
};

/// Engine of replica `replica` in batch `salt`, a pure function of its keys.
std::mt19937_64 replica_engine(std::uint64_t seed, std::uint64_t salt, std::uint64_t replica);

/// L_n of an n-sample from mu, by inverse-CDF sampling.
ProbMeasure sample_empirical(const ProbMeasure& mu, int n, std::mt19937_64& engine);

struct TailCell {
  int n = 0;
  Real t = 0.0;
  /// -1 for the statistic itself, otherwise the family member checked
  Index member = -1;
  long hits = 0;
  long replicas = 0;
  Real p_hat = 0.0;
  Real stderr_ = 0.0;
  Real bound = 1.0;  // e^{-n alpha(t)}
  /// Second curve where one is reported (Yurinskii), NaN otherwise
  Real reference_bound = std::numeric_limits<Real>::quiet_NaN();
  bool pass = true;  // p_hat <= bound + 3 stderr
};

struct TailReport {
  std::string statistic;
  std::uint64_t seed = 0;
  long replicas = 0;
  std::vector<TailCell> cells;
  /// Estimated E[Z_n] per sample size (centered statistics), else empty
  std::vector<Real> centers;
  /// Orlicz constants of the Banach-mean experiment
  Real m = std::numeric_limits<Real>::quiet_NaN();
  Real m0 = std::numeric_limits<Real>::quiet_NaN();
  /// Yur-like bound below the Yurinskii curve on every cell
  bool ordering_holds = true;

  bool all_pass() const;
  /// First failing cell, if any.
  std::optional<std::size_t> witness() const;
};

/// P(T_C(mu, L_n) >= t) against e^{-n alpha(t)}. With a family, every member
/// also gets cells for P(<phi, L_n> + <psi, mu> >= t).
TailReport deviation_tail(const ExperimentConfig& config, const ProbMeasure& mu, const RateFunction& alpha,
                          const CostMatrix& c, const PotentialFamily* family = nullptr);

/// {x : d(x, A) <= r}
PointSet enlargement(const PointSet& a, Real r, const CostMatrix& d);

struct ConcentrationCurve {
  std::vector<Real> r;
  std::vector<Real> theta;
  /// a maximizing set for each r
  std::vector<PointSet> argmax;
};

/// theta(r) = sup{1 - mu(A^r) : mu(A) >= 1/2}, over all subsets (n <= 20) or
/// over the supplied sets.
ConcentrationCurve concentration_function(const ProbMeasure& mu, const CostMatrix& d, const std::vector<Real>& r_grid,
                                          const std::vector<PointSet>* sets = nullptr);

struct MartonReport {
  bool holds = true;
  /// min over (A, r) of mu(A^r) - 1 + e^{-alpha(r - r_A)}
  Real worst_slack = kInf;
  PointSet set;
  Real r = 0.0;
  Real r_a = 0.0;
  long cells = 0;
  /// mu(phi >= <phi, mu> + t) <= e^{-alpha(t)} over vertex potentials
  bool lemma_holds = true;
  Real lemma_worst = kInf;
  Index lemma_member = 0;
  Real lemma_t = 0.0;
  /// theta(r) <= e^{-alpha(r - alpha^{-1}(log 2))} past the threshold
  bool concentration_holds = true;
  Real concentration_worst = kInf;
};

/// Enumerates every nonempty A (n <= 12) against r_points radii on
/// [0, diameter]. Throws std::domain_error when -log mu(A) exceeds sup alpha.
MartonReport marton_bound_check(const ProbMeasure& mu, const CostMatrix& d, const RateFunction& alpha,
                                int r_points = 100, Real tol = 1e-9);

/// P(Z >= E Z + t) with Z = max over g of |<g, L_n - mu>|; E Z from an
/// independent batch of replicas / 10. Throws std::invalid_argument when a
/// member is not 1-Lipschitz for d.
TailReport empirical_process(const ExperimentConfig& config, const ProbMeasure& mu, const CostMatrix& d,
                             const std::vector<Vector>& functions, const RateFunction& alpha);

/// Z_n = |mean of the sample - E X|_2 for mu with coordinates (one row per
/// point), against e^{-n (sqrt(1 + t/M) - 1)^2} and the Yurinskii curve
/// e^{-n t^2 / (8 (2 M0^2 + t M0))}.
TailReport banach_mean_deviation(const ExperimentConfig& config, const ProbMeasure& mu, const Matrix& coords);
/// Coordinates from mu's space; throws std::invalid_argument when absent.
TailReport banach_mean_deviation(const ExperimentConfig& config, const ProbMeasure& mu);

}  // namespace tcikit
