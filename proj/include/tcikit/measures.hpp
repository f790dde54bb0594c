#pragma once

#include "tcikit/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tcikit {

using Index = Eigen::Index;
/// A subset of the points of a finite space, as sorted distinct indices.
using PointSet = std::vector<Index>;

/// Indexed finite point set, optionally labelled, optionally embedded in R^q,
/// optionally declared as a product X1 x X2 (row-major: (i, j) -> i * n2 + j).
class FiniteSpace {
 public:
  explicit FiniteSpace(Index n);
  FiniteSpace(Index n, std::vector<std::string> labels);
  FiniteSpace(Index n, std::vector<std::string> labels, std::optional<Matrix> coords);

  static std::shared_ptr<const FiniteSpace> make(Index n);
  static std::shared_ptr<const FiniteSpace> product(const FiniteSpace& a, const FiniteSpace& b);

  Index size() const { return n_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::optional<Matrix>& coords() const { return coords_; }
  bool is_product() const { return factors_.has_value(); }
  /// Factor sizes (n1, n2) of a declared product space.
  std::pair<Index, Index> factors() const;

 private:
  Index n_;
  std::vector<std::string> labels_;
  std::optional<Matrix> coords_;
  std::optional<std::pair<Index, Index>> factors_;
};

/// Probability weights on a finite space. Simplex membership is checked at
/// construction (tolerance 1e-12) and the weights are renormalized once.
class ProbMeasure {
 public:
  static constexpr Real kSimplexTolerance = 1e-12;

  explicit ProbMeasure(const Vector& weights);
  ProbMeasure(std::shared_ptr<const FiniteSpace> space, const Vector& weights);

  static ProbMeasure dirac(Index n, Index at);
  static ProbMeasure uniform(Index n);

  Index size() const { return w_.size(); }
  const Vector& weights() const { return w_; }
  Real operator[](Index i) const { return w_[i]; }
  const std::shared_ptr<const FiniteSpace>& space() const { return space_; }

  Real mass(const PointSet& a) const;
  /// Expectation of a function given by its values on the points.
  Real expect(const Vector& f) const { return w_.dot(f); }
  bool is_dirac() const;

 private:
  std::shared_ptr<const FiniteSpace> space_;
  Vector w_;
};

enum class CostKind { general, metric };

/// Nonnegative cost c(x_i, y_j). Metric kind is validated (square, zero
/// diagonal, symmetric, triangle inequality); square general costs must have a
/// zero diagonal.
class CostMatrix {
 public:
  CostMatrix(Matrix c, CostKind kind);

  /// Discrete metric scale * 1_{i != j}.
  static CostMatrix hamming(Index n, Real scale = 1.0);
  /// |i - j| on the points 0..n-1 of a line.
  static CostMatrix line(Index n);
  /// Euclidean distances between the rows of coords.
  static CostMatrix euclidean(const Matrix& coords);
  /// c = d^p for a metric d (a general cost unless p == 1).
  static CostMatrix power(const CostMatrix& d, Real p);

  const Matrix& matrix() const { return c_; }
  Real operator()(Index i, Index j) const { return c_(i, j); }
  Index rows() const { return c_.rows(); }
  Index cols() const { return c_.cols(); }
  CostKind kind() const { return kind_; }
  bool is_metric() const { return kind_ == CostKind::metric; }
  bool is_square() const { return c_.rows() == c_.cols(); }
  Real max_entry() const { return c_.size() == 0 ? 0.0 : c_.maxCoeff(); }

 private:
  Matrix c_;
  CostKind kind_;
};

/// Checks the metric axioms on a square matrix within tol.
bool satisfies_metric_axioms(const Matrix& c, Real tol = 1e-12);

/// H(nu | mu) = sum_{nu_i > 0} nu_i log(nu_i / mu_i); +inf when nu is not
/// absolutely continuous with respect to mu.
Real relative_entropy(const ProbMeasure& nu, const ProbMeasure& mu);

/// sum_i |nu_i - mu_i| (sup over |phi| <= 1 of the integral of phi d(nu - mu)).
Real tv_norm(const ProbMeasure& nu, const ProbMeasure& mu);

/// sum_i chi_i |nu_i - mu_i|.
Real weighted_tv(const ProbMeasure& nu, const ProbMeasure& mu, const Vector& chi);

/// mu1 (x) mu2 on the declared product space, row-major.
ProbMeasure product_measure(const ProbMeasure& mu1, const ProbMeasure& mu2);

struct Disintegration {
  ProbMeasure first;
  std::vector<ProbMeasure> kernels;
  /// placeholder[i] is set when first[i] == 0 and kernels[i] is an arbitrary
  /// uniform row that carries no information.
  std::vector<bool> placeholder;
};

/// First marginal and conditional kernels of a measure on a product space.
Disintegration disintegrate(const ProbMeasure& nu);

/// Second marginal of a measure on a product space.
ProbMeasure second_marginal(const ProbMeasure& nu);

/// mu conditioned on A: 1_A mu / mu(A). Throws when mu(A) == 0.
ProbMeasure restrict_to(const ProbMeasure& mu, const PointSet& a);

}  // namespace tcikit
