#include "tcikit/measures.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace tcikit {

namespace {

void require_same_size(const ProbMeasure& a, const ProbMeasure& b, const char* op) {
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << op << ": measures live on spaces of size " << a.size() << " and " << b.size();
    throw DimensionMismatch(msg.str());
  }
}

}  // namespace

FiniteSpace::FiniteSpace(Index n) : FiniteSpace(n, {}, std::nullopt) {}

FiniteSpace::FiniteSpace(Index n, std::vector<std::string> labels)
    : FiniteSpace(n, std::move(labels), std::nullopt) {}

FiniteSpace::FiniteSpace(Index n, std::vector<std::string> labels, std::optional<Matrix> coords)
    : n_(n), labels_(std::move(labels)), coords_(std::move(coords)) {
  if (n_ < 1) throw std::invalid_argument("FiniteSpace: need at least one point");
  if (!labels_.empty()) {
    if (static_cast<Index>(labels_.size()) != n_)
      throw DimensionMismatch("FiniteSpace: label count differs from n");
    std::set<std::string> seen(labels_.begin(), labels_.end());
    if (static_cast<Index>(seen.size()) != n_)
      throw std::invalid_argument("FiniteSpace: labels must be distinct");
  }
  if (coords_ && coords_->rows() != n_)
    throw DimensionMismatch("FiniteSpace: coordinate rows differ from n");
}

std::shared_ptr<const FiniteSpace> FiniteSpace::make(Index n) {
  return std::make_shared<const FiniteSpace>(n);
}

std::shared_ptr<const FiniteSpace> FiniteSpace::product(const FiniteSpace& a, const FiniteSpace& b) {
  auto space = std::make_shared<FiniteSpace>(a.size() * b.size());
  if (!a.labels().empty() && !b.labels().empty()) {
    for (const auto& la : a.labels())
      for (const auto& lb : b.labels()) space->labels_.push_back("(" + la + "," + lb + ")");
  }
  if (a.coords() && b.coords()) {
    const Matrix& ca = *a.coords();
    const Matrix& cb = *b.coords();
    Matrix c(a.size() * b.size(), ca.cols() + cb.cols());
    for (Index i = 0; i < a.size(); ++i)
      for (Index j = 0; j < b.size(); ++j) c.row(i * b.size() + j) << ca.row(i), cb.row(j);
    space->coords_ = std::move(c);
  }
  space->factors_ = std::make_pair(a.size(), b.size());
  return space;
}

std::pair<Index, Index> FiniteSpace::factors() const {
  if (!factors_) throw std::invalid_argument("FiniteSpace: not a product space");
  return *factors_;
}

ProbMeasure::ProbMeasure(const Vector& weights) : ProbMeasure(FiniteSpace::make(weights.size()), weights) {}

ProbMeasure::ProbMeasure(std::shared_ptr<const FiniteSpace> space, const Vector& weights)
    : space_(std::move(space)), w_(weights) {
  if (!space_) throw std::invalid_argument("ProbMeasure: null space");
  if (w_.size() != space_->size()) throw DimensionMismatch("ProbMeasure: weight count differs from space size");
  for (Index i = 0; i < w_.size(); ++i) {
    if (!(w_[i] >= 0.0) || !std::isfinite(w_[i]))
      throw std::invalid_argument("ProbMeasure: weights must be finite and nonnegative");
  }
  const Real total = w_.sum();
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "ProbMeasure: weights sum to " << total << ", not 1";
    throw std::invalid_argument(msg.str());
  }
  w_ /= total;
}

ProbMeasure ProbMeasure::dirac(Index n, Index at) {
  Vector w = Vector::Zero(n);
  w[at] = 1.0;
  return ProbMeasure(w);
}

ProbMeasure ProbMeasure::uniform(Index n) { return ProbMeasure(Vector::Constant(n, 1.0 / static_cast<Real>(n))); }

Real ProbMeasure::mass(const PointSet& a) const {
  Real m = 0.0;
  for (Index i : a) m += w_[i];
  return m;
}

bool ProbMeasure::is_dirac() const { return (w_.array() > 0.0).count() == 1; }

bool satisfies_metric_axioms(const Matrix& c, Real tol) {
  if (c.rows() != c.cols()) return false;
  const Index n = c.rows();
  const Real scale = std::max<Real>(1.0, c.size() ? c.cwiseAbs().maxCoeff() : 0.0);
  for (Index i = 0; i < n; ++i) {
    if (std::abs(c(i, i)) > tol * scale) return false;
    for (Index j = 0; j < n; ++j) {
      if (c(i, j) < 0.0) return false;
      if (std::abs(c(i, j) - c(j, i)) > tol * scale) return false;
      for (Index k = 0; k < n; ++k)
        if (c(i, k) > c(i, j) + c(j, k) + tol * scale) return false;
    }
  }
  return true;
}

CostMatrix::CostMatrix(Matrix c, CostKind kind) : c_(std::move(c)), kind_(kind) {
  for (Index i = 0; i < c_.rows(); ++i)
    for (Index j = 0; j < c_.cols(); ++j)
      if (!(c_(i, j) >= 0.0) || !std::isfinite(c_(i, j)))
        throw std::invalid_argument("CostMatrix: entries must be finite and nonnegative");
  if (kind_ == CostKind::metric) {
    if (!satisfies_metric_axioms(c_)) throw std::invalid_argument("CostMatrix: metric axioms fail");
  } else if (is_square()) {
    for (Index i = 0; i < c_.rows(); ++i)
      if (c_(i, i) != 0.0) throw std::invalid_argument("CostMatrix: square cost needs c(x,x) = 0");
  }
}

CostMatrix CostMatrix::hamming(Index n, Real scale) {
  Matrix c = Matrix::Constant(n, n, scale);
  c.diagonal().setZero();
  return CostMatrix(c, scale > 0.0 ? CostKind::metric : CostKind::general);
}

CostMatrix CostMatrix::line(Index n) {
  Matrix c(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) c(i, j) = static_cast<Real>(std::abs(i - j));
  return CostMatrix(c, n > 1 ? CostKind::metric : CostKind::general);
}

CostMatrix CostMatrix::euclidean(const Matrix& coords) {
  const Index n = coords.rows();
  Matrix c(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) c(i, j) = (coords.row(i) - coords.row(j)).norm();
  // Distinct points give a metric; repeated points only a semimetric.
  bool distinct = true;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) distinct = distinct && c(i, j) > 0.0;
  return CostMatrix(c, distinct ? CostKind::metric : CostKind::general);
}

CostMatrix CostMatrix::power(const CostMatrix& d, Real p) {
  if (p < 1.0) throw std::invalid_argument("CostMatrix::power: p must be >= 1");
  Matrix c = d.matrix().array().pow(p).matrix();
  return CostMatrix(c, p == 1.0 ? d.kind() : CostKind::general);
}

Real relative_entropy(const ProbMeasure& nu, const ProbMeasure& mu) {
  require_same_size(nu, mu, "relative_entropy");
  Real h = 0.0;
  for (Index i = 0; i < nu.size(); ++i) {
    const Real p = nu[i];
    if (p <= 0.0) continue;
    if (mu[i] <= 0.0) return kInf;
    h += p * std::log(p / mu[i]);
  }
  // Rounding can leave tiny negatives when nu == mu.
  return std::max<Real>(h, 0.0);
}

Real tv_norm(const ProbMeasure& nu, const ProbMeasure& mu) {
  require_same_size(nu, mu, "tv_norm");
  return (nu.weights() - mu.weights()).cwiseAbs().sum();
}

Real weighted_tv(const ProbMeasure& nu, const ProbMeasure& mu, const Vector& chi) {
  require_same_size(nu, mu, "weighted_tv");
  if (chi.size() != nu.size()) throw DimensionMismatch("weighted_tv: weight vector has the wrong size");
  if ((chi.array() < 0.0).any()) throw std::invalid_argument("weighted_tv: negative weight entry");
  return chi.dot((nu.weights() - mu.weights()).cwiseAbs());
}

ProbMeasure product_measure(const ProbMeasure& mu1, const ProbMeasure& mu2) {
  const Index n1 = mu1.size();
  const Index n2 = mu2.size();
  Vector w(n1 * n2);
  for (Index i = 0; i < n1; ++i)
    for (Index j = 0; j < n2; ++j) w[i * n2 + j] = mu1[i] * mu2[j];
  // Products of normalized weights sum to 1 up to rounding; renormalize.
  w /= w.sum();
  return ProbMeasure(FiniteSpace::product(*mu1.space(), *mu2.space()), w);
}

Disintegration disintegrate(const ProbMeasure& nu) {
  if (!nu.space()->is_product()) throw std::invalid_argument("disintegrate: space is not a product");
  const auto [n1, n2] = nu.space()->factors();
  Vector first(n1);
  std::vector<ProbMeasure> kernels;
  std::vector<bool> placeholder;
  kernels.reserve(static_cast<std::size_t>(n1));
  for (Index i = 0; i < n1; ++i) {
    const Vector row = nu.weights().segment(i * n2, n2);
    const Real m = row.sum();
    first[i] = m;
    if (m > 0.0) {
      kernels.emplace_back(Vector(row / m));
      placeholder.push_back(false);
    } else {
      kernels.push_back(ProbMeasure::uniform(n2));
      placeholder.push_back(true);
    }
  }
  first /= first.sum();
  return Disintegration{ProbMeasure(first), std::move(kernels), std::move(placeholder)};
}

ProbMeasure second_marginal(const ProbMeasure& nu) {
  if (!nu.space()->is_product()) throw std::invalid_argument("second_marginal: space is not a product");
  const auto [n1, n2] = nu.space()->factors();
  Vector second = Vector::Zero(n2);
  for (Index i = 0; i < n1; ++i) second += nu.weights().segment(i * n2, n2);
  second /= second.sum();
  return ProbMeasure(second);
}

ProbMeasure restrict_to(const ProbMeasure& mu, const PointSet& a) {
  Vector w = Vector::Zero(mu.size());
  for (Index i : a) {
    if (i < 0 || i >= mu.size()) throw DimensionMismatch("restrict_to: index outside the space");
    w[i] = mu[i];
  }
  const Real m = w.sum();
  if (m <= 0.0) throw std::invalid_argument("restrict_to: mu(A) = 0");
  return ProbMeasure(mu.space(), w / m);
}

}  // namespace tcikit
