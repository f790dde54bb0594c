#pragma once

// Dense two-phase tableau simplex with Bland's rule, templated on the scalar
// so that the same code runs in double precision and in exact rational
// arithmetic (e.g. boost::multiprecision::cpp_rational).
//
//   minimize  c^T x   subject to  A x = b,  x >= 0.

#include <cmath>
#include <cstddef>
#include <type_traits>
#include <utility>
#include <vector>

namespace tcikit::lp {

enum class Status { optimal, infeasible, unbounded };

template <typename Scalar>
struct Problem {
  std::vector<std::vector<Scalar>> a;  // rows x cols
  std::vector<Scalar> b;
  std::vector<Scalar> c;
};

template <typename Scalar>
struct Solution {
  Status status = Status::infeasible;
  Scalar value{};
  std::vector<Scalar> x;
  std::size_t pivots = 0;
};

template <typename Scalar>
struct Tolerance {
  static bool positive(const Scalar& v) {
    if constexpr (std::is_floating_point_v<Scalar>) return v > Scalar(1e-11);
    else return v > Scalar(0);
  }
  static bool negative(const Scalar& v) {
    if constexpr (std::is_floating_point_v<Scalar>) return v < Scalar(-1e-11);
    else return v < Scalar(0);
  }
  static bool zero(const Scalar& v) { return !positive(v) && !negative(v); }
};

namespace detail {

template <typename Scalar>
class Tableau {
  using Tol = Tolerance<Scalar>;

 public:
  Tableau(const Problem<Scalar>& p) : m_(p.b.size()), n_(p.c.size()), width_(n_ + m_ + 1) {
    t_.assign(m_ * width_, Scalar(0));
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      const bool flip = p.b[i] < Scalar(0);
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = flip ? Scalar(-p.a[i][j]) : p.a[i][j];
      at(i, n_ + i) = Scalar(1);
      rhs(i) = flip ? Scalar(-p.b[i]) : p.b[i];
      basis_[i] = n_ + i;
    }
    active_.assign(m_, true);
  }

  Solution<Scalar> solve(const std::vector<Scalar>& cost, std::size_t max_pivots) {
    Solution<Scalar> out;
    // Phase 1: minimize the sum of artificials.
    std::vector<Scalar> phase1(n_ + m_, Scalar(0));
    for (std::size_t i = 0; i < m_; ++i) phase1[n_ + i] = Scalar(1);
    if (!run(phase1, n_ + m_, max_pivots, out.pivots)) {
      out.status = Status::unbounded;  // cannot happen in phase 1
      return out;
    }
    Scalar infeas(0);
    for (std::size_t i = 0; i < m_; ++i)
      if (active_[i] && basis_[i] >= n_) infeas += rhs(i);
    if (Tol::positive(infeas)) {
      out.status = Status::infeasible;
      return out;
    }
    // Drive zero-level artificials out of the basis; drop redundant rows.
    for (std::size_t i = 0; i < m_; ++i) {
      if (!active_[i] || basis_[i] < n_) continue;
      std::size_t col = n_;
      for (std::size_t j = 0; j < n_; ++j)
        if (!Tol::zero(at(i, j))) {
          col = j;
          break;
        }
      if (col == n_) active_[i] = false;
      else pivot(i, col), ++out.pivots;
    }
    std::vector<Scalar> phase2(n_ + m_, Scalar(0));
    for (std::size_t j = 0; j < n_; ++j) phase2[j] = cost[j];
    if (!run(phase2, n_, max_pivots, out.pivots)) {
      out.status = Status::unbounded;
      return out;
    }
    out.status = Status::optimal;
    out.x.assign(n_, Scalar(0));
    for (std::size_t i = 0; i < m_; ++i)
      if (active_[i] && basis_[i] < n_) out.x[basis_[i]] = rhs(i);
    out.value = Scalar(0);
    for (std::size_t j = 0; j < n_; ++j) out.value += cost[j] * out.x[j];
    return out;
  }

 private:
  Scalar& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
  Scalar& rhs(std::size_t i) { return t_[i * width_ + width_ - 1]; }

  void pivot(std::size_t r, std::size_t col) {
    const Scalar inv = Scalar(1) / at(r, col);
    for (std::size_t j = 0; j < width_; ++j) at(r, j) *= inv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || !active_[i]) continue;
      const Scalar f = at(i, col);
      if (f == Scalar(0)) continue;
      for (std::size_t j = 0; j < width_; ++j) at(i, j) -= f * at(r, j);
    }
    basis_[r] = col;
  }

  // Bland's rule: lowest-index improving column, lowest-basis-index leaving row.
  bool run(const std::vector<Scalar>& cost, std::size_t allowed, std::size_t max_pivots, std::size_t& pivots) {
    while (pivots < max_pivots) {
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed && enter == allowed; ++j) {
        Scalar reduced = cost[j];
        for (std::size_t i = 0; i < m_; ++i)
          if (active_[i]) reduced -= cost[basis_[i]] * at(i, j);
        if (Tol::negative(reduced)) enter = j;
      }
      if (enter == allowed) return true;
      std::size_t leave = m_;
      Scalar best{};
      for (std::size_t i = 0; i < m_; ++i) {
        if (!active_[i] || !Tol::positive(at(i, enter))) continue;
        const Scalar ratio = rhs(i) / at(i, enter);
        if (leave == m_ || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
      ++pivots;
    }
    return true;
  }

  std::size_t m_, n_, width_;
  std::vector<Scalar> t_;
  std::vector<std::size_t> basis_;
  std::vector<bool> active_;
};

}  // namespace detail

template <typename Scalar>
Solution<Scalar> minimize(const Problem<Scalar>& problem, std::size_t max_pivots = 1000000) {
  detail::Tableau<Scalar> tableau(problem);
  return tableau.solve(problem.c, max_pivots);
}

}  // namespace tcikit::lp
