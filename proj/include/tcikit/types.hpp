#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace tcikit {

using Real = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Extended-real +infinity. Values of H(nu|mu), rate functions and conjugates
/// may take it; it is never replaced by a large finite sentinel.
inline constexpr Real kInf = std::numeric_limits<Real>::infinity();

inline bool is_finite(Real x) { return x < kInf && x > -kInf; }

/// Operand shapes do not agree (measures on different spaces, cost of the
/// wrong size, ...).
class DimensionMismatch : public std::invalid_argument {
 public:
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

/// A function handed to a class-C operation is not convex/increasing/
/// left-continuous with value 0 at 0.
class NotInClassC : public std::invalid_argument {
 public:
  explicit NotInClassC(const std::string& what) : std::invalid_argument(what) {}
};

/// An enumeration (simplex grid, subset sweep, vertex list) would exceed its
/// configured budget.
class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tcikit
