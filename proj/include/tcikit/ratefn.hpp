#pragma once

#include "tcikit/types.hpp"

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace tcikit {

class RateFunction;

namespace rate {

struct Zero {};
/// a t^2
struct Quadratic {
  Real a;
};
/// a t
struct Linear {
  Real a;
};
/// 0 on [0, a], +inf beyond.
struct Indicator {
  Real a;
};
/// (sqrt(t/M + 1) - 1)^2
struct SqrtForm {
  Real m;
};
/// (M s)^2 / (1 - M s) on [0, 1/M), +inf from 1/M on.
struct Bernstein {
  Real m;
};
/// Piecewise linear through (t_k, v_k), t_0 = 0. Beyond t_K the function
/// continues with slope tail_slope up to domain_end (inclusive), +inf after.
struct Sampled {
  std::vector<Real> t;
  std::vector<Real> v;
  Real domain_end;
  Real tail_slope;
};
struct Max {
  std::vector<RateFunction> of;
};
struct Sum {
  std::vector<RateFunction> of;
};
/// max(0, outer * f(inner * t) - shift)
struct Rescaled {
  std::shared_ptr<const RateFunction> f;
  Real outer;
  Real inner;
  Real shift;
};

using Node = std::variant<Zero, Quadratic, Linear, Indicator, SqrtForm, Bernstein, Sampled, Max, Sum, Rescaled>;

}  // namespace rate

/// Uniform lattice k * span / intervals used whenever a closed form has to be
/// sampled.
struct SamplingLattice {
  Real span = 32.0;
  int intervals = 1024;
  Real step() const { return span / intervals; }
};

/// Member of the class C: convex, nondecreasing, left continuous on [0, inf),
/// zero at zero, valued in [0, +inf].
class RateFunction {
 public:
  RateFunction();

  static RateFunction zero();
  static RateFunction quadratic(Real a);
  static RateFunction pinsker() { return quadratic(0.5); }
  static RateFunction linear(Real a);
  static RateFunction indicator(Real a);
  static RateFunction sqrt_form(Real m);
  static RateFunction bernstein(Real m);
  /// Validated piecewise-linear data; throws NotInClassC.
  static RateFunction sampled(std::vector<Real> t, std::vector<Real> v, Real domain_end, Real tail_slope = 0.0);
  static RateFunction max_of(std::vector<RateFunction> of);
  static RateFunction sum_of(std::vector<RateFunction> of);
  static RateFunction rescaled(const RateFunction& f, Real outer, Real inner, Real shift = 0.0);
  /// Wraps an already-computed node without validation; the caller
  /// guarantees membership in C (used for results of exact transforms).
  static RateFunction from_node(rate::Node node) { return RateFunction(std::move(node)); }
  /// max(0, f(t) - k)
  static RateFunction shifted_floor(const RateFunction& f, Real k) { return rescaled(f, 1.0, 1.0, k); }

  Real operator()(Real t) const;
  const rate::Node& node() const { return *node_; }

  /// sup{t : f(t) < inf}; domain_closed() tells whether f is finite there.
  Real domain_end() const;
  bool domain_closed() const;
  /// lim_{t -> inf} f(t)
  Real supremum() const;
  bool is_sampled() const { return std::holds_alternative<rate::Sampled>(*node_); }
  const rate::Sampled& samples() const { return std::get<rate::Sampled>(*node_); }

  std::string describe() const;

 private:
  explicit RateFunction(rate::Node node);
  std::shared_ptr<const rate::Node> node_;
};

inline Real eval(const RateFunction& f, Real t) { return f(t); }

/// alpha^*(s) = sup_{t >= 0} (s t - alpha(t)); closed-form table first,
/// exact piecewise-linear Legendre transform otherwise.
RateFunction monotone_conjugate(const RateFunction& f, const SamplingLattice& lattice = {});
/// f + g, closed forms where available, exact piecewise-linear sum otherwise.
RateFunction sum(const RateFunction& f, const RateFunction& g, const SamplingLattice& lattice = {});
/// (f box g)(t) = inf_{t1 + t2 = t} f(t1) + g(t2), as (f^* + g^*)^*.
RateFunction inf_convolution(const RateFunction& f, const RateFunction& g, const SamplingLattice& lattice = {});
RateFunction pointwise_max(const RateFunction& f, const RateFunction& g);
/// inf{t >= 0 : f(t) >= y}. Throws std::domain_error when y exceeds sup f.
Real generalized_inverse(const RateFunction& f, Real y);
/// Piecewise-linear version of f: exact for piecewise-linear trees, lattice
/// chords for the other closed forms.
RateFunction to_sampled(const RateFunction& f, const SamplingLattice& lattice = {});
/// The breakpoint data of to_sampled(f).
rate::Sampled sampled_data(const RateFunction& f, const SamplingLattice& lattice = {});
/// Evaluates raw piecewise-linear data (value at 0 may be positive).
Real eval(const rate::Sampled& piece, Real t);

/// Nondecreasing, left-continuous, zero at zero; not necessarily convex.
class IncreasingFunction {
 public:
  /// Pointwise minimum of convex nondecreasing piecewise-linear pieces. A
  /// piece may be positive at 0, but at least one piece must vanish there.
  struct Envelope {
    std::vector<rate::Sampled> of;
  };
  /// f(0) = 0 and f(t) = v_k on (t_{k-1}, t_k] (t_0 = 0). Past t_K the value
  /// is v_K when tail is set and +inf otherwise.
  struct Step {
    std::vector<Real> t;
    std::vector<Real> v;
    bool tail = false;
  };
  /// Piecewise linear through (t_k, v_k), +inf past t_K.
  struct Grid {
    std::vector<Real> t;
    std::vector<Real> v;
  };

  explicit IncreasingFunction(Envelope e);
  explicit IncreasingFunction(Step s);
  explicit IncreasingFunction(Grid g);
  explicit IncreasingFunction(const RateFunction& f) : IncreasingFunction(Envelope{{sampled_data(f)}}) {}
  static IncreasingFunction envelope_of(const std::vector<RateFunction>& fs, const SamplingLattice& lattice = {});

  Real operator()(Real t) const;
  const std::variant<Envelope, Step, Grid>& data() const { return data_; }

 private:
  std::variant<Envelope, Step, Grid> data_;
};

/// Greatest convex lower semicontinuous minorant, as the lower convex hull of
/// the graph (exact for envelopes of piecewise-linear members, steps and grids).
RateFunction convex_regularization(const IncreasingFunction& f, const SamplingLattice& lattice = {});

}  // namespace tcikit
