#include "tcikit/ratefn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tcikit {

using namespace rate;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Real slope_tol(Real s) { return 1e-9 * std::max<Real>(1.0, std::abs(s)); }

Real eval_sampled(const Sampled& s, Real t) {
  const std::size_t last = s.t.size() - 1;
  if (t >= s.t[last]) {
    if (t == s.t[last]) return s.v[last];
    if (t > s.domain_end) return kInf;
    return s.v[last] + s.tail_slope * (t - s.t[last]);
  }
  const auto it = std::upper_bound(s.t.begin(), s.t.end(), t);
  const auto k = static_cast<std::size_t>(it - s.t.begin());
  const Real t0 = s.t[k - 1], t1 = s.t[k];
  const Real w = (t - t0) / (t1 - t0);
  return s.v[k - 1] + w * (s.v[k] - s.v[k - 1]);
}

struct Point {
  Real t, v;
};

// Lower convex hull of points sorted by t (duplicates in t keep the lowest v).
std::vector<Point> lower_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.t < b.t || (a.t == b.t && a.v < b.v); });
  std::vector<Point> uniq;
  for (const auto& p : pts)
    if (uniq.empty() || p.t > uniq.back().t) uniq.push_back(p);
  std::vector<Point> hull;
  for (const auto& p : uniq) {
    while (hull.size() >= 2) {
      const Point& a = hull[hull.size() - 2];
      const Point& b = hull.back();
      const Real s1 = (b.v - a.v) / (b.t - a.t);
      const Real s2 = (p.v - b.v) / (p.t - b.t);
      if (s1 >= s2 - 1e-12 * std::max<Real>(1.0, std::abs(s2))) hull.pop_back();
      else break;
    }
    hull.push_back(p);
  }
  return hull;
}

// Builds a Sampled node from computed data, repairing rounding: drops points
// that are too close, enforces monotone values, clamps v_0 to zero.
Sampled tidy(std::vector<Real> t, std::vector<Real> v, Real domain_end, Real tail_slope) {
  Sampled out;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!out.t.empty() && t[k] - out.t.back() <= 1e-13 * std::max<Real>(1.0, std::abs(t[k]))) {
      out.v.back() = std::max(out.v.back(), v[k]);
      continue;
    }
    out.t.push_back(t[k]);
    out.v.push_back(v[k]);
  }
  out.t[0] = 0.0;
  out.v[0] = 0.0;
  for (std::size_t k = 1; k < out.v.size(); ++k) out.v[k] = std::max(out.v[k], out.v[k - 1]);
  out.domain_end = std::max(domain_end, out.t.back());
  out.tail_slope = out.domain_end > out.t.back() ? std::max<Real>(tail_slope, 0.0) : 0.0;
  return out;
}

Sampled sampled_from_hull(const std::vector<Point>& hull, Real domain_end, Real tail_slope) {
  std::vector<Real> t, v;
  for (const auto& p : hull) t.push_back(p.t), v.push_back(p.v);
  return tidy(std::move(t), std::move(v), domain_end, tail_slope);
}

}  // namespace

RateFunction::RateFunction() : node_(std::make_shared<const Node>(Zero{})) {}
RateFunction::RateFunction(Node node) : node_(std::make_shared<const Node>(std::move(node))) {}

RateFunction RateFunction::zero() { return RateFunction(Zero{}); }

RateFunction RateFunction::quadratic(Real a) {
  if (!(a >= 0.0) || !is_finite(a)) throw NotInClassC("quadratic: need a >= 0");
  return a == 0.0 ? zero() : RateFunction(Quadratic{a});
}

RateFunction RateFunction::linear(Real a) {
  if (!(a >= 0.0) || !is_finite(a)) throw NotInClassC("linear: need a >= 0");
  return a == 0.0 ? zero() : RateFunction(Linear{a});
}

RateFunction RateFunction::indicator(Real a) {
  if (!(a >= 0.0)) throw NotInClassC("indicator: need a >= 0");
  return is_finite(a) ? RateFunction(Indicator{a}) : zero();
}

RateFunction RateFunction::sqrt_form(Real m) {
  if (!(m > 0.0) || !is_finite(m)) throw NotInClassC("sqrt_form: need M > 0");
  return RateFunction(SqrtForm{m});
}

RateFunction RateFunction::bernstein(Real m) {
  if (!(m > 0.0) || !is_finite(m)) throw NotInClassC("bernstein: need M > 0");
  return RateFunction(Bernstein{m});
}

RateFunction RateFunction::sampled(std::vector<Real> t, std::vector<Real> v, Real domain_end, Real tail_slope) {
  if (t.empty() || t.size() != v.size()) throw NotInClassC("sampled: t and v must be nonempty and of equal length");
  if (t[0] != 0.0) throw NotInClassC("sampled: first breakpoint must be t = 0");
  if (std::abs(v[0]) > 1e-12) throw NotInClassC("sampled: value at 0 must be 0");
  v[0] = 0.0;
  Real prev_slope = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!std::isfinite(t[k]) || !std::isfinite(v[k])) throw NotInClassC("sampled: breakpoints must be finite");
    if (!(t[k] > t[k - 1])) throw NotInClassC("sampled: t must be strictly increasing");
    const Real slope = (v[k] - v[k - 1]) / (t[k] - t[k - 1]);
    if (slope < -slope_tol(0.0)) throw NotInClassC("sampled: values must be nondecreasing");
    if (slope < prev_slope - slope_tol(prev_slope)) {
      std::ostringstream msg;
      msg << "sampled: not convex at t = " << t[k - 1];
      throw NotInClassC(msg.str());
    }
    prev_slope = std::max<Real>(slope, 0.0);
    v[k] = std::max(v[k], v[k - 1]);
  }
  if (!(domain_end >= t.back())) throw NotInClassC("sampled: domain_end precedes the last breakpoint");
  if (domain_end > t.back()) {
    if (!std::isfinite(tail_slope) || tail_slope < prev_slope - slope_tol(prev_slope))
      throw NotInClassC("sampled: tail slope breaks convexity");
  } else {
    tail_slope = 0.0;
  }
  return RateFunction(Sampled{std::move(t), std::move(v), domain_end, std::max<Real>(tail_slope, 0.0)});
}

RateFunction RateFunction::max_of(std::vector<RateFunction> of) {
  std::vector<RateFunction> flat;
  for (auto& f : of) {
    if (std::holds_alternative<Zero>(f.node())) continue;
    if (const auto* m = std::get_if<Max>(&f.node())) flat.insert(flat.end(), m->of.begin(), m->of.end());
    else flat.push_back(f);
  }
  if (flat.empty()) return zero();
  if (flat.size() == 1) return flat[0];
  return RateFunction(Max{std::move(flat)});
}

RateFunction RateFunction::sum_of(std::vector<RateFunction> of) {
  std::vector<RateFunction> flat;
  for (auto& f : of) {
    if (std::holds_alternative<Zero>(f.node())) continue;
    if (const auto* s = std::get_if<Sum>(&f.node())) flat.insert(flat.end(), s->of.begin(), s->of.end());
    else flat.push_back(f);
  }
  if (flat.empty()) return zero();
  if (flat.size() == 1) return flat[0];
  return RateFunction(Sum{std::move(flat)});
}

RateFunction RateFunction::rescaled(const RateFunction& f, Real outer, Real inner, Real shift) {
  if (!(outer > 0.0) || !(inner > 0.0) || !(shift >= 0.0) || !is_finite(outer) || !is_finite(inner))
    throw NotInClassC("rescaled: need outer > 0, inner > 0, shift >= 0");
  if (std::holds_alternative<Zero>(f.node())) return zero();
  if (!is_finite(shift)) return zero();
  if (outer == 1.0 && inner == 1.0 && shift == 0.0) return f;
  if (shift == 0.0) {
    if (const auto* q = std::get_if<Quadratic>(&f.node())) return quadratic(q->a * outer * inner * inner);
    if (const auto* l = std::get_if<Linear>(&f.node())) return linear(l->a * outer * inner);
    if (const auto* i = std::get_if<Indicator>(&f.node())) return indicator(i->a / inner);
  }
  return RateFunction(Rescaled{std::make_shared<const RateFunction>(f), outer, inner, shift});
}

Real RateFunction::operator()(Real t) const {
  if (!(t >= 0.0)) throw std::domain_error("rate function evaluated at negative t");
  return std::visit(overloaded{
                        [](const Zero&) { return 0.0; },
                        [t](const Quadratic& q) { return q.a * t * t; },
                        [t](const Linear& l) { return l.a * t; },
                        [t](const Indicator& i) { return t <= i.a ? 0.0 : kInf; },
                        [t](const SqrtForm& s) {
                          if (!is_finite(t)) return kInf;
                          const Real x = t / s.m;
                          const Real u = x / (std::sqrt(x + 1.0) + 1.0);
                          return u * u;
                        },
                        [t](const Bernstein& b) {
                          const Real u = b.m * t;
                          return u < 1.0 ? u * u / (1.0 - u) : kInf;
                        },
                        [t](const Sampled& s) { return eval_sampled(s, t); },
                        [t](const Max& m) {
                          Real best = 0.0;
                          for (const auto& f : m.of) best = std::max(best, f(t));
                          return best;
                        },
                        [t](const Sum& s) {
                          Real total = 0.0;
                          for (const auto& f : s.of) total += f(t);
                          return total;
                        },
                        [t](const Rescaled& r) {
                          const Real inner = (*r.f)(r.inner * t);
                          if (!is_finite(inner)) return kInf;
                          return std::max<Real>(0.0, r.outer * inner - r.shift);
                        },
                    },
                    *node_);
}

Real RateFunction::domain_end() const {
  return std::visit(overloaded{
                        [](const Indicator& i) { return i.a; },
                        [](const Bernstein& b) { return 1.0 / b.m; },
                        [](const Sampled& s) { return s.domain_end; },
                        [](const Max& m) {
                          Real d = kInf;
                          for (const auto& f : m.of) d = std::min(d, f.domain_end());
                          return d;
                        },
                        [](const Sum& s) {
                          Real d = kInf;
                          for (const auto& f : s.of) d = std::min(d, f.domain_end());
                          return d;
                        },
                        [](const Rescaled& r) { return r.f->domain_end() / r.inner; },
                        [](const auto&) { return kInf; },
                    },
                    *node_);
}

bool RateFunction::domain_closed() const {
  const Real d = domain_end();
  return std::visit(overloaded{
                        [](const Bernstein&) { return false; },
                        [d](const Max& m) {
                          for (const auto& f : m.of)
                            if (f.domain_end() == d && !f.domain_closed()) return false;
                          return true;
                        },
                        [d](const Sum& s) {
                          for (const auto& f : s.of)
                            if (f.domain_end() == d && !f.domain_closed()) return false;
                          return true;
                        },
                        [](const Rescaled& r) { return r.f->domain_closed(); },
                        [](const auto&) { return true; },
                    },
                    *node_);
}

Real RateFunction::supremum() const {
  return std::visit(overloaded{
                        [](const Zero&) { return 0.0; },
                        [](const Sampled& s) {
                          if (is_finite(s.domain_end)) return kInf;
                          return s.tail_slope > 0.0 ? kInf : s.v.back();
                        },
                        [](const Max& m) {
                          Real best = 0.0;
                          for (const auto& f : m.of) best = std::max(best, f.supremum());
                          return best;
                        },
                        [](const Sum& s) {
                          Real total = 0.0;
                          for (const auto& f : s.of) total += f.supremum();
                          return total;
                        },
                        [](const Rescaled& r) {
                          const Real inner = r.f->supremum();
                          return is_finite(inner) ? std::max<Real>(0.0, r.outer * inner - r.shift) : kInf;
                        },
                        [](const auto&) { return kInf; },
                    },
                    *node_);
}

std::string RateFunction::describe() const {
  std::ostringstream out;
  out.precision(10);
  std::visit(overloaded{
                 [&](const Zero&) { out << "zero"; },
                 [&](const Quadratic& q) { out << "quadratic(a=" << q.a << ")"; },
                 [&](const Linear& l) { out << "linear(a=" << l.a << ")"; },
                 [&](const Indicator& i) { out << "indicator(a=" << i.a << ")"; },
                 [&](const SqrtForm& s) { out << "sqrt(M=" << s.m << ")"; },
                 [&](const Bernstein& b) { out << "bernstein(M=" << b.m << ")"; },
                 [&](const Sampled& s) {
                   out << "sampled(" << s.t.size() << " points, domain_end=" << s.domain_end << ")";
                 },
                 [&](const Max& m) {
                   out << "max(";
                   for (std::size_t i = 0; i < m.of.size(); ++i) out << (i ? ", " : "") << m.of[i].describe();
                   out << ")";
                 },
                 [&](const Sum& s) {
                   out << "sum(";
                   for (std::size_t i = 0; i < s.of.size(); ++i) out << (i ? ", " : "") << s.of[i].describe();
                   out << ")";
                 },
                 [&](const Rescaled& r) {
                   out << "max(0, " << r.outer << " * " << r.f->describe() << "(" << r.inner << " t) - " << r.shift
                       << ")";
                 },
             },
             *node_);
  return out.str();
}

// ---------------------------------------------------------------------------
// Piecewise-linear machinery.

namespace {

Sampled lattice_sample(const RateFunction& f, const SamplingLattice& lattice) {
  const Real d = f.domain_end();
  const bool closed = f.domain_closed();
  const Real h = lattice.step();
  std::vector<Real> t, v;
  for (int k = 0; k <= lattice.intervals; ++k) {
    const Real x = k * h;
    if (x > d || (x == d && !closed)) break;
    t.push_back(x);
    v.push_back(f(x));
  }
  if (d <= lattice.span) {
    if (closed && t.back() < d) {
      t.push_back(d);
      v.push_back(f(d));
    }
    const Real end = t.back();
    return tidy(std::move(t), std::move(v), end, 0.0);
  }
  const std::size_t last = t.size() - 1;
  const Real tail = last > 0 ? (v[last] - v[last - 1]) / (t[last] - t[last - 1]) : 0.0;
  return tidy(std::move(t), std::move(v), d, tail);
}

Sampled pl_rescale(const Sampled& f, Real outer, Real inner, Real shift) {
  std::vector<Real> t, v;
  const std::size_t last = f.t.size() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    const Real h = outer * f.v[k] - shift;
    if (k > 0 && h > 0.0) {
      const Real hp = outer * f.v[k - 1] - shift;
      if (hp < 0.0) {
        // zero crossing inside the segment
        const Real w = -hp / (h - hp);
        t.push_back((f.t[k - 1] + w * (f.t[k] - f.t[k - 1])) / inner);
        v.push_back(0.0);
      }
    }
    t.push_back(f.t[k] / inner);
    v.push_back(std::max<Real>(0.0, h));
  }
  const Real domain = f.domain_end / inner;
  Real tail = outer * inner * f.tail_slope;
  const Real h_last = outer * f.v[last] - shift;
  if (h_last < 0.0 && domain > t.back()) {
    const Real slope = tail;
    if (slope > 0.0) {
      const Real cross = t.back() - h_last / slope;
      if (cross < domain) {
        t.push_back(cross);
        v.push_back(0.0);
      } else {
        if (is_finite(domain)) {
          t.push_back(domain);
          v.push_back(0.0);
        }
        tail = 0.0;
      }
    } else {
      tail = 0.0;
    }
  }
  return tidy(std::move(t), std::move(v), domain, tail);
}

// Exact max or sum of piecewise-linear members.
Sampled pl_combine(const std::vector<Sampled>& fs, bool is_max) {
  Real domain = kInf;
  for (const auto& f : fs) domain = std::min(domain, f.domain_end);
  std::vector<Real> cand;
  for (const auto& f : fs)
    for (Real x : f.t)
      if (x <= domain) cand.push_back(x);
  if (is_finite(domain)) cand.push_back(domain);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  auto value = [&](const Sampled& f, Real x) { return eval_sampled(f, x); };
  std::vector<Real> pts = cand;
  if (is_max) {
    for (std::size_t k = 1; k < cand.size(); ++k) {
      const Real a = cand[k - 1], b = cand[k];
      for (std::size_t i = 0; i < fs.size(); ++i)
        for (std::size_t j = i + 1; j < fs.size(); ++j) {
          const Real da = value(fs[i], a) - value(fs[j], a);
          const Real db = value(fs[i], b) - value(fs[j], b);
          if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) pts.push_back(a + (b - a) * da / (da - db));
        }
    }
  }
  Real tail = 0.0;
  if (!is_finite(domain)) {
    const Real start = cand.back();
    if (is_max) {
      // Pairwise crossings of the tail lines.
      for (std::size_t i = 0; i < fs.size(); ++i)
        for (std::size_t j = i + 1; j < fs.size(); ++j) {
          const Real di = value(fs[i], start) - value(fs[j], start);
          const Real ds = fs[i].tail_slope - fs[j].tail_slope;
          if (ds != 0.0) {
            const Real x = start - di / ds;
            if (x > start) pts.push_back(x);
          }
        }
      for (const auto& f : fs) tail = std::max(tail, f.tail_slope);
    } else {
      for (const auto& f : fs) tail += f.tail_slope;
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<Real> v;
  for (Real x : pts) {
    Real acc = 0.0;
    for (const auto& f : fs) acc = is_max ? std::max(acc, value(f, x)) : acc + value(f, x);
    v.push_back(acc);
  }
  return tidy(std::move(pts), std::move(v), domain, tail);
}

Sampled sample_node(const RateFunction& f, const SamplingLattice& lattice) {
  return std::visit(overloaded{
                        [](const Zero&) { return Sampled{{0.0}, {0.0}, kInf, 0.0}; },
                        [](const Linear& l) { return Sampled{{0.0}, {0.0}, kInf, l.a}; },
                        [](const Indicator& i) {
                          return i.a > 0.0 ? Sampled{{0.0, i.a}, {0.0, 0.0}, i.a, 0.0} : Sampled{{0.0}, {0.0}, 0.0, 0.0};
                        },
                        [](const Sampled& s) { return s; },
                        [&](const Max& m) {
                          std::vector<Sampled> parts;
                          for (const auto& g : m.of) parts.push_back(sample_node(g, lattice));
                          return pl_combine(parts, true);
                        },
                        [&](const Sum& s) {
                          std::vector<Sampled> parts;
                          for (const auto& g : s.of) parts.push_back(sample_node(g, lattice));
                          return pl_combine(parts, false);
                        },
                        [&](const Rescaled& r) {
                          // Sample the inner function on a lattice scaled to the outer variable.
                          SamplingLattice inner = lattice;
                          inner.span = lattice.span * r.inner;
                          return pl_rescale(sample_node(*r.f, inner), r.outer, r.inner, r.shift);
                        },
                        [&](const auto&) { return lattice_sample(f, lattice); },
                    },
                    f.node());
}

// Exact Legendre transform restricted to s >= 0 of a piecewise-linear function.
Sampled pl_conjugate(const Sampled& f) {
  std::vector<Point> pts;
  for (std::size_t k = 0; k < f.t.size(); ++k) pts.push_back({f.t[k], f.v[k]});
  const std::vector<Point> hull = lower_hull(pts);
  // Convex data: the hull is the data itself; anything below would mean f was
  // not convex, in which case the conjugate of the hull is still f^*.
  std::vector<Real> s{0.0}, val{0.0};
  auto push = [&](Real slope, Real value) {
    if (slope > s.back()) {
      s.push_back(slope);
      val.push_back(std::max<Real>(value, val.back()));
    }
  };
  for (std::size_t k = 1; k < hull.size(); ++k) {
    const Real m = (hull[k].v - hull[k - 1].v) / (hull[k].t - hull[k - 1].t);
    push(m, m * hull[k - 1].t - hull[k - 1].v);
  }
  const Point end = hull.back();
  if (f.domain_end > end.t) {
    push(f.tail_slope, f.tail_slope * end.t - end.v);
    if (!is_finite(f.domain_end)) {
      // conjugate is +inf past the tail slope
      const Real last_s = s.back();
      return tidy(std::move(s), std::move(val), last_s, 0.0);
    }
    const Real d = f.domain_end;
    // At slopes past the tail slope the sup sits at t = D.
    return tidy(std::move(s), std::move(val), kInf, d);
  }
  return tidy(std::move(s), std::move(val), kInf, end.t);
}

}  // namespace

rate::Sampled sampled_data(const RateFunction& f, const SamplingLattice& lattice) { return sample_node(f, lattice); }

Real eval(const rate::Sampled& piece, Real t) { return eval_sampled(piece, t); }

RateFunction to_sampled(const RateFunction& f, const SamplingLattice& lattice) {
  if (f.is_sampled()) return f;
  Sampled s = sample_node(f, lattice);
  return RateFunction::from_node(std::move(s));
}

RateFunction monotone_conjugate(const RateFunction& f, const SamplingLattice& lattice) {
  const Node& n = f.node();
  if (std::holds_alternative<Zero>(n)) return RateFunction::indicator(0.0);
  if (const auto* i = std::get_if<Indicator>(&n)) return RateFunction::linear(i->a);
  if (const auto* l = std::get_if<Linear>(&n)) return RateFunction::indicator(l->a);
  if (const auto* q = std::get_if<Quadratic>(&n)) return RateFunction::quadratic(1.0 / (4.0 * q->a));
  if (const auto* s = std::get_if<SqrtForm>(&n)) return RateFunction::bernstein(s->m);
  if (const auto* b = std::get_if<Bernstein>(&n)) return RateFunction::sqrt_form(b->m);
  if (const auto* r = std::get_if<Rescaled>(&n); r && r->shift == 0.0 && !r->f->is_sampled()) {
    // (a f(b t))^* (s) = a f^*(s / (a b))
    return RateFunction::rescaled(monotone_conjugate(*r->f, lattice), r->outer, 1.0 / (r->outer * r->inner));
  }
  Sampled c = pl_conjugate(sample_node(f, lattice));
  return RateFunction::from_node(std::move(c));
}

namespace {

// f = outer * base(inner * t) with no shift.
struct Scaled {
  const RateFunction* base;
  Real outer;
  Real inner;
};

Scaled as_scaled(const RateFunction& f) {
  if (const auto* r = std::get_if<Rescaled>(&f.node()); r && r->shift == 0.0) return {r->f.get(), r->outer, r->inner};
  return {&f, 1.0, 1.0};
}

bool same_form(const RateFunction& a, const RateFunction& b) {
  if (&a.node() == &b.node()) return true;
  const Node& x = a.node();
  const Node& y = b.node();
  if (x.index() != y.index()) return false;
  if (const auto* p = std::get_if<SqrtForm>(&x)) return p->m == std::get<SqrtForm>(y).m;
  if (const auto* p = std::get_if<Bernstein>(&x)) return p->m == std::get<Bernstein>(y).m;
  return false;
}

}  // namespace

RateFunction sum(const RateFunction& f, const RateFunction& g, const SamplingLattice& lattice) {
  const Node& a = f.node();
  const Node& b = g.node();
  if (std::holds_alternative<Zero>(a)) return g;
  if (std::holds_alternative<Zero>(b)) return f;
  const auto* ia = std::get_if<Indicator>(&a);
  const auto* ib = std::get_if<Indicator>(&b);
  if ((ia && ia->a == 0.0) || (ib && ib->a == 0.0)) return RateFunction::indicator(0.0);
  if (ia && ib) return RateFunction::indicator(std::min(ia->a, ib->a));
  if (const auto* qa = std::get_if<Quadratic>(&a))
    if (const auto* qb = std::get_if<Quadratic>(&b)) return RateFunction::quadratic(qa->a + qb->a);
  if (const auto* la = std::get_if<Linear>(&a))
    if (const auto* lb = std::get_if<Linear>(&b)) return RateFunction::linear(la->a + lb->a);
  const Scaled sf = as_scaled(f), sg = as_scaled(g);
  if (sf.inner == sg.inner && same_form(*sf.base, *sg.base))
    return RateFunction::rescaled(*sf.base, sf.outer + sg.outer, sf.inner);
  Sampled s = pl_combine({sample_node(f, lattice), sample_node(g, lattice)}, false);
  return RateFunction::from_node(std::move(s));
}

RateFunction inf_convolution(const RateFunction& f, const RateFunction& g, const SamplingLattice& lattice) {
  if (std::holds_alternative<Zero>(f.node()) || std::holds_alternative<Zero>(g.node())) return RateFunction::zero();
  const RateFunction fc = monotone_conjugate(f, lattice), gc = monotone_conjugate(g, lattice);
  const RateFunction h = sum(fc, gc, lattice);
  if (!h.is_sampled()) return monotone_conjugate(h, lattice);
  // f^* + g^* on a refined grid: each lattice interval is split until its
  // chord gap is about 2e-8, plus a geometric run towards 0 for small t.
  const Sampled base = sample_node(h, lattice);
  if (base.t.size() < 2) return monotone_conjugate(h, lattice);
  auto hv = [&](Real t) { return fc(t) + gc(t); };
  std::vector<Real> ts;
  for (int k = 60; k >= 1; --k) ts.push_back(base.t[1] * std::pow(0.7, k));
  for (std::size_t k = 0; k + 1 < base.t.size(); ++k) {
    const Real a = base.t[k], b = base.t[k + 1];
    const Real gap = 0.5 * (hv(a) + hv(b)) - hv(0.5 * (a + b));
    const int parts = std::isfinite(gap) ? std::clamp(static_cast<int>(std::ceil(std::sqrt(gap / 2e-8))), 16, 512) : 16;
    for (int j = 0; j < parts; ++j) ts.push_back(a + (b - a) * j / parts);
  }
  ts.push_back(base.t.back());
  // run towards an open domain end (a pole of f^* or g^*)
  const Real d = std::min(fc.domain_end(), gc.domain_end());
  if (is_finite(d) && d > base.t.back()) {
    // the step shrinks with the gap; the chord gap is held to 2e-8 relative
    Real gap = 0.5 * d, keep = 0.99;
    for (int guard = 0; gap > 1e-10 * d && guard < 400000; ++guard) {
      ts.push_back(d - gap);
      keep = std::max(0.5, 1.0 - 2.0 * (1.0 - keep));
      for (;;) {
        const Real a = d - gap, b = d - gap * keep;
        const Real mid = hv(0.5 * (a + b));
        const Real chord = 0.5 * (hv(a) + hv(b)) - mid;
        if (!std::isfinite(chord) || chord <= 2e-8 * std::max<Real>(1.0, std::abs(mid)) || keep > 1.0 - 1e-9) break;
        keep = 1.0 - 0.5 * (1.0 - keep);
      }
      gap *= keep;
    }
  }
  std::sort(ts.begin(), ts.end());
  Sampled dense{{0.0}, {0.0}, base.domain_end, base.tail_slope};
  for (Real t : ts) {
    if (t <= dense.t.back()) continue;
    const Real v = fc(t) + gc(t);
    if (!std::isfinite(v)) break;
    dense.t.push_back(t);
    dense.v.push_back(v);
  }
  if (dense.t.back() < base.t.back()) {
    dense.t.push_back(base.t.back());
    dense.v.push_back(base.v.back());
  }
  if (dense.t.back() > base.t.back()) dense.domain_end = dense.t.back();
  return RateFunction::from_node(pl_conjugate(dense));
}

RateFunction pointwise_max(const RateFunction& f, const RateFunction& g) { return RateFunction::max_of({f, g}); }

namespace {

Real bisect_inverse(const RateFunction& f, Real y) {
  Real lo = 0.0, hi = 1.0;
  while (f(hi) < y) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw std::domain_error("generalized_inverse: y exceeds sup f");
  }
  for (int it = 0; it < 400 && hi - lo > 1e-10 * std::max<Real>(1e-3, hi); ++it) {
    const Real mid = 0.5 * (lo + hi);
    if (f(mid) >= y) hi = mid;
    else lo = mid;
  }
  return hi;
}

}  // namespace

Real generalized_inverse(const RateFunction& f, Real y) {
  if (y <= 0.0) return 0.0;
  if (y > f.supremum() || (y == f.supremum() && !is_finite(f.domain_end()) && f(kInf) < y))
    throw std::domain_error("generalized_inverse: y exceeds sup f");
  return std::visit(overloaded{
                        [](const Zero&) -> Real { throw std::domain_error("generalized_inverse: f is zero"); },
                        [y](const Quadratic& q) { return std::sqrt(y / q.a); },
                        [y](const Linear& l) { return y / l.a; },
                        [](const Indicator& i) { return i.a; },
                        [y](const SqrtForm& s) {
                          const Real r = 1.0 + std::sqrt(y);
                          return s.m * (r * r - 1.0);
                        },
                        [y](const Bernstein& b) { return (-y + std::sqrt(y * y + 4.0 * y)) / 2.0 / b.m; },
                        [y](const Sampled& s) {
                          for (std::size_t k = 1; k < s.t.size(); ++k)
                            if (s.v[k] >= y) {
                              const Real w = (y - s.v[k - 1]) / (s.v[k] - s.v[k - 1]);
                              return s.t[k - 1] + w * (s.t[k] - s.t[k - 1]);
                            }
                          const Real tk = s.t.back();
                          if (s.domain_end > tk && s.tail_slope > 0.0)
                            return std::min(s.domain_end, tk + (y - s.v.back()) / s.tail_slope);
                          return std::min(s.domain_end, kInf);
                        },
                        [y](const Max& m) {
                          Real best = kInf;
                          for (const auto& g : m.of) {
                            if (g.supremum() < y) continue;
                            best = std::min(best, generalized_inverse(g, y));
                          }
                          return best;
                        },
                        [y](const Rescaled& r) {
                          return generalized_inverse(*r.f, (y + r.shift) / r.outer) / r.inner;
                        },
                        [&f, y](const Sum&) { return bisect_inverse(f, y); },
                    },
                    f.node());
}

// ---------------------------------------------------------------------------

IncreasingFunction::IncreasingFunction(Envelope e) : data_(std::move(e)) {
  const auto& pieces = std::get<Envelope>(data_).of;
  if (pieces.empty()) throw std::invalid_argument("IncreasingFunction: empty envelope");
  bool zero_at_zero = false;
  for (const auto& p : pieces) {
    if (p.t.empty() || p.t.size() != p.v.size() || p.t[0] != 0.0)
      throw std::invalid_argument("IncreasingFunction: malformed envelope piece");
    zero_at_zero = zero_at_zero || p.v[0] == 0.0;
  }
  if (!zero_at_zero) throw std::invalid_argument("IncreasingFunction: envelope must vanish at 0");
}

IncreasingFunction IncreasingFunction::envelope_of(const std::vector<RateFunction>& fs, const SamplingLattice& lattice) {
  Envelope e;
  for (const auto& f : fs) e.of.push_back(sampled_data(f, lattice));
  return IncreasingFunction(std::move(e));
}

IncreasingFunction::IncreasingFunction(Step s) : data_(std::move(s)) {
  const auto& st = std::get<Step>(data_);
  if (st.t.empty() || st.t.size() != st.v.size() || st.t[0] != 0.0 || st.v[0] != 0.0)
    throw std::invalid_argument("IncreasingFunction: step needs matching (t, v) starting at (0, 0)");
  for (std::size_t k = 1; k < st.t.size(); ++k)
    if (!(st.t[k] > st.t[k - 1]) || st.v[k] < st.v[k - 1])
      throw std::invalid_argument("IncreasingFunction: step must be increasing in t and nondecreasing in v");
}

IncreasingFunction::IncreasingFunction(Grid g) : data_(std::move(g)) {
  const auto& gr = std::get<Grid>(data_);
  if (gr.t.empty() || gr.t.size() != gr.v.size() || gr.t[0] != 0.0 || gr.v[0] != 0.0)
    throw std::invalid_argument("IncreasingFunction: grid needs matching (t, v) starting at (0, 0)");
  for (std::size_t k = 1; k < gr.t.size(); ++k)
    if (!(gr.t[k] > gr.t[k - 1]) || gr.v[k] < gr.v[k - 1])
      throw std::invalid_argument("IncreasingFunction: grid must be increasing in t and nondecreasing in v");
}

Real IncreasingFunction::operator()(Real t) const {
  if (!(t >= 0.0)) throw std::domain_error("increasing function evaluated at negative t");
  return std::visit(overloaded{
                        [t](const Envelope& e) {
                          Real best = kInf;
                          for (const auto& f : e.of) best = std::min(best, eval_sampled(f, t));
                          return best;
                        },
                        [t](const Step& s) {
                          if (t == 0.0) return 0.0;
                          if (t > s.t.back()) return s.tail ? s.v.back() : kInf;
                          const auto it = std::lower_bound(s.t.begin(), s.t.end(), t);
                          return s.v[static_cast<std::size_t>(it - s.t.begin())];
                        },
                        [t](const Grid& g) {
                          if (t > g.t.back()) return kInf;
                          if (t == g.t.back()) return g.v.back();
                          const auto it = std::upper_bound(g.t.begin(), g.t.end(), t);
                          const auto k = static_cast<std::size_t>(it - g.t.begin());
                          const Real w = (t - g.t[k - 1]) / (g.t[k] - g.t[k - 1]);
                          return g.v[k - 1] + w * (g.v[k] - g.v[k - 1]);
                        },
                    },
                    data_);
}

RateFunction convex_regularization(const IncreasingFunction& f, const SamplingLattice& /*lattice*/) {
  std::vector<Point> pts{{0.0, 0.0}};
  Real ray = kInf;  // smallest slope of an unbounded linear tail
  std::visit(overloaded{
                 [&](const IncreasingFunction::Envelope& e) {
                   for (const auto& s : e.of) {
                     for (std::size_t k = 0; k < s.t.size(); ++k) pts.push_back({s.t[k], s.v[k]});
                     if (s.domain_end > s.t.back()) {
                       if (is_finite(s.domain_end))
                         pts.push_back({s.domain_end, s.v.back() + s.tail_slope * (s.domain_end - s.t.back())});
                       else
                         ray = std::min(ray, s.tail_slope);
                     }
                   }
                 },
                 [&](const IncreasingFunction::Step& s) {
                   // Closure of the epigraph: both ends of each flat piece.
                   for (std::size_t k = 1; k < s.t.size(); ++k) {
                     pts.push_back({s.t[k - 1], s.v[k]});
                     pts.push_back({s.t[k], s.v[k]});
                   }
                   if (s.tail) ray = 0.0;
                 },
                 [&](const IncreasingFunction::Grid& g) {
                   for (std::size_t k = 0; k < g.t.size(); ++k) pts.push_back({g.t[k], g.v[k]});
                 },
             },
             f.data());
  std::vector<Point> hull = lower_hull(std::move(pts));
  if (!is_finite(ray)) {
    const Real end = hull.back().t;
    Sampled s = sampled_from_hull(hull, end, 0.0);
    return RateFunction::from_node(std::move(s));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < hull.size(); ++k)
    if (hull[k].v - ray * hull[k].t < hull[best].v - ray * hull[best].t) best = k;
  hull.resize(best + 1);
  Sampled s = sampled_from_hull(hull, kInf, ray);
  return RateFunction::from_node(std::move(s));
}

}  // namespace tcikit
