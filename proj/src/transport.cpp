#include "tcikit/transport.hpp"

#include "tcikit/lp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace tcikit {

namespace {

void check_shapes(const ProbMeasure& mu, const ProbMeasure& nu, const CostMatrix& c, const char* op) {
  if (c.rows() != mu.size() || c.cols() != nu.size()) {
    std::ostringstream msg;
    msg << op << ": cost is " << c.rows() << "x" << c.cols() << " but marginals have sizes " << mu.size() << " and "
        << nu.size();
    throw DimensionMismatch(msg.str());
  }
}

struct Cell {
  Index row;
  Index col;
  Real flow;
};

// Transportation simplex on strictly positive marginals a (rows) and b (cols).
class TransportationSimplex {
 public:
  TransportationSimplex(const Vector& a, const Vector& b, const Matrix& cost)
      : a_(a), b_(b), c_(cost), r_(a.size()), k_(b.size()), is_basic_(r_ * k_, false) {}

  // Returns false if the pivot cap was reached before optimality.
  bool solve(std::size_t max_pivots) {
    northwest_corner();
    const Real scale = std::max<Real>(1.0, c_.cwiseAbs().maxCoeff());
    const Real tol = 1e-12 * scale;
    for (std::size_t it = 0; it < max_pivots; ++it) {
      compute_potentials();
      Index p = -1, q = -1;
      Real best = -tol;
      for (Index i = 0; i < r_; ++i)
        for (Index j = 0; j < k_; ++j) {
          if (is_basic_[i * k_ + j]) continue;
          const Real reduced = c_(i, j) - u_[i] - v_[j];
          if (reduced < best) {
            best = reduced;
            p = i;
            q = j;
          }
        }
      if (p < 0) return true;
      pivot(p, q);
    }
    return false;
  }

  const std::vector<Cell>& basis() const { return cells_; }
  const Vector& u() const { return u_; }
  const Vector& v() const { return v_; }

 private:
  void northwest_corner() {
    Vector ra = a_, rb = b_;
    Index i = 0, j = 0;
    while (i < r_ && j < k_) {
      const Real x = std::min(ra[i], rb[j]);
      add_cell(i, j, x);
      ra[i] -= x;
      rb[j] -= x;
      if (i == r_ - 1) ++j;
      else if (j == k_ - 1) ++i;
      else if (ra[i] <= rb[j]) ++i;
      else ++j;
    }
  }

  void add_cell(Index i, Index j, Real x) {
    cells_.push_back({i, j, std::max<Real>(x, 0.0)});
    is_basic_[i * k_ + j] = true;
  }

  // Nodes: rows 0..r-1, columns r..r+k-1.
  void build_adjacency() {
    adj_.assign(static_cast<std::size_t>(r_ + k_), {});
    for (std::size_t e = 0; e < cells_.size(); ++e) {
      adj_[cells_[e].row].push_back(e);
      adj_[r_ + cells_[e].col].push_back(e);
    }
  }

  Index other_end(std::size_t e, Index node) const {
    const Cell& cell = cells_[e];
    return node < r_ ? r_ + cell.col : cell.row;
  }

  void compute_potentials() {
    build_adjacency();
    u_ = Vector::Zero(r_);
    v_ = Vector::Zero(k_);
    std::vector<bool> seen(static_cast<std::size_t>(r_ + k_), false);
    std::vector<Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const Index node = stack.back();
      stack.pop_back();
      for (std::size_t e : adj_[node]) {
        const Index next = other_end(e, node);
        if (seen[next]) continue;
        seen[next] = true;
        const Cell& cell = cells_[e];
        if (next >= r_) v_[cell.col] = c_(cell.row, cell.col) - u_[cell.row];
        else u_[cell.row] = c_(cell.row, cell.col) - v_[cell.col];
        stack.push_back(next);
      }
    }
  }

  void pivot(Index p, Index q) {
    // Path in the basis tree from row node p to column node r_ + q.
    const Index start = p, goal = r_ + q;
    std::vector<std::ptrdiff_t> parent_edge(static_cast<std::size_t>(r_ + k_), -1);
    std::vector<bool> seen(static_cast<std::size_t>(r_ + k_), false);
    std::vector<Index> queue{start};
    seen[start] = true;
    for (std::size_t head = 0; head < queue.size() && !seen[goal]; ++head) {
      const Index node = queue[head];
      for (std::size_t e : adj_[node]) {
        const Index next = other_end(e, node);
        if (seen[next]) continue;
        seen[next] = true;
        parent_edge[next] = static_cast<std::ptrdiff_t>(e);
        queue.push_back(next);
      }
    }
    // Walk back from the column q: edges alternate -, +, -, ...
    std::vector<std::size_t> path;
    for (Index node = goal; node != start;) {
      const auto e = static_cast<std::size_t>(parent_edge[node]);
      path.push_back(e);
      node = other_end(e, node);
    }
    std::size_t leave = path[0];
    Real theta = cells_[leave].flow;
    for (std::size_t s = 0; s < path.size(); s += 2) {
      if (cells_[path[s]].flow < theta) {
        theta = cells_[path[s]].flow;
        leave = path[s];
      }
    }
    for (std::size_t s = 0; s < path.size(); ++s) {
      Real& f = cells_[path[s]].flow;
      f = (s % 2 == 0) ? f - theta : f + theta;
      if (f < 0.0) f = 0.0;
    }
    is_basic_[cells_[leave].row * k_ + cells_[leave].col] = false;
    cells_[leave] = {p, q, theta};
    is_basic_[p * k_ + q] = true;
  }

  Vector a_, b_;
  Matrix c_;
  Index r_, k_;
  std::vector<bool> is_basic_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> adj_;
  Vector u_, v_;
};

// Dense LP fallback (Bland's rule); always terminates.
void solve_with_dense_lp(const Vector& a, const Vector& b, const Matrix& cost, Matrix& plan, Vector& u, Vector& v) {
  const Index r = a.size(), k = b.size();
  lp::Problem<Real> prob;
  prob.c.resize(static_cast<std::size_t>(r * k));
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < k; ++j) prob.c[static_cast<std::size_t>(i * k + j)] = cost(i, j);
  for (Index i = 0; i < r; ++i) {
    std::vector<Real> row(static_cast<std::size_t>(r * k), 0.0);
    for (Index j = 0; j < k; ++j) row[static_cast<std::size_t>(i * k + j)] = 1.0;
    prob.a.push_back(std::move(row));
    prob.b.push_back(a[i]);
  }
  for (Index j = 0; j < k; ++j) {
    std::vector<Real> row(static_cast<std::size_t>(r * k), 0.0);
    for (Index i = 0; i < r; ++i) row[static_cast<std::size_t>(i * k + j)] = 1.0;
    prob.a.push_back(std::move(row));
    prob.b.push_back(b[j]);
  }
  const auto sol = lp::minimize(prob);
  if (sol.status != lp::Status::optimal) throw std::runtime_error("solve_ot: dense LP fallback failed");
  plan = Matrix::Zero(r, k);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < k; ++j) plan(i, j) = std::max<Real>(0.0, sol.x[static_cast<std::size_t>(i * k + j)]);
  // Potentials from the dual LP: max a.u + b.v with u_i + v_j <= C_ij, free
  // variables split into positive and negative parts.
  lp::Problem<Real> dual;
  const auto free_vars = static_cast<std::size_t>(2 * (r + k));
  const auto width = free_vars + static_cast<std::size_t>(r * k);
  dual.c.assign(width, 0.0);
  for (Index i = 0; i < r; ++i) {
    dual.c[static_cast<std::size_t>(2 * i)] = -a[i];
    dual.c[static_cast<std::size_t>(2 * i + 1)] = a[i];
  }
  for (Index j = 0; j < k; ++j) {
    dual.c[static_cast<std::size_t>(2 * (r + j))] = -b[j];
    dual.c[static_cast<std::size_t>(2 * (r + j) + 1)] = b[j];
  }
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < k; ++j) {
      std::vector<Real> row(width, 0.0);
      row[static_cast<std::size_t>(2 * i)] = 1.0;
      row[static_cast<std::size_t>(2 * i + 1)] = -1.0;
      row[static_cast<std::size_t>(2 * (r + j))] = 1.0;
      row[static_cast<std::size_t>(2 * (r + j) + 1)] = -1.0;
      row[free_vars + static_cast<std::size_t>(i * k + j)] = 1.0;
      dual.a.push_back(std::move(row));
      dual.b.push_back(cost(i, j));
    }
  const auto dsol = lp::minimize(dual);
  if (dsol.status != lp::Status::optimal) throw std::runtime_error("solve_ot: dual LP fallback failed");
  u.resize(r);
  v.resize(k);
  for (Index i = 0; i < r; ++i) u[i] = dsol.x[static_cast<std::size_t>(2 * i)] - dsol.x[static_cast<std::size_t>(2 * i + 1)];
  for (Index j = 0; j < k; ++j)
    v[j] = dsol.x[static_cast<std::size_t>(2 * (r + j))] - dsol.x[static_cast<std::size_t>(2 * (r + j) + 1)];
}

}  // namespace

OtSolution solve_ot(const ProbMeasure& mu, const ProbMeasure& nu, const CostMatrix& c, const OtOptions& opts) {
  check_shapes(mu, nu, c, "solve_ot");
  const Matrix& full = c.matrix();
  std::vector<Index> rows, cols;
  for (Index i = 0; i < mu.size(); ++i)
    if (mu[i] > 0.0) rows.push_back(i);
  for (Index j = 0; j < nu.size(); ++j)
    if (nu[j] > 0.0) cols.push_back(j);
  const auto r = static_cast<Index>(rows.size());
  const auto k = static_cast<Index>(cols.size());
  Vector a(r), b(k);
  Matrix sub(r, k);
  for (Index i = 0; i < r; ++i) a[i] = mu[rows[i]];
  for (Index j = 0; j < k; ++j) b[j] = nu[cols[j]];
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < k; ++j) sub(i, j) = full(rows[i], cols[j]);

  OtSolution out;
  Matrix plan_sub = Matrix::Zero(r, k);
  Vector u, v;
  const std::size_t cap =
      opts.max_pivots ? opts.max_pivots : static_cast<std::size_t>(50 * (r + k) * (r + k) + 1000);
  TransportationSimplex simplex(a, b, sub);
  if (simplex.solve(cap)) {
    for (const auto& cell : simplex.basis()) plan_sub(cell.row, cell.col) = cell.flow;
    u = simplex.u();
    v = simplex.v();
  } else {
    solve_with_dense_lp(a, b, sub, plan_sub, u, v);
    out.used_fallback = true;
  }

  out.plan.pi = Matrix::Zero(mu.size(), nu.size());
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < k; ++j) out.plan.pi(rows[i], cols[j]) = plan_sub(i, j);
  out.plan.cost = (out.plan.pi.array() * full.array()).sum();
  out.value = out.plan.cost;

  // Extend the potentials to eliminated rows/columns by c-transforms so that
  // psi_i + phi_j <= C_ij holds everywhere.
  Vector psi = Vector::Constant(mu.size(), kInf);
  Vector phi = Vector::Constant(nu.size(), kInf);
  for (Index i = 0; i < r; ++i) psi[rows[i]] = u[i];
  for (Index j = 0; j < k; ++j) phi[cols[j]] = v[j];
  for (Index j = 0; j < nu.size(); ++j) {
    Real best = kInf;
    for (Index i = 0; i < r; ++i) best = std::min(best, full(rows[i], j) - u[i]);
    if (!is_finite(phi[j])) phi[j] = best;
    else phi[j] = std::min(phi[j], best);
  }
  for (Index i = 0; i < mu.size(); ++i) {
    const Real best = (full.row(i).transpose() - phi).minCoeff();
    if (!is_finite(psi[i])) psi[i] = best;
    else psi[i] = std::min(psi[i], best);
  }
  out.dual.psi = psi;
  out.dual.phi = phi;
  out.dual.value = psi.dot(mu.weights()) + phi.dot(nu.weights());
  return out;
}

DualPotentials solve_dual(const ProbMeasure& mu, const ProbMeasure& nu, const CostMatrix& c, const OtOptions& opts) {
  return solve_ot(mu, nu, c, opts).dual;
}

Real kr_dual_norm(const ProbMeasure& nu, const ProbMeasure& mu, const CostMatrix& d) {
  if (!d.is_metric()) throw std::invalid_argument("kr_dual_norm: cost kind is not metric");
  check_shapes(mu, nu, d, "kr_dual_norm");
  const Index n = mu.size();
  if (n == 1) return 0.0;
  // Variables: phi_0..phi_{n-1} >= 0 (the objective is shift invariant), then one
  // slack per ordered pair. phi_i - phi_j + s_ij = d_ij.
  const Index pairs = n * (n - 1);
  const auto width = static_cast<std::size_t>(n + pairs);
  lp::Problem<Real> prob;
  prob.c.assign(width, 0.0);
  for (Index i = 0; i < n; ++i) prob.c[static_cast<std::size_t>(i)] = -(nu[i] - mu[i]);
  Index slack = n;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      std::vector<Real> row(width, 0.0);
      row[static_cast<std::size_t>(i)] = 1.0;
      row[static_cast<std::size_t>(j)] = -1.0;
      row[static_cast<std::size_t>(slack++)] = 1.0;
      prob.a.push_back(std::move(row));
      prob.b.push_back(d(i, j));
    }
  const auto sol = lp::minimize(prob);
  if (sol.status != lp::Status::optimal) throw std::runtime_error("kr_dual_norm: LP did not reach optimality");
  return std::max<Real>(0.0, -sol.value);
}

CostMatrix chi_metric(const Vector& chi) {
  if ((chi.array() < 0.0).any()) throw std::invalid_argument("chi_metric: negative entry");
  const Index n = chi.size();
  Matrix c(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) c(i, j) = i == j ? 0.0 : chi[i] + chi[j];
  const auto zeros = (chi.array() == 0.0).count();
  return CostMatrix(c, zeros <= 1 && n > 1 ? CostKind::metric : CostKind::general);
}

CostMatrix tensor_cost(const CostMatrix& c1, const CostMatrix& c2) {
  if (!c1.is_square() || !c2.is_square()) throw DimensionMismatch("tensor_cost: both costs must be square");
  const Index n1 = c1.rows(), n2 = c2.rows();
  Matrix c(n1 * n2, n1 * n2);
  for (Index i = 0; i < n1; ++i)
    for (Index j = 0; j < n2; ++j)
      for (Index k = 0; k < n1; ++k)
        for (Index l = 0; l < n2; ++l) c(i * n2 + j, k * n2 + l) = c1(i, k) + c2(j, l);
  const bool metric = c1.is_metric() && c2.is_metric();
  return CostMatrix(c, metric ? CostKind::metric : CostKind::general);
}

bool chi_tv_identity_check(const ProbMeasure& mu, const ProbMeasure& nu, const Vector& chi, Real tol) {
  const Real transport = solve_ot(mu, nu, chi_metric(chi)).value;
  return std::abs(transport - weighted_tv(nu, mu, chi)) <= tol;
}

namespace {

bool is_discrete_metric(const Matrix& d, Real& scale) {
  const Index n = d.rows();
  if (n < 2) return false;
  scale = d(0, 1);
  if (scale <= 0.0) return false;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && std::abs(d(i, j) - scale) > 1e-12 * scale) return false;
  return true;
}

// Minimum spanning tree (Prim); returns parent links rooted at 0.
std::vector<Index> minimum_spanning_tree(const Matrix& d) {
  const Index n = d.rows();
  std::vector<Index> parent(static_cast<std::size_t>(n), -1);
  std::vector<Real> key(static_cast<std::size_t>(n), kInf);
  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  key[0] = 0.0;
  for (Index step = 0; step < n; ++step) {
    Index best = -1;
    for (Index i = 0; i < n; ++i)
      if (!in_tree[i] && (best < 0 || key[i] < key[best])) best = i;
    in_tree[best] = true;
    for (Index i = 0; i < n; ++i)
      if (!in_tree[i] && d(best, i) < key[i]) {
        key[i] = d(best, i);
        parent[i] = best;
      }
  }
  return parent;
}

struct Edge {
  Index a, b;
  Real w;
};

// Potentials obtained by fixing phi_0 = 0 and making every edge of a spanning
// tree tight with the given orientation bits.
Vector propagate(Index n, const std::vector<Edge>& edges, unsigned orientation) {
  Vector phi = Vector::Constant(n, kInf);
  phi[0] = 0.0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Real sign = ((orientation >> e) & 1u) ? 1.0 : -1.0;
      const Edge& edge = edges[e];
      if (is_finite(phi[edge.a]) && !is_finite(phi[edge.b])) {
        phi[edge.b] = phi[edge.a] + sign * edge.w;
        changed = true;
      } else if (is_finite(phi[edge.b]) && !is_finite(phi[edge.a])) {
        phi[edge.a] = phi[edge.b] - sign * edge.w;
        changed = true;
      }
    }
  }
  return phi;
}

bool lipschitz_feasible(const Vector& phi, const Matrix& d) {
  const Real tol = 1e-10 * std::max<Real>(1.0, d.maxCoeff());
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = 0; j < d.rows(); ++j)
      if (phi[i] - phi[j] > d(i, j) + tol) return false;
  return true;
}

class VertexSet {
 public:
  explicit VertexSet(Real scale) : scale_(std::max<Real>(scale, 1e-300)) {}
  void insert(const Vector& phi) {
    std::vector<long long> key(static_cast<std::size_t>(phi.size()));
    for (Index i = 0; i < phi.size(); ++i) key[i] = std::llround(phi[i] / scale_ * 1e9);
    if (keys_.insert(std::move(key)).second) vertices_.push_back(phi);
  }
  std::size_t size() const { return vertices_.size(); }
  std::vector<Vector> take() { return std::move(vertices_); }

 private:
  Real scale_;
  std::set<std::vector<long long>> keys_;
  std::vector<Vector> vertices_;
};

}  // namespace

std::optional<std::vector<Vector>> lipschitz_vertices(const CostMatrix& dist, std::size_t max_vertices) {
  if (!dist.is_square()) throw DimensionMismatch("lipschitz_vertices: cost must be square");
  const Matrix& d = dist.matrix();
  const Index n = d.rows();
  if (!satisfies_metric_axioms(d, 1e-10)) throw std::invalid_argument("lipschitz_vertices: d is not a (semi)metric");
  if (n == 1) return std::vector<Vector>{Vector::Zero(1)};

  Real scale = 0.0;
  if (is_discrete_metric(d, scale)) {
    if (n >= 63 || (std::size_t{1} << n) - 2 > max_vertices) return std::nullopt;
    std::vector<Vector> out;
    const std::uint64_t half = std::uint64_t{1} << (n - 1);
    for (std::uint64_t s = 1; s < half; ++s) {
      Vector up = Vector::Zero(n);
      for (Index i = 1; i < n; ++i)
        if ((s >> (i - 1)) & 1u) up[i] = scale;
      out.push_back(up);
      out.push_back(-up);
    }
    return out;
  }

  const auto parent = minimum_spanning_tree(d);
  std::vector<Edge> tree;
  for (Index i = 1; i < n; ++i) tree.push_back({parent[i], i, d(parent[i], i)});
  {
    // Tree metric iff path lengths in the MST reproduce d.
    Matrix path = Matrix::Constant(n, n, kInf);
    for (Index root = 0; root < n; ++root) {
      path(root, root) = 0.0;
      bool changed = true;
      while (changed) {
        changed = false;
        for (const Edge& e : tree) {
          if (is_finite(path(root, e.a)) && !is_finite(path(root, e.b))) {
            path(root, e.b) = path(root, e.a) + e.w;
            changed = true;
          } else if (is_finite(path(root, e.b)) && !is_finite(path(root, e.a))) {
            path(root, e.a) = path(root, e.b) + e.w;
            changed = true;
          }
        }
      }
    }
    const Real tol = 1e-10 * std::max<Real>(1.0, d.maxCoeff());
    if (((path - d).cwiseAbs().array() <= tol).all()) {
      if (n - 1 >= 63 || (std::size_t{1} << (n - 1)) > max_vertices) return std::nullopt;
      VertexSet set(d.maxCoeff());
      for (unsigned o = 0; o < (1u << (n - 1)); ++o) set.insert(propagate(n, tree, o));
      return set.take();
    }
  }

  // General metric: every vertex makes the edges of some spanning tree tight.
  if (n > 7) return std::nullopt;
  std::vector<Edge> all;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) all.push_back({i, j, d(i, j)});
  const std::size_t m = all.size();
  const auto choose = static_cast<std::size_t>(n - 1);
  std::vector<std::size_t> pick(choose);
  std::iota(pick.begin(), pick.end(), 0);
  VertexSet set(d.maxCoeff());
  while (true) {
    std::vector<Index> comp(static_cast<std::size_t>(n));
    std::iota(comp.begin(), comp.end(), 0);
    auto find = [&](Index x) {
      while (comp[x] != x) x = comp[x] = comp[comp[x]];
      return x;
    };
    bool acyclic = true;
    std::vector<Edge> edges;
    for (std::size_t e : pick) {
      const Index ra = find(all[e].a), rb = find(all[e].b);
      if (ra == rb) {
        acyclic = false;
        break;
      }
      comp[ra] = rb;
      edges.push_back(all[e]);
    }
    if (acyclic) {
      for (unsigned o = 0; o < (1u << choose); ++o) {
        const Vector phi = propagate(n, edges, o);
        if (lipschitz_feasible(phi, d)) {
          set.insert(phi);
          if (set.size() > max_vertices) return std::nullopt;
        }
      }
    }
    // Next combination.
    std::size_t pos = choose;
    while (pos > 0 && pick[pos - 1] == m - choose + pos - 1) --pos;
    if (pos == 0) break;
    ++pick[pos - 1];
    for (std::size_t s = pos; s < choose; ++s) pick[s] = pick[s - 1] + 1;
  }
  return set.take();
}

TransportEvaluator::TransportEvaluator(const ProbMeasure& mu, const CostMatrix& c) : mu_(mu), c_(c) {
  if (c.rows() != mu.size() || !c.is_square()) throw DimensionMismatch("TransportEvaluator: cost/measure mismatch");
  if (c.is_metric()) {
    if (auto verts = lipschitz_vertices(c, 1u << 12)) {
      Matrix v(static_cast<Index>(verts->size()), mu.size());
      for (std::size_t k = 0; k < verts->size(); ++k) v.row(static_cast<Index>(k)) = (*verts)[k].transpose();
      vertex_offsets_ = v * mu.weights();
      vertices_ = std::move(v);
    }
  }
}

Real TransportEvaluator::operator()(const Vector& nu) const {
  if (vertices_) {
    const Real best = ((*vertices_) * nu - vertex_offsets_).maxCoeff();
    return std::max<Real>(best, 0.0);
  }
  return solve_ot(mu_, ProbMeasure(mu_.space(), nu), c_).value;
}

}  // namespace tcikit
