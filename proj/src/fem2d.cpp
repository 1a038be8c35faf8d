#include "hpsbl/fem2d.hpp"
#include "hpsbl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <thread>

namespace hpsbl {

namespace {

std::string fmt_point(const Eigen::Vector2d &x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.17g, %.17g)", x.x(), x.y());
  return buf;
}

// Shape values / derivatives (d/dxi on [0,1]) at 1D Gauss points mapped to [0,1].
struct Tabulation {
  Eigen::VectorXd points;  // in [0,1]
  Eigen::VectorXd weights; // sum to 1
  Eigen::MatrixXd values;  // points x (p+1)
  Eigen::MatrixXd derivs;
};

Tabulation tabulate(const ShapeSet<double> &shapes, int n) {
  const auto rule = gauss_rule<double>(n);
  Tabulation t;
  t.points = (rule.nodes.array() + 1.0) * 0.5;
  t.weights = rule.weights * 0.5;
  shapes.tabulate(rule.nodes, t.values, t.derivs);
  t.derivs *= 2.0;
  return t;
}

// Runs body(e) for every element on up to `workers` threads (contiguous
// blocks); rethrows the error of the lowest failing element.
template <typename Body> void for_each_element(int n, int workers, Body &&body) {
  workers = std::clamp(workers, 1, std::max(1, n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  const auto run = [&](int lo, int hi) {
    for (int e = lo; e < hi; ++e) {
      try {
        body(e);
      } catch (...) {
        errors[static_cast<std::size_t>(e)] = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back(run, n * t / workers, n * (t + 1) / workers);
    for (auto &th : pool)
      th.join();
  }
  for (const auto &err : errors)
    if (err)
      std::rethrow_exception(err);
}

std::vector<double> unique_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > 1e-15)
      out.push_back(x);
  return out;
}

} // namespace

LocalBasis2D local_basis(const ShapeSet<double> &shapes, double xi, double eta) {
  const int pp = shapes.size();
  const auto u = shapes.eval(2.0 * xi - 1.0);
  const auto v = shapes.eval(2.0 * eta - 1.0);
  LocalBasis2D out{Eigen::VectorXd(pp * pp), Eigen::VectorXd(pp * pp), Eigen::VectorXd(pp * pp)};
  for (int j = 0; j < pp; ++j)
    for (int i = 0; i < pp; ++i) {
      const int l = i + pp * j;
      out.value[l] = u.values[i] * v.values[j];
      out.d_xi[l] = 2.0 * u.derivatives[i] * v.values[j];
      out.d_eta[l] = 2.0 * u.values[i] * v.derivatives[j];
    }
  return out;
}

ElementMatrices2D element_matrices(const Space2D &space, int e, const Expr &b, const PointFunction &f, int n) {
  const Tabulation tab = tabulate(space.shapes(), n);
  const int nq = n * n;
  const int pp = space.degree() + 1;
  const int nl = space.local_size();
  const ElementMap2D &map = space.mesh().elements[static_cast<std::size_t>(e)].map;

  Eigen::MatrixXd b0(nq, nl), bx(nq, nl), by(nq, nl);
  Eigen::VectorXd w(nq), wb(nq), wf(nq);
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a) {
      const int q = a + n * c;
      const MapEval me = map.eval(tab.points[a], tab.points[c]);
      const double det = me.jacobian.determinant();
      if (!(det > 1e-14))
        throw GeometryError("element " + std::to_string(e) + ": degenerate Jacobian (det " +
                            std::to_string(det) + ") at " + fmt_point(me.x));
      const Eigen::Matrix2d jit = me.jacobian.inverse().transpose();
      for (int j = 0; j < pp; ++j)
        for (int i = 0; i < pp; ++i) {
          const int l = i + pp * j;
          const Eigen::Vector2d g =
              jit * Eigen::Vector2d(tab.derivs(a, i) * tab.values(c, j), tab.values(a, i) * tab.derivs(c, j));
          b0(q, l) = tab.values(a, i) * tab.values(c, j);
          bx(q, l) = g.x();
          by(q, l) = g.y();
        }
      w[q] = tab.weights[a] * tab.weights[c] * det;
      wb[q] = w[q] * b(me.x.x(), me.x.y());
      wf[q] = f ? w[q] * f(me.x) : 0.0;
    }
  ElementMatrices2D out;
  out.stiffness.noalias() = bx.transpose() * w.asDiagonal() * bx + by.transpose() * w.asDiagonal() * by;
  out.mass.noalias() = b0.transpose() * w.asDiagonal() * b0;
  out.weighted_mass.noalias() = b0.transpose() * wb.asDiagonal() * b0;
  out.load.noalias() = b0.transpose() * wf;
  return out;
}

// ---------------------------------------------------------------------------
// Space2D
// ---------------------------------------------------------------------------

Space2D::Space2D(std::shared_ptr<const BlMesh2D> mesh, int degree, bool dirichlet) {
  if (!mesh)
    throw InputError("Space2D: null mesh");
  if (degree < 1)
    throw InputError("Space2D: degree must be >= 1");
  auto d = std::make_shared<Data>(Data{std::move(mesh), ShapeSet<double>(degree), dirichlet, 0, 0, 0, 0, {}, {}, {}});
  const BlMesh2D &m = *d->mesh;
  const int p = degree, pp = p + 1, ne = m.num_elements();

  std::vector<int> vid(m.vertices.size(), -1);
  for (const auto &el : m.elements)
    for (int v : el.corners)
      if (vid[static_cast<std::size_t>(v)] < 0)
        vid[static_cast<std::size_t>(v)] = d->num_vertices++;

  std::map<std::pair<int, int>, int> edge_id;
  for (const auto &el : m.elements)
    for (const auto &ec : kEdgeCorners) {
      const int a = vid[static_cast<std::size_t>(el.corners[ec[0]])];
      const int b = vid[static_cast<std::size_t>(el.corners[ec[1]])];
      edge_id.try_emplace({std::min(a, b), std::max(a, b)}, static_cast<int>(edge_id.size()));
    }
  d->num_edges = static_cast<int>(edge_id.size());
  const int edge_base = d->num_vertices;
  const int interior_base = edge_base + d->num_edges * (p - 1);
  d->num_dofs = interior_base + ne * (p - 1) * (p - 1);

  d->dofs.assign(static_cast<std::size_t>(ne), std::vector<int>(static_cast<std::size_t>(pp * pp)));
  d->signs.assign(static_cast<std::size_t>(ne), std::vector<double>(static_cast<std::size_t>(pp * pp), 1.0));
  std::vector<char> on_boundary(static_cast<std::size_t>(d->num_dofs), 0);
  for (int e = 0; e < ne; ++e) {
    const auto &el = m.elements[static_cast<std::size_t>(e)];
    std::array<int, 4> cv{};
    for (int c = 0; c < 4; ++c)
      cv[c] = vid[static_cast<std::size_t>(el.corners[c])];
    auto &dofs = d->dofs[static_cast<std::size_t>(e)];
    auto &signs = d->signs[static_cast<std::size_t>(e)];
    const auto edge_dof = [&](int local_edge, int mode, int l) {
      const int a = cv[kEdgeCorners[local_edge][0]], b = cv[kEdgeCorners[local_edge][1]];
      const int id = edge_id.at({std::min(a, b), std::max(a, b)});
      dofs[l] = edge_base + id * (p - 1) + (mode - 2);
      signs[l] = (a > b && mode % 2 == 1) ? -1.0 : 1.0;
    };
    for (int j = 0; j < pp; ++j)
      for (int i = 0; i < pp; ++i) {
        const int l = i + pp * j;
        if (i < 2 && j < 2)
          dofs[l] = cv[i + 2 * j];
        else if (i < 2)
          edge_dof(i, j, l);
        else if (j < 2)
          edge_dof(2 + j, i, l);
        else
          dofs[l] = interior_base + e * (p - 1) * (p - 1) + (i - 2) + (p - 1) * (j - 2);
      }
    if (el.on_boundary) {
      // local edge 0 (xi = 0): functions with i = 0
      for (int j = 0; j < pp; ++j)
        on_boundary[static_cast<std::size_t>(dofs[pp * j])] = 1;
    }
  }

  d->free.assign(static_cast<std::size_t>(d->num_dofs), -1);
  for (int g = 0; g < d->num_dofs; ++g)
    if (!dirichlet || !on_boundary[static_cast<std::size_t>(g)])
      d->free[static_cast<std::size_t>(g)] = d->num_free++;
  data_ = std::move(d);
}

Eigen::VectorXd expand_free(const Space2D &space, const Eigen::VectorXd &free) {
  if (free.size() != space.num_free())
    throw InputError("expand_free: expected " + std::to_string(space.num_free()) + " free coefficients");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(space.num_dofs());
  for (int g = 0; g < space.num_dofs(); ++g)
    if (const int k = space.free_index(g); k >= 0)
      full[g] = free[k];
  return full;
}

// ---------------------------------------------------------------------------
// FemSolution2D
// ---------------------------------------------------------------------------

FemSolution2D::FemSolution2D(Space2D space, Eigen::VectorXd coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != space_.num_dofs())
    throw InputError("FemSolution2D: coefficient vector has the wrong length");
}

Eigen::VectorXd FemSolution2D::element_coefficients(int e) const {
  const auto &dofs = space_.element_dofs(e);
  const auto &signs = space_.element_signs(e);
  Eigen::VectorXd c(static_cast<Eigen::Index>(dofs.size()));
  for (std::size_t l = 0; l < dofs.size(); ++l)
    c[static_cast<Eigen::Index>(l)] = signs[l] * coeffs_[dofs[l]];
  return c;
}

Value2D FemSolution2D::eval_local(int e, double xi, double eta) const {
  const Eigen::VectorXd c = element_coefficients(e);
  const LocalBasis2D basis = local_basis(space_.shapes(), xi, eta);
  const MapEval me = space_.mesh().elements[static_cast<std::size_t>(e)].map.eval(xi, eta);
  const Eigen::Vector2d ref_grad(basis.d_xi.dot(c), basis.d_eta.dot(c));
  return {basis.value.dot(c), me.jacobian.transpose().partialPivLu().solve(ref_grad)};
}

Value2D FemSolution2D::eval_parent(int parent, double xi, double eta) const {
  const BlMesh2D &mesh = space_.mesh();
  const int child = mesh.child_at(parent, xi);
  const BlElement &el = mesh.elements[static_cast<std::size_t>(child)];
  const double s = std::clamp((xi - el.xi0) / (el.xi1 - el.xi0), 0.0, 1.0);
  return eval_local(child, s, eta);
}

Value2D FemSolution2D::eval(const Eigen::Vector2d &x) const {
  const auto loc = locate(space_.mesh(), x);
  if (!loc)
    throw InputError("point " + fmt_point(x) + " lies outside the domain");
  return eval_local(loc->element, loc->ref.x(), loc->ref.y());
}

// ---------------------------------------------------------------------------
// Problem, assembly, solve
// ---------------------------------------------------------------------------

void Problem2D::validate(const BlMesh2D &mesh) const {
  if (!(eps > 0.0 && eps <= 1.0))
    throw InputError("eps must lie in (0,1], got " + std::to_string(eps));
  const int n = 10;
  Eigen::Matrix2Xd pts(2, mesh.num_elements() * n * n);
  Eigen::Index k = 0;
  for (const auto &el : mesh.elements)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        pts.col(k++) = el.map((i + 0.5) / n, (j + 0.5) / n);
  const double bmin = check_positivity(b, pts);
  if (!(bmin > 0.0))
    throw InputError("b must be positive on the domain (sampled minimum " + std::to_string(bmin) + ")");
}

System2D assemble_system(const Space2D &space, double diffusion, const Expr &b, const PointFunction &f, int n,
                         int workers) {
  const int nl = space.local_size();
  const int ne = space.mesh().num_elements();
  std::vector<Eigen::MatrixXd> K(static_cast<std::size_t>(ne));
  std::vector<Eigen::VectorXd> F(static_cast<std::size_t>(ne));
  for_each_element(ne, workers, [&](int e) {
    ElementMatrices2D m = element_matrices(space, e, b, f, n);
    K[static_cast<std::size_t>(e)] = diffusion * m.stiffness + m.weighted_mass;
    F[static_cast<std::size_t>(e)] = std::move(m.load);
  });

  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(ne) * static_cast<std::size_t>(nl * (nl + 1) / 2));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space.num_free());
  for (int e = 0; e < ne; ++e) {
    const auto &dofs = space.element_dofs(e);
    const auto &signs = space.element_signs(e);
    const auto &Ke = K[static_cast<std::size_t>(e)];
    const auto &Fe = F[static_cast<std::size_t>(e)];
    for (int l = 0; l < nl; ++l) {
      const int gi = space.free_index(dofs[static_cast<std::size_t>(l)]);
      if (gi < 0)
        continue;
      rhs[gi] += signs[static_cast<std::size_t>(l)] * Fe[l];
      for (int m = 0; m < nl; ++m) {
        const int gj = space.free_index(dofs[static_cast<std::size_t>(m)]);
        if (gj < 0 || gj > gi)
          continue;
        triplets.emplace_back(gi, gj,
                              signs[static_cast<std::size_t>(l)] * signs[static_cast<std::size_t>(m)] * Ke(l, m));
      }
    }
  }
  return {SparseSpd(space.num_free(), triplets), std::move(rhs)};
}

System2D assemble2d(const Space2D &space, const Problem2D &prob, int workers) {
  prob.validate(space.mesh());
  const Expr &f = prob.f;
  return assemble_system(space, prob.eps * prob.eps, prob.b,
                         [&f](const Eigen::Vector2d &x) { return f(x.x(), x.y()); }, space.degree() + 4, workers);
}

double algebraic_residual(const System2D &system, const FemSolution2D &sol) {
  const Space2D &space = sol.space();
  Eigen::VectorXd x(space.num_free());
  for (int g = 0; g < space.num_dofs(); ++g)
    if (const int k = space.free_index(g); k >= 0)
      x[k] = sol.coefficients()[g];
  const double rn = system.rhs.norm();
  const double r = (system.matrix.multiply(x) - system.rhs).norm();
  return rn > 0.0 ? r / rn : r;
}

FemSolution2D solve2d(const Space2D &space, const Problem2D &prob, int workers) {
  const System2D system = assemble2d(space, prob, workers);
  if (system.rhs.norm() == 0.0)
    return FemSolution2D(space, Eigen::VectorXd::Zero(space.num_dofs()));
  FemSolution2D sol(space, expand_free(space, spd_solve(system.matrix, system.rhs)));
  const double res = algebraic_residual(system, sol);
  if (!(res <= 1e-11))
    throw ConvergenceError("solve2d: relative residual " + std::to_string(res) + " exceeds 1e-11");
  return sol;
}

// ---------------------------------------------------------------------------
// Norms and sampled errors
// ---------------------------------------------------------------------------

Norms2D norms2d(const ParentField &v, const AsymptoticMesh2D &mesh,
                const std::vector<std::vector<double>> &xi_breaks, double eps, const Expr &b, int points) {
  if (static_cast<int>(xi_breaks.size()) != mesh.num_elements())
    throw InputError("norms2d: one breakpoint list per element required");
  const auto rule = gauss_rule<double>(points);
  double l2 = 0.0, h1 = 0.0, weighted = 0.0, mx = 0.0;
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto &brk = xi_breaks[static_cast<std::size_t>(k)];
    const ElementMap2D &map = mesh.elements[static_cast<std::size_t>(k)];
    for (std::size_t m = 0; m + 1 < brk.size(); ++m) {
      const double a0 = brk[m], a1 = brk[m + 1];
      for (Eigen::Index c = 0; c < rule.nodes.size(); ++c)
        for (Eigen::Index a = 0; a < rule.nodes.size(); ++a) {
          const double xi = a0 + 0.5 * (a1 - a0) * (rule.nodes[a] + 1.0);
          const double eta = 0.5 * (rule.nodes[c] + 1.0);
          const MapEval me = map.eval(xi, eta);
          const double w = 0.25 * (a1 - a0) * rule.weights[a] * rule.weights[c] * std::abs(me.jacobian.determinant());
          const Value2D val = v(k, xi, eta);
          l2 += w * val.value * val.value;
          h1 += w * val.gradient.squaredNorm();
          weighted += w * b(me.x.x(), me.x.y()) * val.value * val.value;
          mx = std::max(mx, std::abs(val.value));
        }
    }
  }
  Norms2D out;
  out.l2 = std::sqrt(l2);
  out.h1_semi = std::sqrt(h1);
  out.energy = std::sqrt(eps * eps * h1 + weighted);
  out.balanced = std::sqrt(l2 + eps * h1);
  out.max = mx;
  return out;
}

std::vector<std::vector<double>> element_breakpoints(const BlMesh2D &mesh) {
  std::vector<std::vector<double>> out(mesh.children.size());
  for (std::size_t k = 0; k < mesh.children.size(); ++k) {
    for (int c : mesh.children[k])
      out[k].push_back(mesh.elements[static_cast<std::size_t>(c)].xi0);
    out[k].push_back(1.0);
  }
  return out;
}

std::vector<std::vector<double>> layer_breakpoints(const AsymptoticMesh2D &mesh, double eps) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(mesh.num_elements()), {0.0, 1.0});
  for (int k = 0; k < mesh.n_collar; ++k)
    for (double s = 0.25 * eps / mesh.rho0; s < 0.5; s *= 2.0)
      out[static_cast<std::size_t>(k)].push_back(s);
  for (auto &v : out)
    v = unique_sorted(std::move(v));
  return out;
}

std::vector<std::vector<double>> merge_breakpoints(const std::vector<std::vector<double>> &a,
                                                   const std::vector<std::vector<double>> &b) {
  if (a.size() != b.size())
    throw InputError("merge_breakpoints: element counts differ");
  std::vector<std::vector<double>> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    out[k] = a[k];
    out[k].insert(out[k].end(), b[k].begin(), b[k].end());
    out[k] = unique_sorted(std::move(out[k]));
  }
  return out;
}

Norms2D error_norms2d(const FemSolution2D &sol, const Function2D &exact, double eps, const Expr &b) {
  const BlMesh2D &mesh = sol.space().mesh();
  const AsymptoticMesh2D &parent = *mesh.parent;
  const auto breaks = merge_breakpoints(element_breakpoints(mesh), layer_breakpoints(parent, eps));
  const ParentField diff = [&](int k, double xi, double eta) {
    const Value2D u = sol.eval_parent(k, xi, eta);
    const Value2D e = exact(parent.elements[static_cast<std::size_t>(k)](xi, eta));
    return Value2D{u.value - e.value, u.gradient - e.gradient};
  };
  return norms2d(diff, parent, breaks, eps, b, sol.space().degree() + 8);
}

Norms2D error_norms2d(const FemSolution2D &sol, const FemSolution2D &ref, double eps, const Expr &b) {
  const BlMesh2D &m1 = sol.space().mesh();
  const BlMesh2D &m2 = ref.space().mesh();
  if (m1.parent != m2.parent)
    throw InputError("error_norms2d: solutions live on different parent meshes");
  const auto breaks =
      merge_breakpoints(merge_breakpoints(element_breakpoints(m1), element_breakpoints(m2)),
                        layer_breakpoints(*m1.parent, eps));
  const ParentField diff = [&](int k, double xi, double eta) {
    const Value2D u = sol.eval_parent(k, xi, eta);
    const Value2D r = ref.eval_parent(k, xi, eta);
    return Value2D{u.value - r.value, u.gradient - r.gradient};
  };
  const int q = std::max(sol.space().degree(), ref.space().degree());
  return norms2d(diff, *m1.parent, breaks, eps, b, q + 6);
}

namespace {

template <typename Ref>
double line_error(const FemSolution2D &sol, Ref &&ref, const Eigen::Vector2d &a, const Eigen::Vector2d &b, int M) {
  if (M < 1)
    throw InputError("sample_line_error: M must be >= 1");
  double mx = 0.0;
  for (int i = 0; i < M; ++i) {
    const Eigen::Vector2d r = M == 1 ? a : Eigen::Vector2d(a + (b - a) * (static_cast<double>(i) / (M - 1)));
    mx = std::max(mx, std::abs(sol.eval(r).value - ref(r)));
  }
  return mx;
}

} // namespace

double sample_line_error(const FemSolution2D &sol, const FemSolution2D &ref, const Eigen::Vector2d &a,
                         const Eigen::Vector2d &b, int M) {
  return line_error(sol, [&](const Eigen::Vector2d &x) { return ref.eval(x).value; }, a, b, M);
}

double sample_line_error(const FemSolution2D &sol, const Function2D &exact, const Eigen::Vector2d &a,
                         const Eigen::Vector2d &b, int M) {
  return line_error(sol, [&](const Eigen::Vector2d &x) { return exact(x).value; }, a, b, M);
}

// ---------------------------------------------------------------------------
// Reference solutions
// ---------------------------------------------------------------------------

BlMesh2D reference_mesh2d(std::shared_ptr<const AsymptoticMesh2D> parent, double lambda, int q, double eps) {
  std::vector<double> breaks;
  if (lambda * q * eps < 0.5)
    breaks.push_back(lambda * q * eps);
  for (int k = 0; k <= 5; ++k)
    if (const double s = eps / parent->rho0 * std::ldexp(1.0, k); s < 0.5)
      breaks.push_back(s);
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> kept;
  for (double s : breaks)
    if (kept.empty() || s > kept.back() * (1.0 + 1e-12))
      kept.push_back(s);
  BlMesh2D mesh = split_boundary(std::move(parent), kept);
  mesh.lambda = lambda;
  mesh.p = q;
  mesh.eps = eps;
  return mesh;
}

FemSolution2D reference_solution2d(std::shared_ptr<const AsymptoticMesh2D> parent, const Problem2D &prob,
                                   double lambda, int q, int workers) {
  auto mesh = std::make_shared<const BlMesh2D>(reference_mesh2d(std::move(parent), lambda, q, prob.eps));
  return solve2d(Space2D(mesh, q), prob, workers);
}

} // namespace hpsbl
