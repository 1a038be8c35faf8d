#include "hpsbl/fem1d.hpp"
#include "hpsbl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hpsbl {

Mesh1D::Mesh1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2 || nodes_.front() != 0.0 || nodes_.back() != 1.0)
    throw InputError("Mesh1D: nodes must start at 0 and end at 1");
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (!(nodes_[i] > nodes_[i - 1]))
      throw InputError("Mesh1D: nodes must be strictly increasing");
}

int Mesh1D::locate(double x) const {
  const auto it = std::lower_bound(nodes_.begin() + 1, nodes_.end() - 1, x);
  return static_cast<int>(it - nodes_.begin()) - 1;
}

Mesh1D bisect(const Mesh1D &mesh) {
  std::vector<double> n;
  for (int j = 0; j < mesh.num_elements(); ++j) {
    n.push_back(mesh.left(j));
    n.push_back(0.5 * (mesh.left(j) + mesh.right(j)));
  }
  n.push_back(1.0);
  return Mesh1D(std::move(n));
}

bool SblMesh1D::in_layer(double x) const {
  const double w = layer_width();
  return regime == SblRegime::ThreeElement && (x <= w || x >= 1.0 - w);
}

SblMesh1D make_sbl_mesh(double lambda, int p, double eps) {
  if (!(lambda > 0.0) || p < 1 || !(eps > 0.0) || eps > 1.0)
    throw InputError("make_sbl_mesh: need lambda > 0, p >= 1, eps in (0,1]");
  SblMesh1D m;
  m.lambda = lambda;
  m.p = p;
  m.eps = eps;
  const double w = lambda * p * eps;
  if (w < 0.25) {
    m.regime = SblRegime::ThreeElement;
    m.mesh = Mesh1D({0.0, w, 1.0 - w, 1.0});
  } else {
    m.regime = SblRegime::Asymptotic;
    m.mesh = Mesh1D({0.0, 1.0});
  }
  return m;
}

Space1D::Space1D(Mesh1D mesh, int degree, bool dirichlet)
    : mesh_(std::move(mesh)), shapes_(degree), dirichlet_(dirichlet) {}

int Space1D::dof(int j, int k) const {
  const int p = degree();
  if (k == 0)
    return j * p;
  if (k == 1)
    return (j + 1) * p;
  return j * p + (k - 1);
}

int Space1D::free_index(int global) const {
  if (!dirichlet_)
    return global;
  if (global == 0 || global == num_dofs() - 1)
    return -1;
  return global - 1;
}

void Problem1D::validate(int samples) const {
  if (!(eps > 0.0) || eps > 1.0)
    throw InputError("Problem1D: eps must lie in (0,1]");
  const double bmin = check_positivity(b, sample_interval(0.0, 1.0, samples));
  if (!(bmin > 0.0))
    throw InputError("Problem1D: coefficient b is not positive (sampled min " +
                     std::to_string(bmin) + ")");
}

ValueD constant_coefficient_solution(double eps, double x) {
  // 1 - cosh((x-1/2)/eps)/cosh(1/(2 eps)), rewritten with decaying exponentials
  const double el = std::exp(-x / eps);
  const double er = std::exp(-(1.0 - x) / eps);
  const double denom = 1.0 + std::exp(-1.0 / eps);
  return {1.0 - (el + er) / denom, (el - er) / (eps * denom)};
}

Problem1D constant_coefficient_problem(double eps) {
  Problem1D prob;
  prob.eps = eps;
  prob.b = Expr::constant(1.0);
  prob.f = Expr::constant(1.0);
  prob.exact = [eps](double x) { return constant_coefficient_solution(eps, x); };
  return prob;
}

FemSolution1D::FemSolution1D(Space1D space, Eigen::VectorXd coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != space_.num_dofs())
    throw InputError("FemSolution1D: coefficient vector has wrong length");
}

Eigen::VectorXd FemSolution1D::element_coefficients(int j) const {
  const int n = space_.degree() + 1;
  Eigen::VectorXd c(n);
  for (int k = 0; k < n; ++k)
    c[k] = coeffs_[space_.dof(j, k)];
  return c;
}

ValueD FemSolution1D::eval_local(int j, double t) const {
  const int n = space_.degree() + 1;
  double vals[64], ders[64];
  std::vector<double> vbuf, dbuf;
  double *v = vals, *d = ders;
  if (n > 64) {
    vbuf.resize(static_cast<std::size_t>(n));
    dbuf.resize(static_cast<std::size_t>(n));
    v = vbuf.data(), d = dbuf.data();
  }
  space_.shapes().eval_into(t, v, d);
  ValueD out;
  for (int k = 0; k < n; ++k) {
    const double c = coeffs_[space_.dof(j, k)];
    out.value += c * v[k];
    out.derivative += c * d[k];
  }
  out.derivative *= 2.0 / space_.mesh().h(j);
  return out;
}

ValueD FemSolution1D::eval(double x) const {
  const auto &mesh = space_.mesh();
  const int j = mesh.locate(x);
  return eval_local(j, mesh.to_reference(j, x));
}

Eigen::VectorXd expand_free(const Space1D &space, const Eigen::VectorXd &free) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(space.num_dofs());
  for (int g = 0; g < space.num_dofs(); ++g) {
    const int f = space.free_index(g);
    if (f >= 0)
      full[g] = free[f];
  }
  return full;
}

namespace {

double eval_coefficient(const Expr &e, double x, int element) {
  try {
    return e.eval(x);
  } catch (const DomainError &err) {
    throw DomainError("element " + std::to_string(element) + ": " + err.what(),
                      err.subexpression());
  }
}

} // namespace

System1D assemble(const Space1D &space, const Problem1D &prob, int quad_points) {
  const int p = space.degree();
  const int n = p + 1;
  const int nq = quad_points > 0 ? quad_points : p + 4;
  const auto rule = gauss_rule<double>(nq);
  Eigen::MatrixXd V, D;
  space.shapes().tabulate(rule.nodes, V, D);

  System1D sys{BandedSpd<double>(space.num_free(), p), Eigen::VectorXd::Zero(space.num_free())};
  const double eps2 = prob.eps * prob.eps;
  const auto &mesh = space.mesh();
  for (int j = 0; j < mesh.num_elements(); ++j) {
    const double h = mesh.h(j);
    Eigen::VectorXd bw(nq), fw(nq);
    for (int q = 0; q < nq; ++q) {
      const double x = mesh.from_reference(j, rule.nodes[q]);
      const double w = rule.weights[q] * 0.5 * h;
      bw[q] = w * eval_coefficient(prob.b, x, j);
      fw[q] = w * eval_coefficient(prob.f, x, j);
    }
    const Eigen::MatrixXd Ke = (eps2 * 2.0 / h) * (D.transpose() * rule.weights.asDiagonal() * D) +
                               V.transpose() * bw.asDiagonal() * V;
    const Eigen::VectorXd Fe = V.transpose() * fw;
    for (int a = 0; a < n; ++a) {
      const int ia = space.free_index(space.dof(j, a));
      if (ia < 0)
        continue;
      sys.rhs[ia] += Fe[a];
      for (int c = 0; c <= a; ++c) {
        const int ic = space.free_index(space.dof(j, c));
        if (ic < 0)
          continue;
        sys.matrix.add(ia, ic, Ke(a, c));
      }
    }
  }
  return sys;
}

FemSolution1D solve(const Space1D &space, const Problem1D &prob) {
  if (!space.dirichlet())
    throw InputError("solve: space must carry the Dirichlet mask");
  const System1D sys = assemble(space, prob);
  const Eigen::VectorXd x = cholesky_solve(sys.matrix, sys.rhs);
  const double rnorm = sys.rhs.lpNorm<Eigen::Infinity>();
  const double res = (sys.matrix.multiply(x) - sys.rhs).lpNorm<Eigen::Infinity>();
  if (res > 1e-10 * rnorm)
    throw NumericalError("solve: algebraic residual " + std::to_string(res / rnorm) +
                         " exceeds 1e-10");
  return FemSolution1D(space, expand_free(space, x));
}

FemSolution1D interpolate(const Space1D &space, const std::function<double(double)> &f) {
  const LobattoInterpolator<double> interp(space.degree());
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(space.num_dofs());
  const auto &mesh = space.mesh();
  for (int j = 0; j < mesh.num_elements(); ++j) {
    const Eigen::VectorXd c = interp.interpolate([&](double t) { return f(mesh.from_reference(j, t)); });
    for (int k = 0; k <= space.degree(); ++k)
      coeffs[space.dof(j, k)] = c[k];
  }
  return FemSolution1D(space, std::move(coeffs));
}

std::vector<double> merge_breakpoints(const std::vector<double> &a, const std::vector<double> &b) {
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double x : all)
    if (out.empty() || x - out.back() > 1e-15)
      out.push_back(x);
  return out;
}

std::vector<double> layer_breakpoints(double eps) {
  std::vector<double> pts{0.0, 1.0};
  for (double x = 0.25 * eps; x < 0.5; x *= 2.0) {
    pts.push_back(x);
    pts.push_back(1.0 - x);
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

Norms1D norms(const Function1D &v, const std::vector<double> &breakpoints, double eps,
              const Expr &b, int points) {
  const auto rule = gauss_rule<double>(points);
  double l2 = 0.0, h1 = 0.0, bl2 = 0.0, mx = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double a = breakpoints[i], c = breakpoints[i + 1];
    const auto r = rule.mapped(a, c);
    for (Eigen::Index q = 0; q < r.size(); ++q) {
      const ValueD val = v(r.nodes[q]);
      const double w = r.weights[q];
      l2 += w * val.value * val.value;
      h1 += w * val.derivative * val.derivative;
      bl2 += w * b.eval(r.nodes[q]) * val.value * val.value;
      mx = std::max(mx, std::abs(val.value));
    }
  }
  for (double x : sample_interval(0.0, 1.0, 1001))
    mx = std::max(mx, std::abs(v(x).value));
  Norms1D n;
  n.l2 = std::sqrt(l2);
  n.h1_semi = std::sqrt(h1);
  n.energy = std::sqrt(eps * eps * h1 + bl2);
  n.balanced = std::sqrt(l2 + eps * h1);
  n.max = mx;
  return n;
}

Norms1D error_norms(const FemSolution1D &sol, const Function1D &exact, double eps, const Expr &b) {
  const auto bp = merge_breakpoints(sol.space().mesh().nodes(), layer_breakpoints(eps));
  const Function1D diff = [&](double x) {
    const ValueD u = exact(x), uh = sol.eval(x);
    return ValueD{u.value - uh.value, u.derivative - uh.derivative};
  };
  return norms(diff, bp, eps, b, sol.space().degree() + 6);
}

Norms1D error_norms(const FemSolution1D &sol, const FemSolution1D &ref, double eps, const Expr &b) {
  auto bp = merge_breakpoints(sol.space().mesh().nodes(), ref.space().mesh().nodes());
  bp = merge_breakpoints(bp, layer_breakpoints(eps));
  // Each solution is evaluated on its own element; at a shared breakpoint the
  // left-element convention of eval() is harmless since Gauss points are interior.
  const Function1D diff = [&](double x) {
    const ValueD u = ref.eval(x), uh = sol.eval(x);
    return ValueD{u.value - uh.value, u.derivative - uh.derivative};
  };
  const int pref = std::max(sol.space().degree(), ref.space().degree());
  return norms(diff, bp, eps, b, pref + 6);
}

Mesh1D reference_mesh(double lambda, int degree, double eps) {
  const SblMesh1D m = make_sbl_mesh(lambda, degree, eps);
  // Layer terms decay like exp(-x/eps); without the graded nodes the middle
  // element would carry an exp(-lambda * degree) tail it cannot resolve.
  std::vector<double> graded;
  for (double x = eps; x <= 32.0 * eps && x < 0.25; x *= 2.0) {
    graded.push_back(x);
    graded.push_back(1.0 - x);
  }
  return Mesh1D(merge_breakpoints(bisect(m.mesh).nodes(), graded));
}

FemSolution1D reference_solution(const Problem1D &prob, double lambda, int p_max, int extra) {
  const int pr = p_max + extra;
  return solve(Space1D(reference_mesh(lambda, pr, prob.eps), pr), prob);
}

} // namespace hpsbl
