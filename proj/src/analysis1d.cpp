#include "hpsbl/analysis1d.hpp"
#include "hpsbl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hpsbl {

namespace {

constexpr double kMaxPiece = 1.0 / 64.0;

int pieces_for(double h, double max_piece) {
  return std::max(1, static_cast<int>(std::ceil(h / max_piece - 1e-12)));
}

void require_three_element(const SblMesh1D &m, const char *who) {
  if (m.regime != SblRegime::ThreeElement)
    throw RegimeError(std::string(who) + ": three-element regime (lambda p eps < 1/4) required");
}

// Local shape indices of the layer subspace on the outer elements: all
// functions except the vertex shared with the middle element.
std::vector<int> layer_locals(int p, bool left_element) {
  std::vector<int> k{left_element ? 0 : 1};
  for (int m = 2; m <= p; ++m)
    k.push_back(m);
  return k;
}

} // namespace

double l2_norm(const std::function<double(double)> &f, double a, double b, int points,
               double max_piece) {
  const auto rule = gauss_rule<double>(points);
  const int m = pieces_for(b - a, max_piece);
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    const auto r = rule.mapped(a + (b - a) * i / m, a + (b - a) * (i + 1) / m);
    for (Eigen::Index q = 0; q < r.size(); ++q) {
      const double v = f(r.nodes[q]);
      s += r.weights[q] * v * v;
    }
  }
  return std::sqrt(s);
}

FemSolution1D project_p0(const Space1D &space, const Expr &b, const std::function<double(double)> &z) {
  const int p = space.degree();
  const int n = p + 1;
  const auto rule = gauss_rule<double>(p + 4);
  const auto &mesh = space.mesh();
  BandedSpd<double> A(space.num_free(), p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space.num_free());
  Eigen::VectorXd vals(n), ders(n);
  for (int j = 0; j < mesh.num_elements(); ++j) {
    Eigen::MatrixXd Me = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd Fe = Eigen::VectorXd::Zero(n);
    const int m = pieces_for(mesh.h(j), kMaxPiece);
    for (int piece = 0; piece < m; ++piece) {
      const double a = mesh.left(j) + mesh.h(j) * piece / m;
      const double c = mesh.left(j) + mesh.h(j) * (piece + 1) / m;
      const auto r = rule.mapped(a, c);
      for (Eigen::Index q = 0; q < r.size(); ++q) {
        const double x = r.nodes[q];
        space.shapes().eval_into(mesh.to_reference(j, x), vals.data(), ders.data());
        const double w = r.weights[q] * b.eval(x);
        Me.noalias() += w * vals * vals.transpose();
        Fe.noalias() += (w * z(x)) * vals;
      }
    }
    for (int a = 0; a < n; ++a) {
      const int ia = space.free_index(space.dof(j, a));
      if (ia < 0)
        continue;
      rhs[ia] += Fe[a];
      for (int c = 0; c <= a; ++c) {
        const int ic = space.free_index(space.dof(j, c));
        if (ic >= 0)
          A.add(ia, ic, Me(a, c));
      }
    }
  }
  return FemSolution1D(space, expand_free(space, cholesky_solve(A, rhs)));
}

Decomposition1D decompose(const FemSolution1D &v, const SblMesh1D &mesh) {
  require_three_element(mesh, "decompose");
  const Space1D &space = v.space();
  if (space.mesh().num_elements() != 3)
    throw InputError("decompose: function must live on the three-element mesh");
  const int p = space.degree();
  const Mesh1D &m = space.mesh();

  // z1: the middle-element polynomial, read off at the Lobatto nodes of (0,1).
  const LobattoInterpolator<double> interp(p);
  const Space1D global_space(Mesh1D({0.0, 1.0}), p, false);
  Eigen::VectorXd gvals(p + 1);
  for (int i = 0; i <= p; ++i) {
    const double x = 0.5 * (1.0 + interp.nodes()[i]);
    gvals[i] = v.eval_local(1, m.to_reference(1, x)).value;
  }
  const Eigen::VectorXd local = interp.from_values(gvals);
  Eigen::VectorXd gc(p + 1);
  for (int k = 0; k <= p; ++k)
    gc[global_space.dof(0, k)] = local[k];
  FemSolution1D z1(global_space, std::move(gc));

  // z_eps = v - z1, exactly zero on the middle element.
  Eigen::VectorXd lc = Eigen::VectorXd::Zero(space.num_dofs());
  for (int j : {0, 2}) {
    Eigen::VectorXd vals(p + 1);
    for (int i = 0; i <= p; ++i) {
      const double x = m.from_reference(j, interp.nodes()[i]);
      vals[i] = v.eval_local(j, interp.nodes()[i]).value - z1.eval_local(0, 2.0 * x - 1.0).value;
    }
    const Eigen::VectorXd c = interp.from_values(vals);
    for (int k = 0; k <= p; ++k)
      lc[space.dof(j, k)] = c[k];
  }
  lc[space.dof(1, 0)] = 0.0;
  lc[space.dof(1, 1)] = 0.0;
  return {std::move(z1), FemSolution1D(Space1D(m, p, false), std::move(lc))};
}

ScsPencil build_scs_pencil(const Expr &b, double eps, double lambda, int p) {
  const SblMesh1D sbl = make_sbl_mesh(lambda, p, eps);
  require_three_element(sbl, "build_scs_pencil");
  const ShapeSet<double> shapes(p);
  const auto rule = gauss_rule<double>(2 * p + 4);
  const int n = p + 1;

  ScsPencil out;
  Eigen::MatrixXd V, D;
  shapes.tabulate(rule.nodes, V, D);
  out.global_mass = 0.5 * V.transpose() * rule.weights.asDiagonal() * V;

  const auto left = layer_locals(p, true), right = layer_locals(p, false);
  const int nl = static_cast<int>(left.size() + right.size());
  out.layer_mass = Eigen::MatrixXd::Zero(nl, nl);
  out.coupling = Eigen::MatrixXd::Zero(n, nl);
  const Mesh1D &m = sbl.mesh;
  Eigen::VectorXd gv(n), gd(n), lv(n), ld(n);
  int offset = 0;
  for (int j : {0, 2}) {
    const auto &locals = j == 0 ? left : right;
    const int k = static_cast<int>(locals.size());
    const auto r = rule.mapped(m.left(j), m.right(j));
    for (Eigen::Index q = 0; q < r.size(); ++q) {
      const double x = r.nodes[q];
      shapes.eval_into(2.0 * x - 1.0, gv.data(), gd.data());
      shapes.eval_into(m.to_reference(j, x), lv.data(), ld.data());
      Eigen::VectorXd sub(k);
      for (int i = 0; i < k; ++i)
        sub[i] = lv[locals[static_cast<std::size_t>(i)]];
      out.layer_mass.block(offset, offset, k, k).noalias() += r.weights[q] * sub * sub.transpose();
      out.coupling.middleCols(offset, k).noalias() += (r.weights[q] * b.eval(x)) * gv * sub.transpose();
    }
    offset += k;
  }
  return out;
}

double scs_ratio(const ScsPencil &pc, const Eigen::VectorXd &u, const Eigen::VectorXd &v) {
  const double nu = std::sqrt(u.dot(pc.global_mass * u));
  const double nv = std::sqrt(v.dot(pc.layer_mass * v));
  if (nu == 0.0 || nv == 0.0)
    return 0.0;
  return std::abs(u.dot(pc.coupling * v)) / (nu * nv);
}

double scs_supremum(const ScsPencil &pc) {
  const Eigen::MatrixXd lu = pc.global_mass.llt().matrixL();
  const Eigen::MatrixXd lv = pc.layer_mass.llt().matrixL();
  const Eigen::MatrixXd t = lu.triangularView<Eigen::Lower>().solve(pc.coupling);
  const Eigen::MatrixXd s = lv.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
  return Eigen::JacobiSVD<Eigen::MatrixXd>(s).singularValues()[0];
}

double estimate_scs(const ScsPencil &pc, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::Index nu = pc.global_mass.rows(), nv = pc.layer_mass.rows();
  Eigen::VectorXd best_u, best_v;
  double best = -1.0;
  for (int t = 0; t < std::max(1, trials); ++t) {
    Eigen::VectorXd u(nu), v(nv);
    for (auto &x : u)
      x = normal(rng);
    for (auto &x : v)
      x = normal(rng);
    const double r = scs_ratio(pc, u, v);
    if (r > best)
      best = r, best_u = u, best_v = v;
  }
  // For fixed v the maximising u is M_u^{-1} C v (and symmetrically for v).
  const Eigen::LLT<Eigen::MatrixXd> gu(pc.global_mass), gv(pc.layer_mass);
  Eigen::VectorXd u = best_u, v = best_v;
  for (int round = 0; round < 10; ++round) {
    u = gu.solve(pc.coupling * v);
    v = gv.solve(pc.coupling.transpose() * u);
    best = std::max(best, scs_ratio(pc, u, v));
  }
  return best;
}

double measure_scs_constant(const Expr &b, double eps, double lambda, int p, int trials,
                            std::uint64_t seed) {
  return estimate_scs(build_scs_pencil(b, eps, lambda, p), trials, seed);
}

double measure_inverse_constant(Subspace1D kind, double lambda, int p, double eps) {
  if (kind == Subspace1D::Global) {
    if (p == 0)
      return 0.0;
    const ShapeSet<double> shapes(p);
    const auto rule = gauss_rule<double>(p + 4);
    Eigen::MatrixXd V, D;
    shapes.tabulate(rule.nodes, V, D);
    // (0,1): dx = dt/2, d/dx = 2 d/dt
    const Eigen::MatrixXd K = 2.0 * D.transpose() * rule.weights.asDiagonal() * D;
    const Eigen::MatrixXd M = 0.5 * V.transpose() * rule.weights.asDiagonal() * V;
    return std::sqrt(max_gen_eig(K, M, 1e-10).value);
  }
  const SblMesh1D sbl = make_sbl_mesh(lambda, p, eps);
  require_three_element(sbl, "measure_inverse_constant");
  const ShapeSet<double> shapes(p);
  const auto rule = gauss_rule<double>(p + 4);
  Eigen::MatrixXd V, D;
  shapes.tabulate(rule.nodes, V, D);
  const double h = sbl.layer_width();
  const Eigen::MatrixXd Kl = (2.0 / h) * D.transpose() * rule.weights.asDiagonal() * D;
  const Eigen::MatrixXd Ml = (0.5 * h) * V.transpose() * rule.weights.asDiagonal() * V;
  const auto left = layer_locals(p, true), right = layer_locals(p, false);
  const int k = static_cast<int>(left.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2 * k, 2 * k), M = K;
  for (int a = 0; a < k; ++a)
    for (int c = 0; c < k; ++c) {
      K(a, c) = Kl(left[a], left[c]);
      M(a, c) = Ml(left[a], left[c]);
      K(k + a, k + c) = Kl(right[a], right[c]);
      M(k + a, k + c) = Ml(right[a], right[c]);
    }
  return std::sqrt(max_gen_eig(K, M, 1e-10).value);
}

RandomFourier1D::RandomFourier1D(std::uint64_t seed, int modes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  cos_.resize(static_cast<std::size_t>(modes) + 1);
  sin_.resize(static_cast<std::size_t>(modes) + 1);
  for (int k = 0; k <= modes; ++k) {
    const double scale = k == 0 ? 1.0 : 1.0 / k;
    cos_[k] = scale * normal(rng);
    sin_[k] = k == 0 ? 0.0 : scale * normal(rng);
  }
}

double RandomFourier1D::operator()(double x) const {
  double s = cos_[0];
  for (std::size_t k = 1; k < cos_.size(); ++k) {
    const double a = static_cast<double>(k) * std::numbers::pi * x;
    s += cos_[k] * std::cos(a) + sin_[k] * std::sin(a);
  }
  return s;
}

std::vector<StabilityRow> stability_study(const Expr &b, double lambda, const std::vector<int> &ps,
                                          const std::vector<double> &epss, int trials,
                                          std::uint64_t seed, double c) {
  for (double eps : epss)
    for (int p : ps) {
      const double scale = std::sqrt(lambda * p * eps) * p;
      if (scale > c || lambda * p * eps >= 0.25)
        throw RegimeError("stability_study: (eps=" + std::to_string(eps) + ", p=" +
                          std::to_string(p) + ") violates sqrt(lambda p eps) p <= c");
    }

  std::vector<StabilityRow> rows;
  for (double eps : epss) {
    for (int p : ps) {
      const SblMesh1D sbl = make_sbl_mesh(lambda, p, eps);
      const Space1D space(sbl.mesh, p, true);
      const double w = sbl.layer_width();
      StabilityRow row;
      row.eps = eps;
      row.p = p;
      row.scale = std::sqrt(w) * p;
      row.trials = trials;
      row.seed = seed;
      for (int t = 0; t < trials; ++t) {
        const RandomFourier1D z(seed + static_cast<std::uint64_t>(t));
        const std::function<double(double)> zf = [&](double x) { return z(x); };
        const FemSolution1D pz = project_p0(space, b, zf);
        const Decomposition1D d = decompose(pz, sbl);
        const int q = p + 4;
        const double nz = l2_norm(zf, 0.0, 1.0, q);
        const double nz_layer = std::hypot(l2_norm(zf, 0.0, w, q), l2_norm(zf, 1.0 - w, 1.0, q));
        const double nz1 = l2_norm([&](double x) { return d.global.eval(x).value; }, 0.0, 1.0, q);
        const auto lay = [&](double x) { return d.layer.eval(x).value; };
        const double nzeps = std::hypot(l2_norm(lay, 0.0, w, q), l2_norm(lay, 1.0 - w, 1.0, q));
        if (nz > 0.0) {
          row.z1_ratio = std::max(row.z1_ratio, nz1 / nz);
          row.zeps_ratio = std::max(row.zeps_ratio, nzeps / (nz_layer + row.scale * nz));
        }
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<InterpolationRow> interpolation_study(const Problem1D &prob, double lambda,
                                                  const std::vector<int> &ps) {
  if (!prob.exact)
    throw InputError("interpolation_study: problem needs a closed-form solution");
  std::vector<InterpolationRow> rows;
  for (int p : ps) {
    const SblMesh1D m = make_sbl_mesh(lambda, p, prob.eps);
    const Space1D space(m.mesh, p, false);
    const FemSolution1D iu = interpolate(space, [&](double x) { return prob.exact(x).value; });
    rows.push_back({p, prob.eps, error_norms(iu, prob.exact, prob.eps, prob.b)});
  }
  return rows;
}

} // namespace hpsbl
