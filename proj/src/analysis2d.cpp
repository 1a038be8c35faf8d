#include "hpsbl/analysis2d.hpp"
#include "hpsbl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace hpsbl {

namespace {

// Local coefficients of the Q_p interpolant of g at the tensor Lobatto nodes of [0,1]^2.
template <typename G> Eigen::VectorXd tensor_interpolate(const LobattoInterpolator<double> &li, G &&g) {
  const Eigen::Index n = li.nodes().size();
  Eigen::MatrixXd vals(n, n);
  for (Eigen::Index b = 0; b < n; ++b)
    for (Eigen::Index a = 0; a < n; ++a)
      vals(a, b) = g(0.5 * (li.nodes()[a] + 1.0), 0.5 * (li.nodes()[b] + 1.0));
  const Eigen::MatrixXd c1 = li.from_values(vals);
  const Eigen::MatrixXd c = li.from_values(Eigen::MatrixXd(c1.transpose())).transpose();
  return Eigen::Map<const Eigen::VectorXd>(c.data(), n * n); // column-major: l = i + n j
}

double local_value(const ShapeSet<double> &shapes, const Eigen::VectorXd &c, double xi, double eta) {
  return local_basis(shapes, xi, eta).value.dot(c);
}

void set_local(const Space2D &space, int e, const Eigen::VectorXd &c, Eigen::VectorXd &global) {
  const auto &dofs = space.element_dofs(e);
  const auto &signs = space.element_signs(e);
  for (std::size_t l = 0; l < dofs.size(); ++l)
    global[dofs[l]] = signs[l] * c[static_cast<Eigen::Index>(l)];
}

bool is_needle(const BlElement &e) { return e.map.kind() == ElementKind::Needle; }

BlMesh2D require_split(std::shared_ptr<const AsymptoticMesh2D> parent, double lambda, int p, double eps,
                       const char *who) {
  BlMesh2D m = split_needles(std::move(parent), lambda, p, eps);
  if (!m.split)
    throw RegimeError(std::string(who) + ": needle regime (lambda p eps < 1/2) required");
  return m;
}

const Expr &unit_weight() {
  static const Expr one = Expr::constant(1.0);
  return one;
}

// L2 norm over Omega of a parent-coordinate field (value only).
double l2_parent(const std::function<double(int, double, double)> &f, const AsymptoticMesh2D &parent,
                 const std::vector<std::vector<double>> &breaks, int points) {
  return norms2d([&](int k, double xi, double eta) { return Value2D{f(k, xi, eta), Eigen::Vector2d::Zero()}; },
                 parent, breaks, 1.0, unit_weight(), points)
      .l2;
}

} // namespace

FemSolution2D project_p0_2d(const Space2D &space, const Expr &b, const PointFunction &z, int workers) {
  const int n = std::max(space.degree() + 4, 20);
  const System2D sys =
      assemble_system(space, 0.0, b, [&](const Eigen::Vector2d &x) { return b(x.x(), x.y()) * z(x); }, n, workers);
  if (sys.rhs.norm() == 0.0)
    return FemSolution2D(space, Eigen::VectorXd::Zero(space.num_dofs()));
  return FemSolution2D(space, expand_free(space, spd_solve(sys.matrix, sys.rhs)));
}

std::shared_ptr<const BlMesh2D> asymptotic_bl_mesh(std::shared_ptr<const AsymptoticMesh2D> parent) {
  return std::make_shared<const BlMesh2D>(split_boundary(std::move(parent), {}));
}

Decomposition2D decompose2d(const FemSolution2D &v) {
  const BlMesh2D &mesh = v.space().mesh();
  if (!mesh.split)
    throw RegimeError("decompose2d: needle regime (lambda p eps < 1/2) required");
  const int p = v.space().degree();
  const LobattoInterpolator<double> li(p);
  const ShapeSet<double> &shapes = v.space().shapes();

  const Space2D global_space(asymptotic_bl_mesh(mesh.parent), p, false);
  Eigen::VectorXd gc = Eigen::VectorXd::Zero(global_space.num_dofs());
  for (std::size_t k = 0; k < mesh.children.size(); ++k) {
    const auto &kids = mesh.children[k];
    const int child = kids.back(); // the regular child (or the element itself)
    const BlElement &el = mesh.elements[static_cast<std::size_t>(child)];
    const Eigen::VectorXd c = v.element_coefficients(child);
    Eigen::VectorXd local;
    if (kids.size() == 1) {
      local = c;
    } else {
      const double s = el.xi0, h = el.xi1 - el.xi0;
      local = tensor_interpolate(li, [&](double xi, double eta) { return local_value(shapes, c, (xi - s) / h, eta); });
    }
    set_local(global_space, static_cast<int>(k), local, gc);
  }
  FemSolution2D z1(global_space, std::move(gc));

  const Space2D layer_space(v.space().mesh_ptr(), p, false);
  Eigen::VectorXd lc = Eigen::VectorXd::Zero(layer_space.num_dofs());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const BlElement &el = mesh.elements[static_cast<std::size_t>(e)];
    if (!is_needle(el))
      continue;
    const Eigen::VectorXd cv = v.element_coefficients(e);
    const Eigen::VectorXd c1 = z1.element_coefficients(el.parent);
    const double h = el.xi1 - el.xi0;
    set_local(layer_space, e,
              tensor_interpolate(li,
                                 [&](double xi, double eta) {
                                   return local_value(shapes, cv, xi, eta) -
                                          local_value(shapes, c1, el.xi0 + h * xi, eta);
                                 }),
              lc);
  }
  // exact support: DOFs shared with other elements carry v - z1 = 0
  for (int e = 0; e < mesh.num_elements(); ++e)
    if (!is_needle(mesh.elements[static_cast<std::size_t>(e)]))
      for (int g : layer_space.element_dofs(e))
        lc[g] = 0.0;
  return {std::move(z1), FemSolution2D(layer_space, std::move(lc))};
}

std::vector<int> layer_dofs(const Space2D &space) {
  const BlMesh2D &mesh = space.mesh();
  std::vector<char> other(static_cast<std::size_t>(space.num_dofs()), 0), needle(other.size(), 0);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    auto &mark = is_needle(mesh.elements[static_cast<std::size_t>(e)]) ? needle : other;
    for (int g : space.element_dofs(e))
      mark[static_cast<std::size_t>(g)] = 1;
  }
  std::vector<int> out;
  for (int g = 0; g < space.num_dofs(); ++g)
    if (needle[static_cast<std::size_t>(g)] && !other[static_cast<std::size_t>(g)])
      out.push_back(g);
  return out;
}

ScsPencil build_scs_pencil2d(std::shared_ptr<const AsymptoticMesh2D> parent, const Expr &b, double lambda, int p,
                             double eps) {
  auto bl = std::make_shared<const BlMesh2D>(require_split(parent, lambda, p, eps, "build_scs_pencil2d"));
  const Space2D s1(asymptotic_bl_mesh(parent), p, false);
  const Space2D sl(bl, p, false);
  const std::vector<int> ld = layer_dofs(sl);
  std::vector<int> index(static_cast<std::size_t>(sl.num_dofs()), -1);
  for (std::size_t i = 0; i < ld.size(); ++i)
    index[static_cast<std::size_t>(ld[i])] = static_cast<int>(i);

  ScsPencil out;
  out.global_mass = assemble_system(s1, 0.0, unit_weight(), {}, p + 4).matrix.to_dense();
  const Eigen::Index nl = static_cast<Eigen::Index>(ld.size());
  out.layer_mass = Eigen::MatrixXd::Zero(nl, nl);
  out.coupling = Eigen::MatrixXd::Zero(s1.num_dofs(), nl);

  const int n = p + 4, pp = p + 1;
  const auto rule = gauss_rule<double>(n);
  for (int e = 0; e < bl->num_elements(); ++e) {
    const BlElement &el = bl->elements[static_cast<std::size_t>(e)];
    if (!is_needle(el))
      continue;
    Eigen::MatrixXd b1(n * n, pp * pp), bn(n * n, pp * pp);
    Eigen::VectorXd w(n * n), wb(n * n);
    for (int c = 0; c < n; ++c)
      for (int a = 0; a < n; ++a) {
        const int q = a + n * c;
        const double xi = 0.5 * (rule.nodes[a] + 1.0), eta = 0.5 * (rule.nodes[c] + 1.0);
        const MapEval me = el.map.eval(xi, eta);
        w[q] = 0.25 * rule.weights[a] * rule.weights[c] * me.jacobian.determinant();
        wb[q] = w[q] * b(me.x.x(), me.x.y());
        bn.row(q) = local_basis(sl.shapes(), xi, eta).value.transpose();
        b1.row(q) = local_basis(s1.shapes(), el.xi0 + (el.xi1 - el.xi0) * xi, eta).value.transpose();
      }
    const Eigen::MatrixXd mass = bn.transpose() * w.asDiagonal() * bn;
    const Eigen::MatrixXd coupling = b1.transpose() * wb.asDiagonal() * bn;
    const auto &d1 = s1.element_dofs(el.parent);
    const auto &g1 = s1.element_signs(el.parent);
    const auto &dn = sl.element_dofs(e);
    const auto &gn = sl.element_signs(e);
    for (int m = 0; m < pp * pp; ++m) {
      const int jm = index[static_cast<std::size_t>(dn[static_cast<std::size_t>(m)])];
      if (jm < 0)
        continue;
      for (int l = 0; l < pp * pp; ++l) {
        out.coupling(d1[static_cast<std::size_t>(l)], jm) += g1[static_cast<std::size_t>(l)] *
                                                              gn[static_cast<std::size_t>(m)] * coupling(l, m);
        const int jl = index[static_cast<std::size_t>(dn[static_cast<std::size_t>(l)])];
        if (jl >= 0)
          out.layer_mass(jl, jm) += gn[static_cast<std::size_t>(l)] * gn[static_cast<std::size_t>(m)] * mass(l, m);
      }
    }
  }
  return out;
}

double measure_scs_constant2d(std::shared_ptr<const AsymptoticMesh2D> parent, const Expr &b, double lambda, int p,
                              double eps, int trials, std::uint64_t seed) {
  return estimate_scs(build_scs_pencil2d(std::move(parent), b, lambda, p, eps), trials, seed);
}

double measure_inverse_constant2d(std::shared_ptr<const AsymptoticMesh2D> parent, Subspace2D kind, double lambda,
                                  int p, double eps) {
  std::shared_ptr<const BlMesh2D> mesh =
      kind == Subspace2D::Global
          ? asymptotic_bl_mesh(parent)
          : std::make_shared<const BlMesh2D>(require_split(parent, lambda, p, eps, "measure_inverse_constant2d"));
  const Space2D space(mesh, p, false);
  double worst = 0.0;
  for (int e = 0; e < mesh->num_elements(); ++e) {
    if (kind == Subspace2D::Needle && !is_needle(mesh->elements[static_cast<std::size_t>(e)]))
      continue;
    const ElementMatrices2D m = element_matrices(space, e, unit_weight(), {}, p + 4);
    worst = std::max(worst, std::sqrt(max_gen_eig(m.stiffness, m.mass, 1e-10).value));
  }
  return worst;
}

RandomFourier2D::RandomFourier2D(std::uint64_t seed, int modes) : modes_(modes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const std::size_t n = static_cast<std::size_t>((modes + 1) * (modes + 1));
  cos_.resize(n);
  sin_.resize(n);
  for (int l = 0; l <= modes; ++l)
    for (int k = 0; k <= modes; ++k) {
      const std::size_t i = static_cast<std::size_t>(k + (modes + 1) * l);
      cos_[i] = normal(rng) / (1 + k + l);
      sin_[i] = normal(rng) / (1 + k + l);
    }
}

double RandomFourier2D::operator()(const Eigen::Vector2d &x) const {
  double s = 0.0;
  for (int l = 0; l <= modes_; ++l)
    for (int k = 0; k <= modes_; ++k) {
      const std::size_t i = static_cast<std::size_t>(k + (modes_ + 1) * l);
      const double a = k * std::numbers::pi * x.x() / 2 + l * std::numbers::pi * x.y();
      s += cos_[i] * std::cos(a) + sin_[i] * std::sin(a);
    }
  return s;
}

FemSolution2D boundary_corrected_layer(const Decomposition2D &d) {
  const Space2D &space = d.layer.space();
  const BlMesh2D &mesh = space.mesh();
  const int p = space.degree();
  const LobattoInterpolator<double> li(p);
  Eigen::VectorXd c = d.layer.coefficients();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const BlElement &el = mesh.elements[static_cast<std::size_t>(e)];
    if (!is_needle(el))
      continue;
    const Eigen::VectorXd ce = d.layer.element_coefficients(e);
    const Eigen::VectorXd c1 = d.global.element_coefficients(el.parent);
    set_local(space, e,
              tensor_interpolate(li,
                                 [&](double xi, double eta) {
                                   return local_value(space.shapes(), ce, xi, eta) +
                                          std::pow(1.0 - xi, p) * local_value(space.shapes(), c1, 0.0, eta);
                                 }),
              c);
  }
  return FemSolution2D(space, std::move(c));
}

std::vector<StabilityRow2D> stability_study2d(std::shared_ptr<const AsymptoticMesh2D> parent, const Expr &b,
                                              double lambda, const std::vector<int> &ps,
                                              const std::vector<double> &epss, int trials, std::uint64_t seed,
                                              double c) {
  for (double eps : epss)
    for (int p : ps)
      if (std::sqrt(lambda * p * eps) * p > c || lambda * p * eps >= 0.5)
        throw RegimeError("stability_study2d: (eps=" + std::to_string(eps) + ", p=" + std::to_string(p) +
                          ") violates sqrt(lambda p eps) p <= c");

  std::vector<StabilityRow2D> rows;
  for (double eps : epss) {
    for (int p : ps) {
      auto mesh = std::make_shared<const BlMesh2D>(split_needles(parent, lambda, p, eps));
      const Space2D space(mesh, p);
      const auto breaks = element_breakpoints(*mesh);
      const double w = mesh->layer_width();
      const int q = std::max(p + 4, 20);
      StabilityRow2D row;
      row.eps = eps;
      row.p = p;
      row.scale = std::sqrt(w) * p;
      row.trials = trials;
      row.seed = seed;
      for (int t = 0; t < trials; ++t) {
        const RandomFourier2D z(seed + static_cast<std::uint64_t>(t));
        const auto at = [&](int k, double xi, double eta) {
          return z(parent->elements[static_cast<std::size_t>(k)](xi, eta));
        };
        const Decomposition2D d = decompose2d(project_p0_2d(space, b, [&](const Eigen::Vector2d &x) { return z(x); }));
        const double nz = l2_parent(at, *parent, breaks, q);
        const double nz_layer = l2_parent(
            [&](int k, double xi, double eta) { return parent->is_boundary(k) && xi < w ? at(k, xi, eta) : 0.0; },
            *parent, breaks, q);
        const double nz1 =
            l2_parent([&](int k, double xi, double eta) { return d.global.eval_parent(k, xi, eta).value; }, *parent,
                      breaks, q);
        const double nzeps =
            l2_parent([&](int k, double xi, double eta) { return d.layer.eval_parent(k, xi, eta).value; }, *parent,
                      breaks, q);
        if (nz > 0.0) {
          row.z1_ratio = std::max(row.z1_ratio, nz1 / nz);
          row.zeps_ratio = std::max(row.zeps_ratio, nzeps / (nz_layer + row.scale * nz));
        }
        const FemSolution2D corrected = boundary_corrected_layer(d);
        for (int e = 0; e < mesh->num_elements(); ++e)
          if (mesh->elements[static_cast<std::size_t>(e)].on_boundary)
            for (int k = 0; k < 20; ++k)
              row.corrected_boundary =
                  std::max(row.corrected_boundary, std::abs(corrected.eval_local(e, 0.0, k / 19.0).value));
      }
      rows.push_back(row);
    }
  }
  return rows;
}

} // namespace hpsbl
