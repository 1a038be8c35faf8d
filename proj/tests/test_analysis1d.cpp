#include "doctest.h"

#include "hpsbl/analysis1d.hpp"
#include "hpsbl/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace hpsbl;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (auto &x : v)
    x = g(rng);
  return v;
}

// Exact sup of the coupling ratio: largest singular value of
// L_u^{-1} C L_v^{-T} with M = L L^T.
double exact_scs(const ScsPencil &pc) {
  const Eigen::MatrixXd Lu = pc.global_mass.llt().matrixL();
  const Eigen::MatrixXd Lv = pc.layer_mass.llt().matrixL();
  const Eigen::MatrixXd X = Lu.triangularView<Eigen::Lower>().solve(pc.coupling);
  const Eigen::MatrixXd Y = Lv.triangularView<Eigen::Lower>().solve(X.transpose());
  return Eigen::JacobiSVD<Eigen::MatrixXd>(Y).singularValues()[0];
}

double l2_diff(const FemSolution1D &a, const std::function<double(double)> &b) {
  return l2_norm([&](double x) { return a(x).value - b(x); }, 0.0, 1.0, 12);
}

} // namespace

TEST_CASE("P0 projection") {
  const double eps = 1e-3;
  const int p = 4;
  const auto m = make_sbl_mesh(1.0, p, eps);
  const Space1D space(m.mesh, p);
  std::mt19937_64 rng(17);

  SUBCASE("idempotent on S0") {
    Eigen::VectorXd c = random_vector(space.num_dofs(), rng);
    c[0] = c[space.num_dofs() - 1] = 0.0;
    const FemSolution1D z(space, c);
    const auto pz = project_p0(space, Expr::parse("1+x"), [&](double x) { return z(x).value; });
    CHECK((pz.coefficients() - c).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("B0-orthogonality of the residual") {
    const Expr b = Expr::parse("2+sin(3*x)");
    const RandomFourier1D z(5);
    const auto pz = project_p0(space, b, [&](double x) { return z(x); });
    const auto rule = gauss_rule<double>(20);
    for (int g = 1; g + 1 < space.num_dofs(); ++g) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(space.num_dofs());
      e[g] = 1.0;
      const FemSolution1D phi(space, e);
      double s = 0.0;
      for (int j = 0; j < 3; ++j) {
        const int pieces = j == 1 ? 128 : 1;
        for (int k = 0; k < pieces; ++k) {
          const double a = m.mesh.left(j) + m.mesh.h(j) * k / pieces;
          const auto r = rule.mapped(a, a + m.mesh.h(j) / pieces);
          for (Eigen::Index q = 0; q < r.size(); ++q) {
            const double x = r.nodes[q];
            s += r.weights[q] * b(x) * (z(x) - pz(x).value) * phi(x).value;
          }
        }
      }
      CHECK(std::abs(s) < 1e-9);
    }
  }
  SUBCASE("invariant under scaling of b") {
    const RandomFourier1D z(8);
    const auto zf = [&](double x) { return z(x); };
    const auto a = project_p0(space, Expr::parse("1+x*x"), zf);
    const auto c = project_p0(space, Expr::parse("3.7*(1+x*x)"), zf);
    CHECK((a.coefficients() - c.coefficients()).norm() < 1e-10 * a.coefficients().norm());
  }
  SUBCASE("constant function, b = 1: contraction in L2") {
    const auto pz = project_p0(space, Expr::constant(1.0), [](double) { return 1.0; });
    CHECK(l2_norm([&](double x) { return pz(x).value; }, 0.0, 1.0, 10) <= 1.0 + 1e-12);
  }
  SUBCASE("annihilates functions orthogonal to S0") {
    const RandomFourier1D w(3);
    const Expr one = Expr::constant(1.0);
    const auto pw = project_p0(space, one, [&](double x) { return w(x); });
    const std::function<double(double)> z = [&](double x) { return w(x) - pw(x).value; };
    const auto pz = project_p0(space, one, z);
    CHECK(pz.coefficients().cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("decomposition S1 + S_eps") {
  const double eps = 1e-3;
  const int p = 3;
  const auto m = make_sbl_mesh(1.0, p, eps);
  const Space1D space(m.mesh, p, false);
  const double w = m.layer_width();

  SUBCASE("a global polynomial has no layer part") {
    const auto v = interpolate(space, [](double x) { return 1 + x - 2 * x * x * x; });
    const auto d = decompose(v, m);
    CHECK(d.layer.coefficients().cwiseAbs().maxCoeff() < 1e-9);
    CHECK(l2_diff(d.global, [](double x) { return 1 + x - 2 * x * x * x; }) < 1e-10);
  }
  SUBCASE("a layer function has no global part") {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(space.num_dofs());
    c[space.dof(0, 0)] = 1.0;
    c[space.dof(2, 2)] = -0.5;
    const auto d = decompose(FemSolution1D(space, c), m);
    CHECK(d.global.coefficients().cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("hat at the layer node") {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(space.num_dofs());
    c[space.dof(0, 1)] = 1.0;
    const FemSolution1D v(space, c);
    const auto d = decompose(v, m);
    for (double x : sample_interval(0.0, 1.0, 200))
      CHECK(std::abs(d.global(x).value + d.layer(x).value - v(x).value) < 1e-9);
    for (double x : sample_interval(w, 1.0 - w, 100))
      CHECK(std::abs(d.layer(x).value) < 1e-12);
  }
  SUBCASE("uniqueness: random pairs are recovered") {
    std::mt19937_64 rng(21);
    const Space1D gspace(Mesh1D({0.0, 1.0}), p, false);
    for (int t = 0; t < 100; ++t) {
      const FemSolution1D z1(gspace, random_vector(p + 1, rng));
      Eigen::VectorXd lc = random_vector(space.num_dofs(), rng);
      for (int k = 0; k <= p; ++k)
        lc[space.dof(1, k)] = 0.0;
      const FemSolution1D zeps(space, lc);
      const auto sum = interpolate(space, [&](double x) { return z1(x).value + zeps(x).value; });
      const auto d = decompose(sum, m);
      CHECK((d.global.coefficients() - z1.coefficients()).norm() < 1e-9 * (1 + z1.coefficients().norm()));
      CHECK((d.layer.coefficients() - lc).norm() < 1e-9 * (1 + lc.norm()));
    }
  }
  SUBCASE("asymptotic regime is rejected") {
    const auto a = make_sbl_mesh(1.0, 3, 0.1);
    CHECK_THROWS_AS(decompose(interpolate(Space1D(a.mesh, 3, false), [](double) { return 1.0; }), a),
                    RegimeError);
  }
}

TEST_CASE("strengthened Cauchy-Schwarz constant") {
  SUBCASE("parity: odd global vs symmetric layer vanishes") {
    const auto pc = build_scs_pencil(Expr::constant(1.0), 1e-3, 1.0, 3);
    // u = 2x - 1 on (0,1): coefficients (-1, 1, 0, 0)
    Eigen::VectorXd u = Eigen::VectorXd::Zero(4);
    u[0] = -1;
    u[1] = 1;
    // layer function symmetric about 1/2: equal coefficients on mirrored modes
    // (odd modes flip sign under reflection)
    Eigen::VectorXd v(6);
    v << 1.0, 0.3, 0.2, 1.0, 0.3, -0.2;
    CHECK(scs_ratio(pc, u, v) < 1e-12);
  }
  SUBCASE("parity: constant global vs odd layer mode vanishes") {
    const auto pc = build_scs_pencil(Expr::constant(1.0), 1e-4, 1.0, 4);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(5);
    u[0] = u[1] = 1.0;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(8);
    v[2] = 1.0; // phi_3 on the left layer element
    CHECK(scs_ratio(pc, u, v) < 1e-14);
  }
  SUBCASE("measured value matches the exact supremum and the predicted scale") {
    for (int p : {1, 2, 4, 8}) {
      for (double eps : {1e-3, 1e-4, 1e-6}) {
        const Expr b = Expr::constant(1.0);
        const double meas = measure_scs_constant(b, eps, 1.0, p);
        const double exact = exact_scs(build_scs_pencil(b, eps, 1.0, p));
        CHECK(meas <= exact * (1 + 1e-10));
        CHECK(meas >= 0.95 * exact);
        CHECK(meas <= 5.0 * std::min(1.0, std::sqrt(p * eps) * p));
      }
    }
  }
  SUBCASE("bounded by max b") {
    const Expr b = Expr::parse("1+x");
    CHECK(measure_scs_constant(b, 1e-2, 1.0, 3) <= 2.0 * 1.0001);
  }
  CHECK_THROWS_AS(build_scs_pencil(Expr::constant(1.0), 0.3, 1.0, 1), RegimeError);
}

TEST_CASE("inverse-estimate constants") {
  CHECK(measure_inverse_constant(Subspace1D::Global, 1.0, 1, 1.0) ==
        doctest::Approx(std::sqrt(12.0)).epsilon(1e-8));
  CHECK(measure_inverse_constant(Subspace1D::Global, 1.0, 0, 1.0) == 0.0);

  // dense generalized eigensolver oracle for S1
  for (int p = 2; p <= 10; ++p) {
    const ShapeSet<double> s(p);
    const auto rule = gauss_rule<double>(p + 4);
    Eigen::MatrixXd V, D;
    s.tabulate(rule.nodes, V, D);
    const Eigen::MatrixXd K = 2.0 * D.transpose() * rule.weights.asDiagonal() * D;
    const Eigen::MatrixXd M = 0.5 * V.transpose() * rule.weights.asDiagonal() * V;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
    const double c = measure_inverse_constant(Subspace1D::Global, 1.0, p, 1.0);
    CHECK(c == doctest::Approx(std::sqrt(es.eigenvalues().maxCoeff())).epsilon(1e-7));
    CHECK(c <= 2.0 * std::sqrt(3.0) * p * p + 1e-9);
  }
  // S_eps / S1 ratio scales like 1 / (lambda p eps)
  for (int p : {2, 4, 6}) {
    const double eps = 1e-4;
    const double ratio = measure_inverse_constant(Subspace1D::Layer, 1.0, p, eps) /
                         measure_inverse_constant(Subspace1D::Global, 1.0, p, eps);
    const double pred = 1.0 / (p * eps);
    CHECK(ratio >= 0.5 * pred);
    CHECK(ratio <= 2.0 * pred);
  }
}

TEST_CASE("stability study") {
  const Expr one = Expr::constant(1.0);
  const auto rows = stability_study(one, 1.0, {2, 4}, {1e-4, 1e-6}, 5, 7);
  REQUIRE(rows.size() == 4);
  for (const auto &r : rows) {
    CHECK(r.trials == 5);
    CHECK(r.z1_ratio > 0.0);
    CHECK(r.z1_ratio < 10.0);
    CHECK(r.zeps_ratio < 10.0);
  }
  CHECK_THROWS_AS(stability_study(one, 1.0, {10}, {1e-2}, 2, 1), RegimeError);

  // zero input: everything vanishes
  const auto m = make_sbl_mesh(1.0, 3, 1e-4);
  const auto pz = project_p0(Space1D(m.mesh, 3), one, [](double) { return 0.0; });
  CHECK(pz.coefficients().norm() == 0.0);
}

TEST_CASE("interpolation study") {
  {
    Problem1D prob;
    prob.eps = 1e-3;
    prob.exact = [](double x) { return ValueD{x * (1 - x), 1 - 2 * x}; };
    for (const auto &r : interpolation_study(prob, 1.0, {2, 3, 5}))
      CHECK(r.error.balanced < 1e-11);
  }
  {
    std::vector<int> ps;
    for (int p = 1; p <= 10; ++p)
      ps.push_back(p);
    const auto rows = interpolation_study(constant_coefficient_problem(1e-6), 1.0, ps);
    for (std::size_t i = 1; i < rows.size(); ++i)
      CHECK(rows[i].error.balanced < rows[i - 1].error.balanced);
  }
  {
    for (int p : {2, 4, 6}) {
      double lo = 1e300, hi = 0.0;
      for (double eps : {1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
        const double e = interpolation_study(constant_coefficient_problem(eps), 1.0, {p})[0].error.balanced;
        lo = std::min(lo, e);
        hi = std::max(hi, e);
      }
      CHECK(hi <= 3.0 * lo);
    }
  }
  Problem1D no_exact;
  CHECK_THROWS_AS(interpolation_study(no_exact, 1.0, {2}), InputError);
}
