#include "doctest.h"

#include "hpsbl/errors.hpp"
#include "hpsbl/geom2d.hpp"

#include <cmath>
#include <numbers>

using namespace hpsbl;

namespace {

std::shared_ptr<const AsymptoticMesh2D> disk() { return std::make_shared<AsymptoticMesh2D>(make_disk_mesh()); }
std::shared_ptr<const AsymptoticMesh2D> ellipse() {
  return std::make_shared<AsymptoticMesh2D>(make_ellipse_mesh());
}

double inside_ellipse(const Eigen::Vector2d &x) { return x.x() * x.x() / 4 + x.y() * x.y(); }

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    mx += std::log(x[i]), my += std::log(y[i]);
  mx /= x.size(), my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

} // namespace

TEST_CASE("boundary curves") {
  const auto c = ellipse_curve(2.0, 1.0);
  CHECK_NOTHROW(c.validate());
  CHECK(c.min_curvature_radius() == doctest::Approx(0.5));
  CHECK(unit_circle().curvature_radius(0.3) == doctest::Approx(1.0));
  // inward normal points toward the centre
  for (double t : {0.0, 0.7, 2.0, 4.5})
    CHECK(c.inward_normal(t).dot(c.point(t)) < 0.0);
  // derivative of the normal against central differences
  const double h = 1e-6;
  for (double t : {0.1, 1.3, 3.0}) {
    const Eigen::Vector2d fd = (c.inward_normal(t + h) - c.inward_normal(t - h)) / (2 * h);
    CHECK((fd - c.inward_normal_derivative(t)).norm() < 1e-7);
  }
  CHECK_THROWS_AS(ellipse_curve(0.0, 1.0), InputError);
}

TEST_CASE("O-grid meshes: areas") {
  const auto d = split_needles(disk(), 1.0, 1, 1.0);
  CHECK(std::abs(mesh_area(d) - std::numbers::pi) < 1e-10);
  const auto e = split_needles(ellipse(), 1.0, 1, 1.0);
  CHECK(std::abs(mesh_area(e) - 2 * std::numbers::pi) < 1e-10);
  for (int n : {4, 12, 16}) {
    auto m = std::make_shared<AsymptoticMesh2D>(make_ellipse_mesh(n, 0.3));
    CHECK(std::abs(mesh_area(split_needles(m, 1, 1, 1.0)) - 2 * std::numbers::pi) < 1e-10);
    CHECK(m->num_elements() == 2 * n + (n / 4) * (n / 4));
  }
}

TEST_CASE("O-grid meshes: preconditions") {
  CHECK_THROWS_AS(make_ellipse_mesh(8, 0.5), InputError); // min curvature radius is 0.5
  CHECK_THROWS_AS(make_disk_mesh(6, 0.3), InputError);
  CHECK_THROWS_AS(make_disk_mesh(0, 0.3), InputError);
}

TEST_CASE("collar Jacobian on the unit disk") {
  const auto m = make_disk_mesh(8, 0.5);
  for (int i = 0; i < 8; ++i)
    for (double eta : {0.0, 0.3, 1.0})
      CHECK(std::abs(m.elements[i].eval(0.0, eta).jacobian.determinant() - 0.5 * 2 * std::numbers::pi / 8) <
            1e-10);
}

TEST_CASE("Jacobians have one sign on every element") {
  for (const auto &m : {disk(), ellipse()}) {
    const auto mesh = split_needles(m, 1.0, 4, 1e-3);
    for (const auto &e : mesh.elements) {
      const double det = min_jacobian(e.map).first;
      CHECK(det > 0.0);
      CHECK(std::abs(det) >= 1e-10);
    }
  }
}

TEST_CASE("edge dichotomy") {
  const auto m = ellipse();
  const auto mesh = split_needles(m, 1.0, 1, 1.0);
  for (int el = 0; el < mesh.num_elements(); ++el) {
    const auto &e = mesh.elements[el];
    int on_edges = 0;
    bool touches = false;
    for (int edge = 0; edge < 4; ++edge) {
      int hits = 0;
      for (int k = 0; k < 50; ++k) {
        const Eigen::Vector2d r = edge_point(edge, k / 49.0);
        if (std::abs(inside_ellipse(e.map(r.x(), r.y())) - 1.0) < 1e-12)
          ++hits;
      }
      if (hits == 50)
        ++on_edges;
      if (hits > 0)
        touches = true;
    }
    if (m->is_boundary(el)) {
      CHECK(on_edges == 1);
      const Eigen::Vector2d x = e.map(0.0, 0.37);
      CHECK(std::abs(inside_ellipse(x) - 1.0) < 1e-12);
    } else {
      CHECK_FALSE(touches);
    }
  }
}

TEST_CASE("needle splitting") {
  const auto m = ellipse();
  {
    const auto a = split_needles(m, 1.0, 4, 0.2);
    CHECK_FALSE(a.split);
    CHECK(a.num_elements() == m->num_elements());
  }
  {
    const auto s = split_needles(m, 1.0, 4, 1e-3);
    CHECK(s.split);
    CHECK(s.num_elements() == m->num_elements() + m->n_collar);
    const auto &needle = s.elements[s.children[0][0]];
    CHECK(needle.map.kind() == ElementKind::Needle);
    CHECK(needle.xi0 == 0.0);
    CHECK(needle.xi1 == doctest::Approx(0.004));
    CHECK(needle.on_boundary);
    CHECK_FALSE(s.elements[s.children[0][1]].on_boundary);
    // needle + regular areas add up to the parent's
    const auto full = split_needles(m, 1.0, 1, 1.0);
    CHECK(std::abs(mesh_area(s) - mesh_area(full)) < 1e-10);
    CHECK(s.child_at(0, 0.001) == s.children[0][0]);
    CHECK(s.child_at(0, 0.5) == s.children[0][1]);
  }
  // exactly 1/2: asymptotic branch
  CHECK_FALSE(split_needles(m, 0.5, 1, 1.0).split);
}

TEST_CASE("conformity and boundary fidelity survive splitting") {
  for (const auto &m : {disk(), ellipse()}) {
    for (double eps : {1.0, 1e-2, 1e-4, 1e-6}) {
      const auto mesh = split_needles(m, 1.0, 3, eps);
      CHECK(conformity_defect(mesh) < 1e-10);
      CHECK(boundary_defect(mesh) < 1e-10);
    }
    const auto graded = split_boundary(m, {1e-4, 1e-3, 1e-2, 0.1});
    CHECK(conformity_defect(graded) < 1e-10);
    CHECK(graded.num_elements() == m->num_elements() + 4 * m->n_collar);
  }
}

TEST_CASE("needle map bound scales like 1/(lambda p eps)") {
  const auto m = ellipse();
  std::vector<double> widths, bounds;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const auto mesh = split_needles(m, 1.0, 2, eps);
    double worst = 0.0;
    for (const auto &e : mesh.elements)
      if (e.map.kind() == ElementKind::Needle)
        worst = std::max(worst, max_inverse_jacobian(e.map));
    widths.push_back(mesh.layer_width());
    bounds.push_back(worst);
  }
  const double slope = loglog_slope(widths, bounds);
  CHECK(slope >= -1.1);
  CHECK(slope <= -0.9);
}

TEST_CASE("point location") {
  const auto mesh = split_needles(ellipse(), 1.0, 2, 1e-3);
  for (const Eigen::Vector2d x : {Eigen::Vector2d(0, 0), Eigen::Vector2d(1.5, 0.3), Eigen::Vector2d(-1.9, 0.05),
                                  Eigen::Vector2d(std::sqrt(2.0), std::sqrt(2.0) / 2)}) {
    const auto loc = locate(mesh, x);
    REQUIRE(loc.has_value());
    const auto &map = mesh.elements[loc->element].map;
    CHECK((map(loc->ref.x(), loc->ref.y()) - x).norm() < 1e-12);
  }
  // a point in a needle, 1e-4 from the boundary
  const auto c = mesh.parent->curve;
  const Eigen::Vector2d y = c.point(1.0) + 1e-4 * c.inward_normal(1.0);
  const auto loc = locate(mesh, y);
  REQUIRE(loc.has_value());
  CHECK(mesh.elements[loc->element].map.kind() == ElementKind::Needle);
  CHECK_FALSE(locate(mesh, Eigen::Vector2d(2.1, 0.0)).has_value());
  CHECK_FALSE(locate(mesh, Eigen::Vector2d(1.5, 0.7)).has_value());
}

TEST_CASE("mesh SVG dump") {
  const auto mesh = split_needles(disk(), 1.0, 2, 1e-2);
  const std::string svg = mesh_svg(mesh);
  CHECK(svg.rfind("<svg", 0) == 0);
  std::size_t count = 0;
  for (std::size_t pos = svg.find("<polygon"); pos != std::string::npos; pos = svg.find("<polygon", pos + 1))
    ++count;
  CHECK(count == static_cast<std::size_t>(mesh.num_elements()));
  CHECK(svg == mesh_svg(mesh));
}
