#include "hpsbl/geom2d.hpp"
#include "hpsbl/errors.hpp"
#include "hpsbl/poly_quad.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

namespace hpsbl {

namespace {

Eigen::Vector2d rot90(const Eigen::Vector2d &v) { return {-v.y(), v.x()}; }

double cross(const Eigen::Vector2d &a, const Eigen::Vector2d &b) { return a.x() * b.y() - a.y() * b.x(); }

std::string fmt_point(const Eigen::Vector2d &x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.6g, %.6g)", x.x(), x.y());
  return buf;
}

} // namespace

Eigen::Vector2d BoundaryCurve::inward_normal(double t) const {
  const Eigen::Vector2d d = tangent(t);
  return rot90(d) / d.norm();
}

Eigen::Vector2d BoundaryCurve::inward_normal_derivative(double t) const {
  const Eigen::Vector2d d = tangent(t), dd = second(t);
  const double n = d.norm();
  return rot90(dd / n - d * (d.dot(dd) / (n * n * n)));
}

double BoundaryCurve::curvature_radius(double t) const {
  const Eigen::Vector2d d = tangent(t), dd = second(t);
  const double k = std::abs(cross(d, dd));
  const double n = d.norm();
  return k == 0.0 ? std::numeric_limits<double>::infinity() : n * n * n / k;
}

double BoundaryCurve::min_curvature_radius(int samples) const {
  double r = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i)
    r = std::min(r, curvature_radius(period * i / samples));
  return r;
}

void BoundaryCurve::validate(int samples) const {
  if ((point(0.0) - point(period)).norm() > 1e-12)
    throw GeometryError("curve '" + name + "' is not closed");
  for (int i = 0; i < samples; ++i) {
    const double t = period * i / samples;
    if (tangent(t).norm() < 1e-8)
      throw GeometryError("curve '" + name + "' has a degenerate tangent at t=" + std::to_string(t));
  }
}

BoundaryCurve ellipse_curve(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw InputError("ellipse_curve: semi-axes must be positive");
  BoundaryCurve c;
  c.name = a == b ? "circle" : "ellipse";
  c.period = 2.0 * std::numbers::pi;
  c.point = [a, b](double t) { return Eigen::Vector2d(a * std::cos(t), b * std::sin(t)); };
  c.tangent = [a, b](double t) { return Eigen::Vector2d(-a * std::sin(t), b * std::cos(t)); };
  c.second = [a, b](double t) { return Eigen::Vector2d(-a * std::cos(t), -b * std::sin(t)); };
  return c;
}

BoundaryCurve unit_circle() { return ellipse_curve(1.0, 1.0); }

const char *to_string(ElementKind k) {
  switch (k) {
  case ElementKind::Collar: return "collar";
  case ElementKind::Transition: return "transition";
  case ElementKind::Core: return "core";
  case ElementKind::Needle: return "needle";
  case ElementKind::Regular: return "regular";
  }
  return "?";
}

ElementMap2D::ElementMap2D(std::shared_ptr<const Geometry> geometry, ElementKind kind, Window window)
    : geometry_(std::move(geometry)), kind_(kind), window_(window) {}

MapEval ElementMap2D::eval(double xi, double eta) const {
  const double sx = window_.xi1 - window_.xi0, sy = window_.eta1 - window_.eta0;
  MapEval m = (*geometry_)(window_.xi0 + sx * xi, window_.eta0 + sy * eta);
  m.jacobian.col(0) *= sx;
  m.jacobian.col(1) *= sy;
  return m;
}

ElementMap2D ElementMap2D::restrict_xi(double s0, double s1, ElementKind kind) const {
  Window w = window_;
  const double sx = w.xi1 - w.xi0;
  w.xi0 = window_.xi0 + sx * s0;
  w.xi1 = window_.xi0 + sx * s1;
  return ElementMap2D(geometry_, kind, w);
}

Eigen::Vector2d edge_point(int e, double t) {
  switch (e) {
  case 0: return {0.0, t};
  case 1: return {1.0, t};
  case 2: return {t, 0.0};
  default: return {t, 1.0};
  }
}

std::vector<SharedEdge> shared_edges(const std::vector<Corners> &corners) {
  std::map<std::pair<int, int>, std::pair<int, int>> seen;
  std::vector<SharedEdge> out;
  for (int el = 0; el < static_cast<int>(corners.size()); ++el) {
    for (int e = 0; e < 4; ++e) {
      const int a = corners[el][kEdgeCorners[e][0]], b = corners[el][kEdgeCorners[e][1]];
      const auto key = std::minmax(a, b);
      const auto it = seen.find(key);
      if (it == seen.end()) {
        seen.emplace(key, std::make_pair(el, e));
        continue;
      }
      const auto [el0, e0] = it->second;
      const bool rev = corners[el0][kEdgeCorners[e0][0]] != a;
      out.push_back({el0, e0, el, e, rev});
    }
  }
  return out;
}

AsymptoticMesh2D make_ogrid_mesh(const BoundaryCurve &curve, int n, double rho0) {
  if (n < 4 || n % 4 != 0)
    throw InputError("make_ogrid_mesh: n_collar must be a positive multiple of 4");
  curve.validate();
  const double rmin = curve.min_curvature_radius();
  if (!(rho0 > 0.0) || !(rho0 < rmin))
    throw InputError("make_ogrid_mesh: collar depth " + std::to_string(rho0) +
                     " must lie in (0, min curvature radius " + std::to_string(rmin) + ")");
  const int m = n / 4;
  const double dtheta = curve.period / n;
  std::vector<double> theta(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i)
    theta[i] = curve.period / 8.0 + dtheta * i;

  AsymptoticMesh2D mesh;
  mesh.curve = curve;
  mesh.rho0 = rho0;
  mesh.n_collar = n;

  const auto inner = [curve, rho0](double t) -> Eigen::Vector2d {
    return curve.point(t) + rho0 * curve.inward_normal(t);
  };
  const auto inner_d = [curve, rho0](double t) -> Eigen::Vector2d {
    return curve.tangent(t) + rho0 * curve.inward_normal_derivative(t);
  };

  // Core corners at half the inner-curve points theta = period/8 + k period/4,
  // counterclockwise from the first quadrant.
  std::array<Eigen::Vector2d, 4> C;
  for (int k = 0; k < 4; ++k)
    C[k] = 0.5 * inner(theta[static_cast<std::size_t>(k) * m]);
  // P_i: points of the core boundary matched with theta_i.
  std::vector<Eigen::Vector2d> P(static_cast<std::size_t>(n));
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < m; ++j)
      P[k * m + j] = C[k] + (static_cast<double>(j) / m) * (C[(k + 1) % 4] - C[k]);

  // Vertex ids: boundary B_i, inner I_i, core grid G(a,b).
  for (int i = 0; i < n; ++i)
    mesh.vertices.push_back(curve.point(theta[i]));
  for (int i = 0; i < n; ++i)
    mesh.vertices.push_back(inner(theta[i]));
  const auto B = [n](int i) { return ((i % n) + n) % n; };
  const auto I = [n](int i) { return n + ((i % n) + n) % n; };

  // Core bilinear map with (0,0) -> C2, (1,0) -> C3, (1,1) -> C0, (0,1) -> C1.
  const Eigen::Vector2d c00 = C[2], c10 = C[3], c11 = C[0], c01 = C[1];
  const auto core_point = [=](double s, double t) -> Eigen::Vector2d {
    return (1 - s) * (1 - t) * c00 + s * (1 - t) * c10 + s * t * c11 + (1 - s) * t * c01;
  };
  std::vector<int> grid(static_cast<std::size_t>((m + 1) * (m + 1)), -1);
  const auto G = [&grid, m](int a, int b) -> int & { return grid[static_cast<std::size_t>(b * (m + 1) + a)]; };
  // Core boundary grid points follow the P_i order: top (C0->C1), left, bottom, right.
  std::vector<int> Pid(static_cast<std::size_t>(n));
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < m; ++j) {
      int a = 0, b = 0;
      switch (k) {
      case 0: a = m - j, b = m; break;
      case 1: a = 0, b = m - j; break;
      case 2: a = j, b = 0; break;
      default: a = m, b = j; break;
      }
      const int id = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(core_point(static_cast<double>(a) / m, static_cast<double>(b) / m));
      G(a, b) = id;
      Pid[k * m + j] = id;
    }
  for (int b = 0; b <= m; ++b)
    for (int a = 0; a <= m; ++a)
      if (G(a, b) < 0) {
        G(a, b) = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(core_point(static_cast<double>(a) / m, static_cast<double>(b) / m));
      }
  const auto Pv = [&Pid, n](int i) { return Pid[((i % n) + n) % n]; };

  // Collar elements: theta(eta) = theta_{i+1} - eta dtheta keeps det J > 0.
  for (int i = 0; i < n; ++i) {
    const double tb = theta[i + 1];
    auto g = std::make_shared<const ElementMap2D::Geometry>([curve, tb, dtheta, rho0](double xi, double eta) {
      const double t = tb - eta * dtheta;
      const Eigen::Vector2d nu = curve.inward_normal(t);
      MapEval r;
      r.x = curve.point(t) + xi * rho0 * nu;
      r.jacobian.col(0) = rho0 * nu;
      r.jacobian.col(1) = -dtheta * (curve.tangent(t) + xi * rho0 * curve.inward_normal_derivative(t));
      return r;
    });
    mesh.elements.emplace_back(std::move(g), ElementKind::Collar);
    mesh.corners.push_back({B(i + 1), I(i + 1), B(i), I(i)});
  }
  // Transition patches: ruled between the inner curve arc and the core edge.
  for (int i = 0; i < n; ++i) {
    const double tb = theta[i + 1];
    const Eigen::Vector2d pa = P[(i + 1) % n], pb = P[i];
    auto g = std::make_shared<const ElementMap2D::Geometry>(
        [inner, inner_d, tb, dtheta, pa, pb](double xi, double eta) {
          const double t = tb - eta * dtheta;
          const Eigen::Vector2d c = inner(t), q = (1 - eta) * pa + eta * pb;
          MapEval r;
          r.x = (1 - xi) * c + xi * q;
          r.jacobian.col(0) = q - c;
          r.jacobian.col(1) = -(1 - xi) * dtheta * inner_d(t) + xi * (pb - pa);
          return r;
        });
    mesh.elements.emplace_back(std::move(g), ElementKind::Transition);
    mesh.corners.push_back({I(i + 1), Pv(i + 1), I(i), Pv(i)});
  }
  // Core: one bilinear patch cut into an m x m grid.
  auto core = std::make_shared<const ElementMap2D::Geometry>([=](double s, double t) {
    MapEval r;
    r.x = core_point(s, t);
    r.jacobian.col(0) = (1 - t) * (c10 - c00) + t * (c11 - c01);
    r.jacobian.col(1) = (1 - s) * (c01 - c00) + s * (c11 - c10);
    return r;
  });
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) {
      const Window w{static_cast<double>(a) / m, static_cast<double>(a + 1) / m, static_cast<double>(b) / m,
                     static_cast<double>(b + 1) / m};
      mesh.elements.emplace_back(core, ElementKind::Core, w);
      mesh.corners.push_back({G(a, b), G(a + 1, b), G(a, b + 1), G(a + 1, b + 1)});
    }

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto [det, at] = min_jacobian(mesh.elements[e]);
    if (!(det > 1e-10))
      throw GeometryError("make_ogrid_mesh: element " + std::to_string(e) + " (" +
                          to_string(mesh.elements[e].kind()) + ") has det J = " + std::to_string(det) +
                          " at reference point " + fmt_point(at));
  }
  mesh.adjacency = shared_edges(mesh.corners);
  return mesh;
}

AsymptoticMesh2D make_disk_mesh(int n_collar, double rho0) {
  return make_ogrid_mesh(unit_circle(), n_collar, rho0);
}

AsymptoticMesh2D make_ellipse_mesh(int n_collar, double rho0) {
  return make_ogrid_mesh(ellipse_curve(2.0, 1.0), n_collar, rho0);
}

int BlMesh2D::child_at(int parent_element, double xi) const {
  const auto &ch = children[static_cast<std::size_t>(parent_element)];
  for (std::size_t k = 0; k + 1 < ch.size(); ++k)
    if (xi < elements[static_cast<std::size_t>(ch[k])].xi1)
      return ch[k];
  return ch.back();
}

namespace {

Eigen::AlignedBox2d element_box(const ElementMap2D &map) {
  Eigen::AlignedBox2d box;
  const int n = 16;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      box.extend(map(static_cast<double>(i) / n, static_cast<double>(j) / n));
  const double pad = 0.05 * box.diagonal().maxCoeff() + 1e-12;
  box.min().array() -= pad;
  box.max().array() += pad;
  return box;
}

} // namespace

BlMesh2D split_boundary(std::shared_ptr<const AsymptoticMesh2D> parent, const std::vector<double> &xi_breaks) {
  for (std::size_t k = 0; k < xi_breaks.size(); ++k)
    if (!(xi_breaks[k] > 0.0 && xi_breaks[k] < 1.0) || (k > 0 && !(xi_breaks[k] > xi_breaks[k - 1])))
      throw InputError("split_boundary: breakpoints must increase strictly inside (0,1)");
  BlMesh2D out;
  out.parent = parent;
  out.split = !xi_breaks.empty();
  out.vertices = parent->vertices;
  out.children.resize(static_cast<std::size_t>(parent->num_elements()));

  std::vector<double> s{0.0};
  s.insert(s.end(), xi_breaks.begin(), xi_breaks.end());
  s.push_back(1.0);
  const int pieces = static_cast<int>(s.size()) - 1;

  // New vertices keyed by (boundary vertex, inner vertex, breakpoint index).
  std::map<std::tuple<int, int, int>, int> split_vertex;
  const auto vertex_on = [&](int el, int vb, int vi, int k, double eta) {
    if (k == 0)
      return vb;
    if (k == pieces)
      return vi;
    const auto key = std::make_tuple(vb, vi, k);
    const auto it = split_vertex.find(key);
    if (it != split_vertex.end())
      return it->second;
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(parent->elements[static_cast<std::size_t>(el)](s[k], eta));
    split_vertex.emplace(key, id);
    return id;
  };

  for (int el = 0; el < parent->num_elements(); ++el) {
    const ElementMap2D &map = parent->elements[static_cast<std::size_t>(el)];
    const Corners &c = parent->corners[static_cast<std::size_t>(el)];
    if (!parent->is_boundary(el) || pieces == 1) {
      out.children[el].push_back(out.num_elements());
      out.elements.push_back({el, 0.0, 1.0, map, c, parent->is_boundary(el)});
      continue;
    }
    for (int k = 0; k < pieces; ++k) {
      BlElement be{el, s[k], s[k + 1],
                   map.restrict_xi(s[k], s[k + 1], k == 0 ? ElementKind::Needle : ElementKind::Regular),
                   {vertex_on(el, c[0], c[1], k, 0.0), vertex_on(el, c[0], c[1], k + 1, 0.0),
                    vertex_on(el, c[2], c[3], k, 1.0), vertex_on(el, c[2], c[3], k + 1, 1.0)},
                   k == 0};
      out.children[el].push_back(out.num_elements());
      out.elements.push_back(std::move(be));
    }
  }
  for (const auto &e : out.elements)
    out.boxes.push_back(element_box(e.map));
  return out;
}

BlMesh2D split_needles(std::shared_ptr<const AsymptoticMesh2D> parent, double lambda, int p, double eps) {
  if (!(lambda > 0.0) || p < 1 || !(eps > 0.0) || eps > 1.0)
    throw InputError("split_needles: need lambda > 0, p >= 1, eps in (0,1]");
  const double w = lambda * p * eps;
  BlMesh2D out = w < 0.5 ? split_boundary(std::move(parent), {w}) : split_boundary(std::move(parent), {});
  out.lambda = lambda;
  out.p = p;
  out.eps = eps;
  return out;
}

std::optional<Eigen::Vector2d> invert_map(const ElementMap2D &map, const Eigen::Vector2d &x, double tol,
                                          double slack) {
  Eigen::Vector2d r(0.5, 0.5);
  const double scale = 1.0 + x.norm();
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    const MapEval m = map.eval(r.x(), r.y());
    const Eigen::Vector2d res = m.x - x;
    if (converged)
      break;
    if (res.norm() <= tol * scale)
      converged = true; // one more step to reach the round-off floor
    const double det = m.jacobian.determinant();
    if (!(std::abs(det) > 0.0))
      return std::nullopt;
    r -= m.jacobian.inverse() * res;
    r = r.cwiseMax(-1.0).cwiseMin(2.0);
  }
  if (!converged)
    return std::nullopt;
  if ((r.array() < -slack).any() || (r.array() > 1.0 + slack).any())
    return std::nullopt;
  return r.cwiseMax(0.0).cwiseMin(1.0);
}

std::optional<LocatedPoint> locate(const BlMesh2D &mesh, const Eigen::Vector2d &x) {
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!mesh.boxes[static_cast<std::size_t>(e)].contains(x))
      continue;
    if (auto r = invert_map(mesh.elements[static_cast<std::size_t>(e)].map, x))
      return LocatedPoint{e, *r};
  }
  return std::nullopt;
}

double mesh_area(const BlMesh2D &mesh, int n) {
  const auto rule = gauss_rule<double>(n).mapped(0.0, 1.0);
  double a = 0.0;
  for (const auto &e : mesh.elements)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        a += rule.weights[i] * rule.weights[j] *
             std::abs(e.map.eval(rule.nodes[i], rule.nodes[j]).jacobian.determinant());
  return a;
}

double max_inverse_jacobian(const ElementMap2D &map, int n) {
  double mx = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::Matrix2d inv =
          map.eval((i + 0.5) / n, (j + 0.5) / n).jacobian.inverse();
      mx = std::max(mx, inv.cwiseAbs().rowwise().sum().maxCoeff());
    }
  return mx;
}

std::pair<double, Eigen::Vector2d> min_jacobian(const ElementMap2D &map, int n) {
  double mn = std::numeric_limits<double>::infinity();
  Eigen::Vector2d at(0, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::Vector2d r(static_cast<double>(i) / (n - 1), static_cast<double>(j) / (n - 1));
      const double d = map.eval(r.x(), r.y()).jacobian.determinant();
      if (d < mn)
        mn = d, at = r;
    }
  return {mn, at};
}

double conformity_defect(const BlMesh2D &mesh, int samples) {
  std::vector<Corners> corners;
  for (const auto &e : mesh.elements)
    corners.push_back(e.corners);
  double worst = 0.0;
  for (const auto &se : shared_edges(corners)) {
    const auto &ma = mesh.elements[static_cast<std::size_t>(se.element_a)].map;
    const auto &mb = mesh.elements[static_cast<std::size_t>(se.element_b)].map;
    for (int k = 0; k < samples; ++k) {
      const double t = static_cast<double>(k) / (samples - 1);
      const Eigen::Vector2d ra = edge_point(se.edge_a, t);
      const Eigen::Vector2d rb = edge_point(se.edge_b, se.reversed ? 1.0 - t : t);
      worst = std::max(worst, (ma(ra.x(), ra.y()) - mb(rb.x(), rb.y())).norm());
    }
  }
  return worst;
}

double boundary_defect(const BlMesh2D &mesh, int samples) {
  const BoundaryCurve &curve = mesh.parent->curve;
  double worst = 0.0;
  for (const auto &e : mesh.elements) {
    if (!e.on_boundary)
      continue;
    for (int k = 0; k < samples; ++k) {
      const Eigen::Vector2d x = e.map(0.0, static_cast<double>(k) / (samples - 1));
      // distance to the curve by Newton on the foot-point parameter
      double t = std::atan2(x.y(), x.x());
      for (int it = 0; it < 50; ++it) {
        const Eigen::Vector2d d = curve.point(t) - x, z1 = curve.tangent(t), z2 = curve.second(t);
        const double g = d.dot(z1), dg = z1.dot(z1) + d.dot(z2);
        const double step = g / dg;
        t -= step;
        if (std::abs(step) < 1e-15)
          break;
      }
      worst = std::max(worst, (curve.point(t) - x).norm());
    }
  }
  return worst;
}

std::string mesh_svg(const BlMesh2D &mesh, int samples) {
  Eigen::AlignedBox2d box;
  for (const auto &b : mesh.boxes)
    box.extend(b);
  const double width = 800.0;
  const double scale = width / box.diagonal().x();
  const double height = box.diagonal().y() * scale;
  std::ostringstream s;
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                width + 20, height + 20, width + 20, height + 20);
  s << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto &e : mesh.elements) {
    const char *colour = e.map.kind() == ElementKind::Needle ? "#c0392b" : "#2c3e50";
    s << "<polygon fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"0.8\" points=\"";
    for (int edge = 0; edge < 4; ++edge) {
      // walk the boundary counterclockwise in the reference square
      for (int k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) / samples;
        Eigen::Vector2d r;
        switch (edge) {
        case 0: r = {t, 0.0}; break;
        case 1: r = {1.0, t}; break;
        case 2: r = {1.0 - t, 1.0}; break;
        default: r = {0.0, 1.0 - t}; break;
        }
        const Eigen::Vector2d x = e.map(r.x(), r.y());
        std::snprintf(buf, sizeof buf, "%.3f,%.3f ", 10 + (x.x() - box.min().x()) * scale,
                      10 + (box.max().y() - x.y()) * scale);
        s << buf;
      }
    }
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

} // namespace hpsbl
