#pragma once

// Curvilinear quadrilateral meshes of smooth convex domains: an O-grid
// asymptotic mesh (boundary collar, blended transition ring, bilinear core)
// and its needle-split descendants.

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hpsbl {

/// Closed curve theta -> z(theta), counterclockwise, with two derivatives.
struct BoundaryCurve {
  std::string name;
  double period = 0.0;
  std::function<Eigen::Vector2d(double)> point;
  std::function<Eigen::Vector2d(double)> tangent;
  std::function<Eigen::Vector2d(double)> second;

  /// Unit normal pointing into the enclosed domain.
  Eigen::Vector2d inward_normal(double t) const;
  /// Derivative of inward_normal with respect to theta.
  Eigen::Vector2d inward_normal_derivative(double t) const;
  double curvature_radius(double t) const;
  /// Smallest sampled radius of curvature.
  double min_curvature_radius(int samples = 1000) const;
  /// Throws GeometryError if the curve is not closed or has a degenerate tangent.
  void validate(int samples = 1000) const;
};

/// (a cos t, b sin t)
BoundaryCurve ellipse_curve(double a, double b);
BoundaryCurve unit_circle();

/// Value and Jacobian of an element map; J = [dM/dxi, dM/deta].
struct MapEval {
  Eigen::Vector2d x;
  Eigen::Matrix2d jacobian;
};

enum class ElementKind { Collar, Transition, Core, Needle, Regular };

const char *to_string(ElementKind k);

/// Rectangle [xi0,xi1] x [eta0,eta1] inside a geometry's reference square.
struct Window {
  double xi0 = 0.0, xi1 = 1.0, eta0 = 0.0, eta1 = 1.0;
};

/// M: [0,1]^2 -> element, realised as a geometry restricted to a window.
class ElementMap2D {
public:
  using Geometry = std::function<MapEval(double, double)>;

  ElementMap2D(std::shared_ptr<const Geometry> geometry, ElementKind kind, Window window = {});

  MapEval eval(double xi, double eta) const;
  Eigen::Vector2d operator()(double xi, double eta) const { return eval(xi, eta).x; }
  ElementKind kind() const { return kind_; }
  const Window &window() const { return window_; }

  /// The map composed with (xi, eta) -> (s0 + (s1 - s0) xi, eta).
  ElementMap2D restrict_xi(double s0, double s1, ElementKind kind) const;

private:
  std::shared_ptr<const Geometry> geometry_;
  ElementKind kind_;
  Window window_;
};

/// Corner c = a + 2b is the image of (xi, eta) = (a, b).
using Corners = std::array<int, 4>;

/// Local edges: 0: xi=0, 1: xi=1 (parameter eta); 2: eta=0, 3: eta=1 (parameter xi).
/// Each runs from its lower to its upper corner in the local parameter.
inline constexpr std::array<std::array<int, 2>, 4> kEdgeCorners{{{0, 2}, {1, 3}, {0, 1}, {2, 3}}};

/// Reference point of local edge e at parameter t in [0,1].
Eigen::Vector2d edge_point(int e, double t);

struct SharedEdge {
  int element_a, edge_a;
  int element_b, edge_b;
  bool reversed; // local parameters run in opposite directions
};

/// Shared edges deduced from corner vertex ids.
std::vector<SharedEdge> shared_edges(const std::vector<Corners> &corners);

struct AsymptoticMesh2D {
  BoundaryCurve curve;
  double rho0 = 0.0;
  int n_collar = 0;
  std::vector<ElementMap2D> elements;
  std::vector<Corners> corners;
  std::vector<Eigen::Vector2d> vertices;
  std::vector<SharedEdge> adjacency;

  /// Elements 0..n_collar-1 have their xi=0 edge on the boundary.
  bool is_boundary(int e) const { return e < n_collar; }
  int num_elements() const { return static_cast<int>(elements.size()); }
};

/// O-grid mesh: n_collar boundary elements
///   M(xi,eta) = z(theta(eta)) + xi rho0 nu(theta(eta)), theta affine per sector,
/// n_collar ruled transition patches and an (n/4) x (n/4) bilinear core.
/// n_collar must be a multiple of 4 and >= 4; rho0 must be below the minimal
/// radius of curvature. Throws InputError / GeometryError.
AsymptoticMesh2D make_ogrid_mesh(const BoundaryCurve &curve, int n_collar, double rho0);

/// Built-in domains.
AsymptoticMesh2D make_disk_mesh(int n_collar = 8, double rho0 = 0.5);
/// (x/2)^2 + y^2 < 1
AsymptoticMesh2D make_ellipse_mesh(int n_collar = 8, double rho0 = 0.4);

struct BlElement {
  int parent = 0;
  double xi0 = 0.0, xi1 = 1.0; // window in the parent's reference square
  ElementMap2D map;
  Corners corners{};
  bool on_boundary = false; // local edge xi=0 lies on the boundary
};

struct BlMesh2D {
  std::shared_ptr<const AsymptoticMesh2D> parent;
  double lambda = 1.0;
  int p = 1;
  double eps = 1.0;
  bool split = false;
  std::vector<BlElement> elements;
  std::vector<Eigen::Vector2d> vertices;
  /// children[k]: element indices descending from parent k, ordered by xi0.
  std::vector<std::vector<int>> children;
  std::vector<Eigen::AlignedBox2d> boxes;

  int num_elements() const { return static_cast<int>(elements.size()); }
  double layer_width() const { return lambda * p * eps; }
  /// Child of `parent_element` whose window contains xi (ties go to the inner child).
  int child_at(int parent_element, double xi) const;
};

/// Boundary elements split at the given xi breakpoints (strictly inside (0,1),
/// increasing); the outermost piece is a needle, the rest are regular.
BlMesh2D split_boundary(std::shared_ptr<const AsymptoticMesh2D> parent, const std::vector<double> &xi_breaks);

/// Needle split at lambda p eps when lambda p eps < 1/2; otherwise the parent.
BlMesh2D split_needles(std::shared_ptr<const AsymptoticMesh2D> parent, double lambda, int p, double eps);

/// Element containing x and the reference coordinates there.
struct LocatedPoint {
  int element;
  Eigen::Vector2d ref;
};

/// Newton inversion of M seeded at the reference centre. Returns the
/// reference point if it converges (step < tol) inside [0,1]^2 up to `slack`.
std::optional<Eigen::Vector2d> invert_map(const ElementMap2D &map, const Eigen::Vector2d &x,
                                          double tol = 1e-13, double slack = 1e-8);

std::optional<LocatedPoint> locate(const BlMesh2D &mesh, const Eigen::Vector2d &x);

/// Sum of |det J| over all elements ((n x n) Gauss per element).
double mesh_area(const BlMesh2D &mesh, int n = 20);

/// Largest sampled ||J^{-1}||_inf of an element map on an n x n grid.
double max_inverse_jacobian(const ElementMap2D &map, int n = 20);

/// Minimum over an n x n grid of det J, and the sample where it occurs.
std::pair<double, Eigen::Vector2d> min_jacobian(const ElementMap2D &map, int n = 20);

/// Largest mismatch between the two parameterisations of every shared edge
/// (`samples` points per edge).
double conformity_defect(const BlMesh2D &mesh, int samples = 50);

/// Largest distance from the curve of boundary-edge samples.
double boundary_defect(const BlMesh2D &mesh, int samples = 50);

/// Element outlines as a standalone SVG document.
std::string mesh_svg(const BlMesh2D &mesh, int samples = 24);

} // namespace hpsbl
