#pragma once

// Tensor-product Q_p finite elements on curvilinear quadrilateral meshes for
// -eps^2 Laplace(u) + b u = f in Omega, u = 0 on the boundary.

#include "hpsbl/expr.hpp"
#include "hpsbl/geom2d.hpp"
#include "hpsbl/linalg.hpp"
#include "hpsbl/poly_quad.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace hpsbl {

/// Value and physical gradient.
struct Value2D {
  double value = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
};

using Function2D = std::function<Value2D(const Eigen::Vector2d &)>;

/// Tensor basis N_i(2 xi - 1) N_j(2 eta - 1) on [0,1]^2, local index l = i + (p+1) j,
/// with the 1D hierarchical order (0, 1 vertices, k >= 2 bubbles).
struct LocalBasis2D {
  Eigen::VectorXd value;
  Eigen::VectorXd d_xi;
  Eigen::VectorXd d_eta;
};

LocalBasis2D local_basis(const ShapeSet<double> &shapes, double xi, double eta);

/// Globally continuous Q_p space. DOFs are numbered vertices first, then
/// p-1 per edge, then (p-1)^2 per element interior. Edge modes follow the
/// direction from the lower to the higher vertex id; a local edge running the
/// other way picks up the sign (-1)^k on mode k. Copies share their data.
class Space2D {
public:
  Space2D(std::shared_ptr<const BlMesh2D> mesh, int degree, bool dirichlet = true);

  const BlMesh2D &mesh() const { return *data_->mesh; }
  const std::shared_ptr<const BlMesh2D> &mesh_ptr() const { return data_->mesh; }
  int degree() const { return data_->shapes.degree(); }
  const ShapeSet<double> &shapes() const { return data_->shapes; }
  bool dirichlet() const { return data_->dirichlet; }
  int local_size() const { return (degree() + 1) * (degree() + 1); }

  int num_dofs() const { return data_->num_dofs; }
  int num_free() const { return data_->num_free; }
  int num_vertices() const { return data_->num_vertices; }
  int num_edges() const { return data_->num_edges; }

  /// Global DOF of every local function of element e.
  const std::vector<int> &element_dofs(int e) const { return data_->dofs[static_cast<std::size_t>(e)]; }
  /// +-1 orientation factor of every local function of element e.
  const std::vector<double> &element_signs(int e) const {
    return data_->signs[static_cast<std::size_t>(e)];
  }
  /// Position in the free vector, -1 for DOFs on the boundary (Dirichlet mask).
  int free_index(int global) const { return data_->free[static_cast<std::size_t>(global)]; }

private:
  struct Data {
    std::shared_ptr<const BlMesh2D> mesh;
    ShapeSet<double> shapes;
    bool dirichlet;
    int num_vertices = 0, num_edges = 0, num_dofs = 0, num_free = 0;
    std::vector<std::vector<int>> dofs;
    std::vector<std::vector<double>> signs;
    std::vector<int> free;
  };
  std::shared_ptr<const Data> data_;
};

/// Free-DOF vector lifted to all DOFs (zeros on the boundary).
Eigen::VectorXd expand_free(const Space2D &space, const Eigen::VectorXd &free);

class FemSolution2D {
public:
  FemSolution2D(Space2D space, Eigen::VectorXd coeffs);

  const Space2D &space() const { return space_; }
  const Eigen::VectorXd &coefficients() const { return coeffs_; }
  /// Orientation-corrected local coefficients of element e.
  Eigen::VectorXd element_coefficients(int e) const;

  Value2D eval_local(int e, double xi, double eta) const;
  /// Evaluation at reference point (xi, eta) of an element of the parent
  /// (asymptotic) mesh; dispatches to the child containing xi.
  Value2D eval_parent(int parent, double xi, double eta) const;
  /// Evaluation at a physical point; throws InputError outside the domain.
  Value2D eval(const Eigen::Vector2d &x) const;
  Value2D operator()(const Eigen::Vector2d &x) const { return eval(x); }

private:
  Space2D space_;
  Eigen::VectorXd coeffs_;
};

struct Problem2D {
  double eps = 1.0;
  Expr b = Expr::constant(1.0);
  Expr f = Expr::constant(1.0);
  /// Optional closed-form solution.
  Function2D exact;

  /// Throws InputError if eps is outside (0,1] or b is not positive on a
  /// 10 x 10 sample grid of every element.
  void validate(const BlMesh2D &mesh) const;
};

struct System2D {
  SparseSpd matrix;
  Eigen::VectorXd rhs;
};

using PointFunction = std::function<double(const Eigen::Vector2d &)>;

/// Local matrices of element e (orientation signs not applied) with an
/// n x n Gauss rule: stiffness <grad, grad>, mass <., .>, weighted mass
/// <b ., .> and load <f, .> (zero if f is empty). Throws GeometryError for a
/// non-positive Jacobian determinant.
struct ElementMatrices2D {
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd mass;
  Eigen::MatrixXd weighted_mass;
  Eigen::VectorXd load;
};

ElementMatrices2D element_matrices(const Space2D &space, int e, const Expr &b, const PointFunction &f, int n);

/// diffusion <grad u, grad v> + <b u, v> and <f, v> on the free DOFs, n x n
/// Gauss points per element, elements split among `workers` threads (the
/// result does not depend on the worker count).
System2D assemble_system(const Space2D &space, double diffusion, const Expr &b, const PointFunction &f, int n,
                         int workers = 1);

/// The Galerkin system: assemble_system with diffusion eps^2 and (p+4)^2
/// Gauss points per element, after validating the problem.
System2D assemble2d(const Space2D &space, const Problem2D &prob, int workers = 1);

/// Assembly plus sparse solve; throws ConvergenceError if the relative
/// algebraic residual exceeds 1e-11.
FemSolution2D solve2d(const Space2D &space, const Problem2D &prob, int workers = 1);

/// Relative residual ||A x - r|| / ||r|| of the free part of `sol`.
double algebraic_residual(const System2D &system, const FemSolution2D &sol);

struct Norms2D {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double energy = 0.0;
  double balanced = 0.0;
  double max = 0.0; // over quadrature points
};

/// A field given on the reference squares of the parent mesh.
using ParentField = std::function<Value2D(int parent, double xi, double eta)>;

/// Norms of v by tensor Gauss quadrature with `points`^2 nodes on every piece
/// [xi_breaks[k][m], xi_breaks[k][m+1]] x [0,1] of every parent element k.
Norms2D norms2d(const ParentField &v, const AsymptoticMesh2D &mesh,
                const std::vector<std::vector<double>> &xi_breaks, double eps, const Expr &b, int points);

/// Xi breakpoints of the children of every parent element.
std::vector<std::vector<double>> element_breakpoints(const BlMesh2D &mesh);
/// Geometric grading (eps / rho0) 2^k / 4 toward the boundary of collar
/// elements, resolving layer functions of width eps.
std::vector<std::vector<double>> layer_breakpoints(const AsymptoticMesh2D &mesh, double eps);
std::vector<std::vector<double>> merge_breakpoints(const std::vector<std::vector<double>> &a,
                                                   const std::vector<std::vector<double>> &b);

/// Error norms against a closed-form solution / another discrete solution on
/// the same parent mesh.
Norms2D error_norms2d(const FemSolution2D &sol, const Function2D &exact, double eps, const Expr &b);
Norms2D error_norms2d(const FemSolution2D &sol, const FemSolution2D &ref, double eps, const Expr &b);

/// max_i |sol(r_i) - ref(r_i)| over M equispaced points r_i of the segment
/// [a, b], endpoints included. Throws InputError naming the first point
/// outside the domain.
double sample_line_error(const FemSolution2D &sol, const FemSolution2D &ref, const Eigen::Vector2d &a,
                         const Eigen::Vector2d &b, int M = 20);
double sample_line_error(const FemSolution2D &sol, const Function2D &exact, const Eigen::Vector2d &a,
                         const Eigen::Vector2d &b, int M = 20);

/// Boundary elements split at lambda q eps (if below 1/2) and at
/// (eps / rho0) 2^k, k = 0..5, below 1/2.
BlMesh2D reference_mesh2d(std::shared_ptr<const AsymptoticMesh2D> parent, double lambda, int q, double eps);

/// Degree-q solution on reference_mesh2d.
FemSolution2D reference_solution2d(std::shared_ptr<const AsymptoticMesh2D> parent, const Problem2D &prob,
                                   double lambda, int q, int workers = 1);

} // namespace hpsbl
