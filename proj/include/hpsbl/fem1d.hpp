#pragma once

// hp-FEM for -eps^2 u'' + b u = f on (0,1), u(0) = u(1) = 0, on Spectral
// Boundary Layer meshes.

#include "hpsbl/expr.hpp"
#include "hpsbl/linalg.hpp"
#include "hpsbl/poly_quad.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace hpsbl {

/// Value and first derivative of a scalar function of one variable.
struct ValueD {
  double value = 0.0;
  double derivative = 0.0;
};

using Function1D = std::function<ValueD(double)>;

class Mesh1D {
public:
  /// Nodes must be strictly increasing, start at 0 and end at 1.
  explicit Mesh1D(std::vector<double> nodes);

  const std::vector<double> &nodes() const { return nodes_; }
  int num_elements() const { return static_cast<int>(nodes_.size()) - 1; }
  double left(int j) const { return nodes_[static_cast<std::size_t>(j)]; }
  double right(int j) const { return nodes_[static_cast<std::size_t>(j) + 1]; }
  double h(int j) const { return right(j) - left(j); }
  /// Element containing x; interior nodes belong to the element on their left.
  int locate(double x) const;
  /// Reference coordinate of x in element j.
  double to_reference(int j, double x) const { return (2.0 * x - left(j) - right(j)) / h(j); }
  double from_reference(int j, double t) const {
    return 0.5 * (1.0 - t) * left(j) + 0.5 * (1.0 + t) * right(j);
  }

private:
  std::vector<double> nodes_;
};

/// Every element split at its midpoint.
Mesh1D bisect(const Mesh1D &mesh);

enum class SblRegime { ThreeElement, Asymptotic };

struct SblMesh1D {
  double lambda = 1.0;
  int p = 1;
  double eps = 1.0;
  SblRegime regime = SblRegime::Asymptotic;
  Mesh1D mesh{{0.0, 1.0}};

  double layer_width() const { return lambda * p * eps; }
  /// x in I_eps = [0, lambda p eps] U [1 - lambda p eps, 1] (three-element regime only).
  bool in_layer(double x) const;
};

/// {0, lambda p eps, 1 - lambda p eps, 1} if lambda p eps < 1/4, else {0, 1}.
SblMesh1D make_sbl_mesh(double lambda, int p, double eps);

/// Continuous piecewise polynomials of uniform degree p with hierarchical
/// shape functions. Global numbering runs element by element
/// (left vertex, internal modes, right vertex), so the bandwidth is p.
class Space1D {
public:
  Space1D(Mesh1D mesh, int degree, bool dirichlet = true);

  const Mesh1D &mesh() const { return mesh_; }
  int degree() const { return shapes_.degree(); }
  const ShapeSet<double> &shapes() const { return shapes_; }
  bool dirichlet() const { return dirichlet_; }

  /// dim S^p = N p + 1
  int num_dofs() const { return mesh_.num_elements() * degree() + 1; }
  /// dim S_0^p = N p - 1 with the Dirichlet mask, else num_dofs().
  int num_free() const { return dirichlet_ ? num_dofs() - 2 : num_dofs(); }

  /// Global index of local shape function k of element j
  /// (local order: left vertex, right vertex, modes 2..p).
  int dof(int j, int k) const;
  /// Position in the free (unknown) vector, or -1 for a constrained DOF.
  int free_index(int global) const;

private:
  Mesh1D mesh_;
  ShapeSet<double> shapes_;
  bool dirichlet_;
};

struct Problem1D {
  double eps = 1.0;
  Expr b = Expr::constant(1.0);
  Expr f = Expr::constant(1.0);
  /// Optional closed-form solution (value and derivative).
  Function1D exact;

  /// Throws InputError if eps is outside (0,1] or the sampled min of b is <= 0.
  void validate(int samples = kDefaultPositivitySamples) const;
};

/// -eps^2 u'' + u = 1 with the closed-form solution attached.
Problem1D constant_coefficient_problem(double eps);
/// Closed form of the above, stable for tiny eps.
ValueD constant_coefficient_solution(double eps, double x);

class FemSolution1D {
public:
  FemSolution1D(Space1D space, Eigen::VectorXd coeffs);

  const Space1D &space() const { return space_; }
  /// Full coefficient vector (constrained entries included).
  const Eigen::VectorXd &coefficients() const { return coeffs_; }
  Eigen::VectorXd element_coefficients(int j) const;

  ValueD eval(double x) const;
  /// Evaluation on element j at reference point t (t may lie outside [-1,1]:
  /// the element polynomial is extended).
  ValueD eval_local(int j, double t) const;
  ValueD operator()(double x) const { return eval(x); }

private:
  Space1D space_;
  Eigen::VectorXd coeffs_;
};

struct System1D {
  BandedSpd<double> matrix;
  Eigen::VectorXd rhs;
};

/// Galerkin matrix of eps^2 <u',v'> + <b u, v> and load <f, v> on the free
/// DOFs, with `quad_points` Gauss points per element (default p + 4).
System1D assemble(const Space1D &space, const Problem1D &prob, int quad_points = 0);

FemSolution1D solve(const Space1D &space, const Problem1D &prob);

/// Elementwise Gauss-Lobatto interpolant.
FemSolution1D interpolate(const Space1D &space, const std::function<double(double)> &f);

/// Free-DOF coefficients lifted to a full vector (zeros on constrained DOFs).
Eigen::VectorXd expand_free(const Space1D &space, const Eigen::VectorXd &free);

struct Norms1D {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double energy = 0.0;
  double balanced = 0.0;
  double max = 0.0;
};

/// All norms of `v` by composite Gauss quadrature on the partition
/// `breakpoints` with `points` nodes per piece. max is sampled on 1001
/// uniform points plus every quadrature point.
Norms1D norms(const Function1D &v, const std::vector<double> &breakpoints, double eps,
              const Expr &b, int points);

/// Sorted union of partitions; nodes closer than 1e-15 are merged.
std::vector<double> merge_breakpoints(const std::vector<double> &a, const std::vector<double> &b);
/// Geometric grading eps * 2^k toward both endpoints, used to resolve
/// closed-form layer functions in error integrals.
std::vector<double> layer_breakpoints(double eps);

/// Error norms against a closed-form solution.
Norms1D error_norms(const FemSolution1D &sol, const Function1D &exact, double eps, const Expr &b);
/// Error norms against another discrete solution (e.g. a reference).
Norms1D error_norms(const FemSolution1D &sol, const FemSolution1D &ref, double eps, const Expr &b);

/// Delta_BL(lambda, degree, eps) with every element bisected once, refined
/// further by nodes eps * 2^k (k = 0..5) at both ends.
Mesh1D reference_mesh(double lambda, int degree, double eps);

/// Solution of degree p_max + extra on reference_mesh. Used as the error
/// yardstick when no closed form exists.
FemSolution1D reference_solution(const Problem1D &prob, double lambda, int p_max, int extra = 6);

} // namespace hpsbl
