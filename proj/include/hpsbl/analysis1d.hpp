#pragma once

// Measurement harness for the reduced projection P0 on Spectral Boundary
// Layer meshes: the S1 (+) S_eps splitting, the strengthened Cauchy-Schwarz
// constant, inverse-estimate constants and interpolation error studies.

#include "hpsbl/fem1d.hpp"

#include <cstdint>
#include <random>

namespace hpsbl {

/// b-weighted L2 projection of z onto S_0(lambda,p): B0(z - P0 z, v) = 0 for
/// all v in the (Dirichlet-masked) space. Integrals use composite Gauss
/// rules with pieces of length <= 1/64 so oscillatory z are resolved.
FemSolution1D project_p0(const Space1D &space, const Expr &b, const std::function<double(double)> &z);

/// z = z1 + z_eps with z1 a single global polynomial (space on {0,1}) and
/// z_eps supported in the layer region (unmasked space on the SBL mesh).
struct Decomposition1D {
  FemSolution1D global;
  FemSolution1D layer;
};

/// Requires the three-element regime; throws RegimeError otherwise.
/// z1 is the polynomial extension of v from the middle element.
Decomposition1D decompose(const FemSolution1D &v, const SblMesh1D &mesh);

/// Gram / coupling matrices between S1 and S_eps on Delta_BL(lambda,p):
///   global_mass(i,j) = <u_i, u_j>_I, layer_mass(i,j) = <v_i, v_j>_{I_eps},
///   coupling(i,j)    = <b u_i, v_j>_{I_eps}.
struct ScsPencil {
  Eigen::MatrixXd global_mass;
  Eigen::MatrixXd layer_mass;
  Eigen::MatrixXd coupling;
};

ScsPencil build_scs_pencil(const Expr &b, double eps, double lambda, int p);

/// |B0(u,v)| / (||u||_{0,I} ||v||_{0,I_eps}) for coefficient vectors u, v.
double scs_ratio(const ScsPencil &pencil, const Eigen::VectorXd &u, const Eigen::VectorXd &v);

/// Exact sup of scs_ratio: largest singular value of L_u^{-1} C L_v^{-T}
/// with L the Cholesky factors of the two Gram matrices.
double scs_supremum(const ScsPencil &pencil);

/// Estimate of scs_supremum from `trials` random standard-normal pairs refined
/// by 10 rounds of alternating maximisation.
double estimate_scs(const ScsPencil &pencil, int trials, std::uint64_t seed);

/// estimate_scs on the 1D pencil.
double measure_scs_constant(const Expr &b, double eps, double lambda, int p, int trials = 200,
                            std::uint64_t seed = 1);

enum class Subspace1D { Global, Layer };

/// sup ||z'||_0 / ||z||_0 over S1 (global polynomials of degree p on (0,1);
/// p = 0 gives the constants) or over S_eps.
double measure_inverse_constant(Subspace1D kind, double lambda, int p, double eps);

/// a0 + sum_{k=1..modes} (a_k cos(k pi x) + b_k sin(k pi x)) / k, standard normal
/// coefficients.
class RandomFourier1D {
public:
  RandomFourier1D(std::uint64_t seed, int modes = 64);
  double operator()(double x) const;

private:
  std::vector<double> cos_, sin_;
};

struct StabilityRow {
  double eps = 0.0;
  int p = 0;
  double scale = 0.0;          // sqrt(lambda p eps) p
  double z1_ratio = 0.0;       // max over trials of ||z1||_0 / ||z||_0
  double zeps_ratio = 0.0;     // max over trials of ||z_eps||_0 / (||z||_{0,I_eps} + scale ||z||_0)
  int trials = 0;
  std::uint64_t seed = 0;
};

/// Decomposes P0 z for `trials` random z per (eps, p). Every pair must satisfy
/// sqrt(lambda p eps) p <= c; violations throw RegimeError.
std::vector<StabilityRow> stability_study(const Expr &b, double lambda, const std::vector<int> &ps,
                                          const std::vector<double> &epss, int trials,
                                          std::uint64_t seed, double c = 0.5);

struct InterpolationRow {
  int p = 0;
  double eps = 0.0;
  Norms1D error;
};

/// Balanced-norm (and other) errors of the elementwise Gauss-Lobatto
/// interpolant of the exact solution on Delta_BL(lambda, p).
std::vector<InterpolationRow> interpolation_study(const Problem1D &prob, double lambda,
                                                  const std::vector<int> &ps);

/// Composite L2 inner product helper: sum over pieces of length <= max_piece.
double l2_norm(const std::function<double(double)> &f, double a, double b, int points,
               double max_piece = 1.0 / 64.0);

} // namespace hpsbl
