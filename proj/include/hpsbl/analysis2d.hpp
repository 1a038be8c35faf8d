#pragma once

// The 2D counterparts of the 1D measurement harness: reduced projection,
// S1 (+) S_eps splitting on needle-split meshes, strengthened Cauchy-Schwarz
// and inverse-estimate constants, and the stability study.

#include "hpsbl/analysis1d.hpp"
#include "hpsbl/fem2d.hpp"

#include <cstdint>

namespace hpsbl {

/// b-weighted L2 projection of z onto the (masked) space. Integrals use
/// max(p + 4, 20)^2 Gauss points per element.
FemSolution2D project_p0_2d(const Space2D &space, const Expr &b, const PointFunction &z, int workers = 1);

/// z = z1 + z_eps: z1 in S^p(Delta_A) (unmasked), z_eps in the unmasked space
/// of the split mesh and supported on the needles.
struct Decomposition2D {
  FemSolution2D global;
  FemSolution2D layer;
};

/// Unsplit copy of the asymptotic mesh (one child per element).
std::shared_ptr<const BlMesh2D> asymptotic_bl_mesh(std::shared_ptr<const AsymptoticMesh2D> parent);

/// On boundary elements z1 is the polynomial extension of v from the regular
/// child to the whole reference square; elsewhere z1 = v. Requires a needle-
/// split mesh (RegimeError otherwise).
Decomposition2D decompose2d(const FemSolution2D &v);

/// DOFs of an unmasked split-mesh space touched only by needle elements.
std::vector<int> layer_dofs(const Space2D &space);

/// Gram and coupling matrices of S1 = S^p(Delta_A) (on Omega) and S_eps
/// (on the layer region), in the layout used by the 1D pencil.
ScsPencil build_scs_pencil2d(std::shared_ptr<const AsymptoticMesh2D> parent, const Expr &b, double lambda, int p,
                             double eps);

double measure_scs_constant2d(std::shared_ptr<const AsymptoticMesh2D> parent, const Expr &b, double lambda, int p,
                              double eps, int trials = 200, std::uint64_t seed = 1);

enum class Subspace2D { Global, Needle };

/// Largest elementwise sup ||grad z||_0 / ||z||_0 over Q_p, taken over the
/// elements of the asymptotic mesh (Global) or over the needles (Needle).
double measure_inverse_constant2d(std::shared_ptr<const AsymptoticMesh2D> parent, Subspace2D kind, double lambda,
                                  int p, double eps);

/// sum_{k,l <= modes} (a_kl cos(k pi x / 2 + l pi y) + b_kl sin(...)) / (1 + k + l),
/// standard normal coefficients.
class RandomFourier2D {
public:
  explicit RandomFourier2D(std::uint64_t seed, int modes = 8);
  double operator()(const Eigen::Vector2d &x) const;

private:
  int modes_;
  std::vector<double> cos_, sin_;
};

/// The needle corrector (1 - xi)^p in needle coordinates times the boundary
/// trace of z1, added to z_eps: the result lies in S_eps and vanishes on the
/// boundary whenever z1 + z_eps does.
FemSolution2D boundary_corrected_layer(const Decomposition2D &d);

struct StabilityRow2D {
  double eps = 0.0;
  int p = 0;
  double scale = 0.0;             // sqrt(lambda p eps) p
  double z1_ratio = 0.0;          // max over trials of ||z1||_0 / ||z||_0
  double zeps_ratio = 0.0;        // max of ||z_eps||_0 / (||z||_{0,layer} + scale ||z||_0)
  double corrected_boundary = 0.0; // max |corrected layer part| sampled on the boundary
  int trials = 0;
  std::uint64_t seed = 0;
};

/// 2D stability study; every (eps, p) must satisfy sqrt(lambda p eps) p <= c
/// and lambda p eps < 1/2 (RegimeError otherwise).
std::vector<StabilityRow2D> stability_study2d(std::shared_ptr<const AsymptoticMesh2D> parent, const Expr &b,
                                              double lambda, const std::vector<int> &ps,
                                              const std::vector<double> &epss, int trials, std::uint64_t seed,
                                              double c = 0.5);

} // namespace hpsbl
