#pragma once

// Batch experiments driven by an ExperimentConfig: convergence sweeps over
// (eps, p) and measurement campaigns for the analysis constants. Output is
// CSV with '#' comment lines; numbers use %.14e.

#include "hpsbl/config.hpp"
#include "hpsbl/geom2d.hpp"

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hpsbl {

/// Least-squares line y = slope x + intercept with coefficient of determination.
struct Fit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Needs at least two distinct x; throws InputError otherwise.
Fit fit_line(const std::vector<double> &x, const std::vector<double> &y);

/// Asymptotic mesh of a 2D config (disk: rho0 0.5, ellipse: rho0 0.4, 8 collar elements).
std::shared_ptr<const AsymptoticMesh2D> domain_mesh(const ExperimentConfig &cfg);

/// The two sampling segments of the 2D max-norm error: (8 eps, 0) -> (1, 0) and
/// a segment of length 8 eps entering the domain from a boundary point
/// ((sqrt 2, sqrt 2 / 2) at -45 degrees on the ellipse, (1, 1)/sqrt 2 along the
/// inward normal on the disk).
std::pair<std::array<Eigen::Vector2d, 2>, std::array<Eigen::Vector2d, 2>> sampling_lines(const ExperimentConfig &cfg,
                                                                                            double eps);

struct SweepRow {
  int run_id = 0;
  int dim = 1;
  double eps = 0.0;
  int p = 0;
  double lambda = 1.0;
  int dofs = 0;
  double err_l2 = 0.0;
  double err_energy = 0.0;
  double err_balanced = 0.0;
  double err_max = 0.0; // sampled on [0,1] (1D) / max of the two line errors (2D)
  double solve_seconds = 0.0;
  double err_h1_semi = 0.0;
  double err_line1 = 0.0; // 2D only
  double err_line2 = 0.0;
  std::string error; // non-empty: the row failed, errors are NaN
};

/// One row per (eps, p) in eps-major order. Grid points run on cfg.workers
/// threads; numerical failures are recorded in the row.
std::vector<SweepRow> run_sweep(const ExperimentConfig &cfg);

std::string sweep_csv(const ExperimentConfig &cfg, const std::vector<SweepRow> &rows);

struct VerifyRow {
  int run_id = 0;
  std::string quantity; // scs_ratio, inv_s1, inv_seps, p0_z1_ratio, p0_zeps_ratio
  int dim = 1;
  double eps = 0.0;
  int p = 0;
  double lambda = 1.0;
  double scale = 0.0; // sqrt(lambda p eps) p
  double value = 0.0;
};

struct VerifyResult {
  std::vector<VerifyRow> rows;
  std::vector<std::string> trailer; // regression summaries, without the '#'
};

/// Measured constants at every (eps, p). Every grid point must satisfy
/// sqrt(lambda p eps) p <= cfg.c (RegimeError otherwise).
VerifyResult run_verify(const ExperimentConfig &cfg);

std::string verify_csv(const ExperimentConfig &cfg, const VerifyResult &result);

/// "# key=value" header lines shared by every output file.
std::string output_header(const ExperimentConfig &cfg, const std::string &kind);

/// The CSV text with one column removed (comment lines untouched).
std::string drop_column(const std::string &csv, const std::string &column);

} // namespace hpsbl
