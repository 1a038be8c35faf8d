// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "hpsbl/analysis1d.hpp"
#include "hpsbl/config.hpp"
#include "hpsbl/experiment.hpp"
#include "hpsbl/fem1d.hpp"
#include "hpsbl/fem2d.hpp"
#include "hpsbl/geom2d.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

using namespace hpsbl;

namespace {

// Tolerances.
constexpr double kC1MinR2 = 0.98, kC1MaxSlope = -0.5, kC1EpsSpread = 3.0, kC1Seconds = 5.0;
constexpr double kC2EpsSpread = 3.0, kC2Seconds = 10.0;
constexpr double kC3MinR2 = 0.95;
constexpr double kC4Orthogonality = 1e-9, kC4Residual = 1e-10;
constexpr double kC5Sqrt12Tol = 1e-3, kC5SlopeLo = 1.5, kC5SlopeHi = 2.2, kC5WidthLo = -1.15, kC5WidthHi = -0.85,
                 kC5Seconds = 20.0;
constexpr double kC6SlopeLo = 0.8, kC6SlopeHi = 1.2, kC6MaxC = 5.0;
constexpr double kC7Spread = 2.0, kC7Admissible = 0.5;
constexpr int kC7Trials = 50;
constexpr double kC8Ratio = 1e-2, kC8MinR2 = 0.95, kC8Seconds = 180.0;
constexpr double kC9Area = 1e-10, kC9SlopeLo = -1.1, kC9SlopeHi = -0.9, kC9Conformity = 1e-9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
    }
  }
  void note(const std::string &s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char *f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Fit semilog_fit(const std::vector<double> &ps, const std::vector<double> &err) {
  std::vector<double> y;
  for (double e : err)
    y.push_back(std::log(e));
  return fit_line(ps, y);
}

Fit loglog_fit(const std::vector<double> &x, const std::vector<double> &y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

bool strictly_decreasing(const std::vector<double> &v, std::size_t from = 0) {
  for (std::size_t i = from + 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1]))
      return false;
  return true;
}

double spread(const std::vector<double> &v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

// ---------------------------------------------------------------------------

// Shared by criteria 1 and 3: closed-form problem b = f = 1, lambda = 1.
struct ConstantSweep {
  std::vector<double> epss{1e-4, 1e-6, 1e-8};
  std::vector<double> ps;
  std::map<double, std::vector<double>> balanced, maxerr;
  double seconds = 0.0;
};

const ConstantSweep &constant_sweep() {
  static const ConstantSweep s = [] {
    ConstantSweep out;
    const auto t0 = Clock::now();
    for (int p = 1; p <= 10; ++p)
      out.ps.push_back(p);
    for (double eps : out.epss)
      for (int p = 1; p <= 10; ++p) {
        const Problem1D prob = constant_coefficient_problem(eps);
        const FemSolution1D sol = solve(Space1D(make_sbl_mesh(1.0, p, eps).mesh, p), prob);
        const Norms1D n = error_norms(sol, prob.exact, eps, prob.b);
        out.balanced[eps].push_back(n.balanced);
        out.maxerr[eps].push_back(n.max);
      }
    out.seconds = seconds_since(t0);
    return out;
  }();
  return s;
}

Outcome criterion1() {
  Outcome o;
  const ConstantSweep &s = constant_sweep();
  double worst_r2 = 1.0, worst_slope = -1e300, worst_spread = 0.0;
  for (double eps : s.epss) {
    const Fit fit = semilog_fit(s.ps, s.balanced.at(eps));
    worst_r2 = std::min(worst_r2, fit.r2);
    worst_slope = std::max(worst_slope, fit.slope);
  }
  for (std::size_t k = 0; k < s.ps.size(); ++k) {
    std::vector<double> across;
    for (double eps : s.epss)
      across.push_back(s.balanced.at(eps)[k]);
    worst_spread = std::max(worst_spread, spread(across));
  }
  o.note("min R2 " + fmt("%.4f", worst_r2) + ", max slope " + fmt("%.3f", worst_slope) + ", max eps spread " +
         fmt("%.3f", worst_spread) + ", " + fmt("%.2f", s.seconds) + " s");
  o.require(worst_r2 >= kC1MinR2, "R2 >= 0.98");
  o.require(worst_slope < kC1MaxSlope, "slope < -0.5");
  o.require(worst_spread <= kC1EpsSpread, "eps spread <= 3");
  o.require(s.seconds < kC1Seconds, "runtime < 5 s");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = parse_config("problem = preset1d-paper");
  const auto rows = run_sweep(cfg);
  const double secs = seconds_since(t0);
  std::map<double, std::vector<double>> bal, semi, l2;
  bool dofs_ok = rows.size() == 25, rows_ok = true;
  for (const auto &r : rows) {
    rows_ok = rows_ok && r.error.empty();
    dofs_ok = dofs_ok && r.dofs == 2 + 3 * (r.p - 1);
    bal[r.eps].push_back(r.err_balanced);
    semi[r.eps].push_back(std::sqrt(r.eps) * r.err_h1_semi);
    l2[r.eps].push_back(r.err_l2);
  }
  bool decreasing = true;
  double worst = 0.0;
  for (const auto *curve : {&bal, &semi, &l2}) {
    for (const auto &[eps, v] : *curve)
      decreasing = decreasing && strictly_decreasing(v);
    for (int k = 0; k < 5; ++k) {
      std::vector<double> across;
      for (const auto &[eps, v] : *curve)
        across.push_back(v[static_cast<std::size_t>(k)]);
      worst = std::max(worst, spread(across));
    }
  }
  o.note("25 rows, max eps spread " + fmt("%.3f", worst) + ", " + fmt("%.2f", secs) + " s");
  o.require(rows_ok, "all rows solved");
  o.require(dofs_ok, "dofs = 2 + 3(p-1)");
  o.require(decreasing, "strict decrease of balanced, sqrt(eps) H1 and L2 errors");
  o.require(worst <= kC2EpsSpread, "eps curves within a factor 3");
  o.require(secs < kC2Seconds, "runtime < 10 s");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const ConstantSweep &s = constant_sweep();
  bool mono = true;
  double worst_r2 = 1.0;
  for (double eps : s.epss) {
    const auto &m = s.maxerr.at(eps);
    mono = mono && strictly_decreasing(m, 1); // from p = 2
    worst_r2 = std::min(worst_r2, semilog_fit(s.ps, m).r2);
  }
  o.note("min R2 " + fmt("%.4f", worst_r2) + ", max error at p = 10: " +
         fmt("%.2e", std::max({s.maxerr.at(1e-4).back(), s.maxerr.at(1e-6).back(), s.maxerr.at(1e-8).back()})));
  o.require(mono, "monotone decrease for p >= 2");
  o.require(worst_r2 >= kC3MinR2, "R2 >= 0.95");
  return o;
}

Outcome criterion4() {
  Outcome o;
  // u = (x - x^2) e^x, b = 1 + x, eps = 1e-2
  const double eps = 1e-2;
  const int p = 6;
  Problem1D prob;
  prob.eps = eps;
  prob.b = Expr::parse("1 + x");
  prob.f = Expr::parse("1e-4*(x^2 + 3*x)*exp(x) + (1 + x)*(x - x^2)*exp(x)");
  const auto u = [](double x) { return ValueD{(x - x * x) * std::exp(x), (1 - x - x * x) * std::exp(x)}; };
  const Space1D space(make_sbl_mesh(1.0, p, eps).mesh, p);
  const FemSolution1D uh = solve(space, prob);

  const auto rule = gauss_rule<double>(40);
  double worst = 0.0;
  for (int g = 0; g < space.num_dofs(); ++g) {
    if (space.free_index(g) < 0)
      continue;
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(space.num_dofs());
    unit[g] = 1.0;
    const FemSolution1D phi(space, unit);
    double form = 0.0;
    for (int j = 0; j < space.mesh().num_elements(); ++j) {
      const auto r = rule.mapped(space.mesh().left(j), space.mesh().right(j));
      for (Eigen::Index q = 0; q < r.nodes.size(); ++q) {
        const double x = r.nodes[q];
        const ValueD e{u(x).value - uh.eval_local(j, space.mesh().to_reference(j, x)).value,
                       u(x).derivative - uh.eval_local(j, space.mesh().to_reference(j, x)).derivative};
        const ValueD v = phi.eval_local(j, space.mesh().to_reference(j, x));
        form += r.weights[q] * (eps * eps * e.derivative * v.derivative + (1 + x) * e.value * v.value);
      }
    }
    worst = std::max(worst, std::abs(form));
  }

  const System1D sys = assemble(space, prob);
  Eigen::VectorXd x(space.num_free());
  for (int g = 0; g < space.num_dofs(); ++g)
    if (const int k = space.free_index(g); k >= 0)
      x[k] = uh.coefficients()[g];
  const double res1 = (sys.matrix.multiply(x) - sys.rhs).norm() / sys.rhs.norm();

  // 2D: variable coefficients on the ellipse
  auto parent = std::make_shared<const AsymptoticMesh2D>(make_ellipse_mesh());
  Problem2D prob2;
  prob2.eps = 1e-2;
  prob2.b = Expr::parse("2 + x*y");
  prob2.f = Expr::parse("cos(x) + y");
  const Space2D space2(std::make_shared<const BlMesh2D>(split_needles(parent, 1.0, 4, 1e-2)), 4);
  const double res2 = algebraic_residual(assemble2d(space2, prob2), solve2d(space2, prob2));

  o.note("max |B(u - u_h, phi_i)| " + fmt("%.2e", worst) + ", residual 1D " + fmt("%.2e", res1) + ", 2D " +
         fmt("%.2e", res2));
  o.require(worst < kC4Orthogonality, "|B(u - u_h, phi_i)| < 1e-9");
  o.require(res1 < kC4Residual && res2 < kC4Residual, "relative residual < 1e-10");
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto t0 = Clock::now();
  const double p1 = measure_inverse_constant(Subspace1D::Global, 1.0, 1, 1e-4);
  std::vector<double> ps, s1;
  for (int p = 2; p <= 16; ++p) {
    ps.push_back(p);
    s1.push_back(measure_inverse_constant(Subspace1D::Global, 1.0, p, 1e-4));
  }
  const double slope_p = loglog_fit(ps, s1).slope;
  const int p = 4;
  std::vector<double> widths, ratios;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    widths.push_back(p * eps);
    ratios.push_back(measure_inverse_constant(Subspace1D::Layer, 1.0, p, eps) /
                     measure_inverse_constant(Subspace1D::Global, 1.0, p, eps));
  }
  const double slope_w = loglog_fit(widths, ratios).slope;
  const double secs = seconds_since(t0);
  o.note("p = 1 ratio " + fmt("%.6f", p1) + ", slope in p " + fmt("%.3f", slope_p) + ", slope in lambda p eps " +
         fmt("%.4f", slope_w) + ", " + fmt("%.2f", secs) + " s");
  o.require(std::abs(p1 - std::sqrt(12.0)) < kC5Sqrt12Tol, "p = 1 ratio = sqrt(12)");
  o.require(slope_p >= kC5SlopeLo && slope_p <= kC5SlopeHi, "p slope in [1.5, 2.2]");
  o.require(slope_w >= kC5WidthLo && slope_w <= kC5WidthHi, "width slope in [-1.15, -0.85]");
  o.require(secs < kC5Seconds, "runtime < 20 s");
  return o;
}

Outcome criterion6() {
  Outcome o;
  const Expr b = Expr::constant(1.0);
  std::vector<double> scale, ratio;
  double c = 0.0;
  for (int p : {2, 4, 8})
    for (double eps : {1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
      const double s = std::sqrt(p * eps) * p;
      const double r = measure_scs_constant(b, eps, 1.0, p, 200, 1);
      scale.push_back(s);
      ratio.push_back(r);
      c = std::max(c, r / std::min(1.0, s));
    }
  const double slope = loglog_fit(scale, ratio).slope;
  o.note("slope " + fmt("%.4f", slope) + ", fitted C " + fmt("%.4f", c));
  o.require(slope >= kC6SlopeLo && slope <= kC6SlopeHi, "slope in [0.8, 1.2]");
  o.require(c <= kC6MaxC, "C <= 5");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const std::vector<double> epss{1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
  double worst = 0.0;
  for (int p : {2, 4, 8}) {
    const auto rows = stability_study(Expr::constant(1.0), 1.0, {p}, epss, kC7Trials, 1, kC7Admissible);
    std::vector<double> z1;
    for (const auto &r : rows)
      z1.push_back(r.z1_ratio);
    const double sp = spread(z1);
    o.note("p = " + std::to_string(p) + ": max ratio " + fmt("%.4f", *std::max_element(z1.begin(), z1.end())) +
           ", spread " + fmt("%.4f", sp));
    worst = std::max(worst, sp);
  }
  o.require(worst < kC7Spread, "spread across eps < 2");
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = parse_config("problem = preset2d-ellipse");
  const auto rows = run_sweep(cfg);
  const double secs = seconds_since(t0);
  std::map<double, std::vector<double>> line1, line2, bal;
  bool rows_ok = true;
  for (const auto &r : rows) {
    rows_ok = rows_ok && r.error.empty();
    line1[r.eps].push_back(r.err_line1);
    line2[r.eps].push_back(r.err_line2);
    bal[r.eps].push_back(r.err_balanced);
  }
  bool mono = true, ratio_ok = true;
  double worst_r2 = 1.0;
  std::vector<double> ps{1, 2, 3, 4, 5, 6, 7};
  for (double eps : cfg.eps) {
    for (const auto *lines : {&line1, &line2}) {
      const auto &v = lines->at(eps);
      mono = mono && strictly_decreasing(v, 1);
      const double r = v.back() / v[1]; // p = 7 against p = 2
      ratio_ok = ratio_ok && r < kC8Ratio;
      o.note("eps " + fmt("%.0e", eps) + (lines == &line1 ? " line 1" : " line 2") + " p7/p2 " + fmt("%.3e", r));
    }
    worst_r2 = std::min(worst_r2, semilog_fit(ps, bal.at(eps)).r2);
  }
  o.note("balanced min R2 " + fmt("%.4f", worst_r2) + ", " + fmt("%.1f", secs) + " s");
  o.require(rows_ok, "all rows solved");
  o.require(mono, "line errors decrease for p >= 2");
  o.require(ratio_ok, "final/initial line error < 1e-2");
  o.require(worst_r2 >= kC8MinR2, "balanced R2 >= 0.95");
  o.require(secs < kC8Seconds, "runtime < 3 min");
  return o;
}

Outcome criterion9() {
  Outcome o;
  const auto disk = std::make_shared<const AsymptoticMesh2D>(make_disk_mesh());
  const auto ellipse = std::make_shared<const AsymptoticMesh2D>(make_ellipse_mesh());
  const double area_d = std::abs(mesh_area(split_boundary(disk, {})) - M_PI);
  const double area_e = std::abs(mesh_area(split_boundary(ellipse, {})) - 2 * M_PI);

  // sampled ||M'|| ||M'^{-1}|| over the needles
  std::vector<double> widths, bounds;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const BlMesh2D mesh = split_needles(ellipse, 1.0, 2, eps);
    double worst = 0.0;
    for (const auto &e : mesh.elements)
      if (e.map.kind() == ElementKind::Needle)
        for (int i = 0; i <= 20; ++i)
          for (int j = 0; j <= 20; ++j) {
            const Eigen::Matrix2d jac = e.map.eval(i / 20.0, j / 20.0).jacobian;
            worst = std::max(worst, jac.lpNorm<Eigen::Infinity>() * jac.inverse().lpNorm<Eigen::Infinity>());
          }
    widths.push_back(mesh.layer_width());
    bounds.push_back(worst);
  }
  const double slope = loglog_fit(widths, bounds).slope;

  double conf = 0.0;
  for (const auto &m : {disk, ellipse})
    for (double eps : {1e-1, 1e-3, 1e-6}) {
      const BlMesh2D mesh = split_needles(m, 1.0, 4, eps);
      conf = std::max({conf, conformity_defect(mesh), boundary_defect(mesh)});
    }
  o.note("area errors " + fmt("%.1e", area_d) + " / " + fmt("%.1e", area_e) + ", needle slope " +
         fmt("%.4f", slope) + ", conformity " + fmt("%.1e", conf));
  o.require(area_d < kC9Area && area_e < kC9Area, "areas to 1e-10");
  o.require(slope >= kC9SlopeLo && slope <= kC9SlopeHi, "needle slope in [-1.1, -0.9]");
  o.require(conf < kC9Conformity, "conformity < 1e-9");
  return o;
}

Outcome criterion10() {
  Outcome o;
  bool same = true;
  for (const char *text : {"problem = preset1d-paper\nseed = 11", "problem = preset2d-disk\neps = 1e-3\np_max = 3"}) {
    ExperimentConfig cfg = parse_config(text);
    const std::string a = drop_column(sweep_csv(cfg, run_sweep(cfg)), "solve_seconds");
    const std::string b = drop_column(sweep_csv(cfg, run_sweep(cfg)), "solve_seconds");
    cfg.workers = 2;
    const std::string c = drop_column(sweep_csv(cfg, run_sweep(cfg)), "solve_seconds");
    same = same && a == b && a == c;
  }
  o.note("two configs, three runs each (1 and 2 workers)");
  o.require(same, "byte-identical CSV without the timing column");
  return o;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1D constant-coefficient robustness", criterion1},
      {"1D reproduction (preset1d-paper)", criterion2},
      {"1D max-norm convergence", criterion3},
      {"Galerkin orthogonality", criterion4},
      {"inverse-estimate scalings", criterion5},
      {"strengthened Cauchy-Schwarz", criterion6},
      {"P0 stability", criterion7},
      {"2D ellipse reproduction", criterion8},
      {"geometry", criterion9},
      {"determinism", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %zu (%s): %s - %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
