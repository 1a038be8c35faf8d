#include "hpsbl/experiment.hpp"
#include "hpsbl/analysis1d.hpp"
#include "hpsbl/analysis2d.hpp"
#include "hpsbl/errors.hpp"
#include "hpsbl/fem1d.hpp"
#include "hpsbl/fem2d.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

namespace hpsbl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Calls f(i) for i in [0, n) on up to `workers` threads; f must not throw.
template <typename F> void parallel_for(int n, int workers, F &&f) {
  std::atomic<int> next{0};
  const auto work = [&] {
    for (int i; (i = next++) < n;)
      f(i);
  };
  const int extra = std::min(workers, n) - 1;
  std::vector<std::thread> pool;
  for (int t = 0; t < extra; ++t)
    pool.emplace_back(work);
  work();
  for (auto &t : pool)
    t.join();
}

std::string num(double x) {
  if (std::isnan(x))
    return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.14e", x);
  return buf;
}

std::string csv_field(std::string s) {
  for (char &ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"')
      ch = ch == ',' ? ';' : ' ';
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void fail_row(SweepRow &row, const std::string &what) {
  row.error = what.empty() ? "failed" : what;
  row.err_l2 = row.err_energy = row.err_balanced = row.err_max = kNaN;
  row.err_h1_semi = row.err_line1 = row.err_line2 = kNaN;
}

void sweep1d(const ExperimentConfig &cfg, std::vector<SweepRow> &rows) {
  const Expr b = cfg.b_expr(), f = cfg.f_expr();
  const auto problem = [&](double eps) {
    Problem1D prob;
    prob.eps = eps;
    prob.b = b;
    prob.f = f;
    if (cfg.use_exact())
      prob.exact = [eps](double x) { return constant_coefficient_solution(eps, x); };
    return prob;
  };

  const int ne = static_cast<int>(cfg.eps.size());
  std::vector<std::optional<FemSolution1D>> refs(static_cast<std::size_t>(ne));
  std::vector<std::string> ref_error(static_cast<std::size_t>(ne));
  if (!cfg.use_exact())
    parallel_for(ne, cfg.workers, [&](int i) {
      try {
        refs[static_cast<std::size_t>(i)] = reference_solution(problem(cfg.eps[static_cast<std::size_t>(i)]),
                                                               cfg.lambda, cfg.p_max);
      } catch (const std::exception &e) {
        ref_error[static_cast<std::size_t>(i)] = std::string("reference: ") + e.what();
      }
    });

  const int np = cfg.p_max - cfg.p_min + 1;
  parallel_for(static_cast<int>(rows.size()), cfg.workers, [&](int k) {
    SweepRow &row = rows[static_cast<std::size_t>(k)];
    const std::size_t ie = static_cast<std::size_t>(k / np);
    try {
      const Problem1D prob = problem(row.eps);
      const Space1D space(make_sbl_mesh(cfg.lambda, row.p, row.eps).mesh, row.p);
      row.dofs = space.num_free();
      const auto t0 = std::chrono::steady_clock::now();
      const FemSolution1D sol = solve(space, prob);
      row.solve_seconds = seconds_since(t0);
      if (!cfg.use_exact() && !refs[ie])
        throw NumericalError(ref_error[ie]);
      const Norms1D n =
          cfg.use_exact() ? error_norms(sol, prob.exact, row.eps, b) : error_norms(sol, *refs[ie], row.eps, b);
      row.err_l2 = n.l2;
      row.err_energy = n.energy;
      row.err_balanced = n.balanced;
      row.err_max = n.max;
      row.err_h1_semi = n.h1_semi;
      row.err_line1 = row.err_line2 = kNaN;
    } catch (const std::exception &e) {
      fail_row(row, e.what());
    }
  });
}

void sweep2d(const ExperimentConfig &cfg, std::vector<SweepRow> &rows) {
  const auto parent = domain_mesh(cfg);
  const Expr b = cfg.b_expr(), f = cfg.f_expr();
  const auto problem = [&](double eps) {
    Problem2D prob;
    prob.eps = eps;
    prob.b = b;
    prob.f = f;
    return prob;
  };

  const int ne = static_cast<int>(cfg.eps.size());
  std::vector<std::optional<FemSolution2D>> refs(static_cast<std::size_t>(ne));
  std::vector<std::string> ref_error(static_cast<std::size_t>(ne));
  parallel_for(ne, cfg.workers, [&](int i) {
    try {
      refs[static_cast<std::size_t>(i)] = reference_solution2d(parent, problem(cfg.eps[static_cast<std::size_t>(i)]),
                                                               cfg.lambda, cfg.p_max + 3);
    } catch (const std::exception &e) {
      ref_error[static_cast<std::size_t>(i)] = std::string("reference: ") + e.what();
    }
  });

  const int np = cfg.p_max - cfg.p_min + 1;
  parallel_for(static_cast<int>(rows.size()), cfg.workers, [&](int k) {
    SweepRow &row = rows[static_cast<std::size_t>(k)];
    const std::size_t ie = static_cast<std::size_t>(k / np);
    try {
      const auto mesh = std::make_shared<const BlMesh2D>(split_needles(parent, cfg.lambda, row.p, row.eps));
      const Space2D space(mesh, row.p);
      row.dofs = space.num_free();
      const auto t0 = std::chrono::steady_clock::now();
      const FemSolution2D sol = solve2d(space, problem(row.eps));
      row.solve_seconds = seconds_since(t0);
      if (!refs[ie])
        throw NumericalError(ref_error[ie]);
      const Norms2D n = error_norms2d(sol, *refs[ie], row.eps, b);
      const auto [l1, l2] = sampling_lines(cfg, row.eps);
      row.err_l2 = n.l2;
      row.err_energy = n.energy;
      row.err_balanced = n.balanced;
      row.err_h1_semi = n.h1_semi;
      row.err_line1 = sample_line_error(sol, *refs[ie], l1[0], l1[1], cfg.samples);
      row.err_line2 = sample_line_error(sol, *refs[ie], l2[0], l2[1], cfg.samples);
      row.err_max = std::max(row.err_line1, row.err_line2);
    } catch (const std::exception &e) {
      fail_row(row, e.what());
    }
  });
}

struct VerifyPoint {
  double eps;
  int p;
  double scs, inv_s1, inv_seps, z1, zeps;
  std::string error;
};

std::string fit_line_text(const std::string &label, const std::vector<double> &x, const std::vector<double> &y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  try {
    const Fit fit = fit_line(lx, ly);
    return label + " slope=" + num(fit.slope) + " r2=" + num(fit.r2);
  } catch (const InputError &) {
    return label + " slope=n/a r2=n/a";
  }
}

} // namespace

Fit fit_line(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InputError("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0))
    throw InputError("fit_line: x values are all equal");
  Fit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

std::shared_ptr<const AsymptoticMesh2D> domain_mesh(const ExperimentConfig &cfg) {
  return std::make_shared<const AsymptoticMesh2D>(cfg.domain == "disk" ? make_disk_mesh() : make_ellipse_mesh());
}

std::pair<std::array<Eigen::Vector2d, 2>, std::array<Eigen::Vector2d, 2>> sampling_lines(const ExperimentConfig &cfg,
                                                                                            double eps) {
  const std::array<Eigen::Vector2d, 2> line1{Eigen::Vector2d(8 * eps, 0.0), Eigen::Vector2d(1.0, 0.0)};
  Eigen::Vector2d start, dir;
  if (cfg.domain == "disk") {
    start = Eigen::Vector2d(1.0, 1.0) / std::sqrt(2.0);
    dir = -start;
  } else {
    start = Eigen::Vector2d(std::sqrt(2.0), std::sqrt(2.0) / 2);
    dir = Eigen::Vector2d(1.0, -1.0) / std::sqrt(2.0);
  }
  return {line1, {start, start + 8 * eps * dir}};
}

std::vector<SweepRow> run_sweep(const ExperimentConfig &cfg) {
  cfg.validate();
  std::vector<SweepRow> rows;
  for (double eps : cfg.eps)
    for (int p : cfg.degrees()) {
      SweepRow row;
      row.run_id = static_cast<int>(rows.size());
      row.dim = cfg.dim;
      row.eps = eps;
      row.p = p;
      row.lambda = cfg.lambda;
      rows.push_back(row);
    }
  if (cfg.dim == 1)
    sweep1d(cfg, rows);
  else
    sweep2d(cfg, rows);
  return rows;
}

std::string output_header(const ExperimentConfig &cfg, const std::string &kind) {
  std::ostringstream out;
  out << "# hpsbl " << kind << '\n'
      << "# version=" << HPSBL_VERSION << '\n'
      << "# config_hash=" << cfg.hash() << '\n'
      << "# seed=" << cfg.seed << '\n'
      << "# problem=" << cfg.problem << '\n';
  return out.str();
}

std::string sweep_csv(const ExperimentConfig &cfg, const std::vector<SweepRow> &rows) {
  std::ostringstream out;
  out << output_header(cfg, "sweep")
      << "run_id,dim,epsilon,p,lambda,dofs,err_l2,err_energy,err_balanced,err_max,solve_seconds,"
         "err_h1_semi,err_line1,err_line2,error\n";
  for (const SweepRow &r : rows)
    out << r.run_id << ',' << r.dim << ',' << num(r.eps) << ',' << r.p << ',' << num(r.lambda) << ',' << r.dofs
        << ',' << num(r.err_l2) << ',' << num(r.err_energy) << ',' << num(r.err_balanced) << ',' << num(r.err_max)
        << ',' << num(r.solve_seconds) << ',' << num(r.err_h1_semi) << ',' << num(r.err_line1) << ','
        << num(r.err_line2) << ',' << csv_field(r.error) << '\n';
  return out.str();
}

VerifyResult run_verify(const ExperimentConfig &cfg) {
  cfg.validate();
  for (double eps : cfg.eps)
    for (int p : cfg.degrees())
      if (std::sqrt(cfg.lambda * p * eps) * p > cfg.c)
        throw RegimeError("verify: (eps=" + num(eps) + ", p=" + std::to_string(p) +
                          ") violates sqrt(lambda p eps) p <= c");

  const Expr b = cfg.b_expr();
  const auto parent = cfg.dim == 2 ? domain_mesh(cfg) : nullptr;
  std::vector<VerifyPoint> points;
  for (double eps : cfg.eps)
    for (int p : cfg.degrees())
      points.push_back({eps, p, 0, 0, 0, 0, 0, {}});
  const int scs_trials = std::max(200, cfg.trials);

  parallel_for(static_cast<int>(points.size()), cfg.workers, [&](int k) {
    VerifyPoint &pt = points[static_cast<std::size_t>(k)];
    try {
      if (cfg.dim == 1) {
        pt.scs = measure_scs_constant(b, pt.eps, cfg.lambda, pt.p, scs_trials, cfg.seed);
        pt.inv_s1 = measure_inverse_constant(Subspace1D::Global, cfg.lambda, pt.p, pt.eps);
        pt.inv_seps = measure_inverse_constant(Subspace1D::Layer, cfg.lambda, pt.p, pt.eps);
        const auto st = stability_study(b, cfg.lambda, {pt.p}, {pt.eps}, cfg.trials, cfg.seed, cfg.c);
        pt.z1 = st.front().z1_ratio;
        pt.zeps = st.front().zeps_ratio;
      } else {
        pt.scs = measure_scs_constant2d(parent, b, cfg.lambda, pt.p, pt.eps, scs_trials, cfg.seed);
        pt.inv_s1 = measure_inverse_constant2d(parent, Subspace2D::Global, cfg.lambda, pt.p, pt.eps);
        pt.inv_seps = measure_inverse_constant2d(parent, Subspace2D::Needle, cfg.lambda, pt.p, pt.eps);
        const auto st = stability_study2d(parent, b, cfg.lambda, {pt.p}, {pt.eps}, cfg.trials, cfg.seed, cfg.c);
        pt.z1 = st.front().z1_ratio;
        pt.zeps = st.front().zeps_ratio;
      }
    } catch (const std::exception &e) {
      pt.error = e.what();
    }
  });
  for (const VerifyPoint &pt : points)
    if (!pt.error.empty())
      throw NumericalError("verify (eps=" + num(pt.eps) + ", p=" + std::to_string(pt.p) + "): " + pt.error);

  VerifyResult res;
  for (const VerifyPoint &pt : points) {
    const double scale = std::sqrt(cfg.lambda * pt.p * pt.eps) * pt.p;
    for (const auto &[name, value] : {std::pair{"scs_ratio", pt.scs}, std::pair{"inv_s1", pt.inv_s1},
                                      std::pair{"inv_seps", pt.inv_seps}, std::pair{"p0_z1_ratio", pt.z1},
                                      std::pair{"p0_zeps_ratio", pt.zeps}}) {
      VerifyRow row;
      row.run_id = static_cast<int>(res.rows.size());
      row.quantity = name;
      row.dim = cfg.dim;
      row.eps = pt.eps;
      row.p = pt.p;
      row.lambda = cfg.lambda;
      row.scale = scale;
      row.value = value;
      res.rows.push_back(row);
    }
  }

  // regressions in log-log scale
  std::vector<double> scale, scs, ps, s1, width, ratio;
  double scs_c = 0.0;
  std::map<int, std::pair<double, double>> z1_range;
  for (const VerifyPoint &pt : points) {
    const double s = std::sqrt(cfg.lambda * pt.p * pt.eps) * pt.p;
    scale.push_back(s);
    scs.push_back(pt.scs);
    scs_c = std::max(scs_c, pt.scs / std::min(1.0, s));
    ps.push_back(pt.p);
    s1.push_back(pt.inv_s1);
    width.push_back(cfg.lambda * pt.p * pt.eps);
    ratio.push_back(pt.inv_seps / pt.inv_s1);
    auto [it, fresh] = z1_range.try_emplace(pt.p, pt.z1, pt.z1);
    if (!fresh) {
      it->second.first = std::min(it->second.first, pt.z1);
      it->second.second = std::max(it->second.second, pt.z1);
    }
  }
  res.trailer.push_back(fit_line_text("fit scs_ratio vs sqrt(lambda p eps) p:", scale, scs));
  res.trailer.push_back("scs_ratio max value / min(1, sqrt(lambda p eps) p)=" + num(scs_c));
  res.trailer.push_back(fit_line_text("fit inv_s1 vs p:", ps, s1));
  res.trailer.push_back(fit_line_text("fit inv_seps / inv_s1 vs lambda p eps:", width, ratio));
  for (const auto &[p, range] : z1_range)
    res.trailer.push_back("p0_z1_ratio p=" + std::to_string(p) + " max/min over eps=" +
                          num(range.first > 0.0 ? range.second / range.first : kNaN));
  return res;
}

std::string verify_csv(const ExperimentConfig &cfg, const VerifyResult &result) {
  std::ostringstream out;
  out << output_header(cfg, "verify") << "run_id,quantity,dim,epsilon,p,lambda,scale,value\n";
  for (const VerifyRow &r : result.rows)
    out << r.run_id << ',' << r.quantity << ',' << r.dim << ',' << num(r.eps) << ',' << r.p << ',' << num(r.lambda)
        << ',' << num(r.scale) << ',' << num(r.value) << '\n';
  for (const std::string &t : result.trailer)
    out << "# " << t << '\n';
  return out.str();
}

std::string drop_column(const std::string &csv, const std::string &column) {
  std::istringstream in(csv);
  std::ostringstream out;
  long index = -1;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') {
      out << line << '\n';
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');)
      fields.push_back(f);
    if (!line.empty() && line.back() == ',')
      fields.emplace_back();
    if (index < 0) {
      const auto it = std::find(fields.begin(), fields.end(), column);
      if (it == fields.end())
        throw InputError("missing column '" + column + "'");
      index = it - fields.begin();
    }
    for (std::size_t i = 0, first = 1; i < fields.size(); ++i)
      if (static_cast<long>(i) != index) {
        out << (first ? "" : ",") << fields[i];
        first = 0;
      }
    out << '\n';
  }
  return out.str();
}

} // namespace hpsbl
