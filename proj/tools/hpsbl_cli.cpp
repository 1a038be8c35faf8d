// hpsbl: sweep, verify, plot and mesh-dump front end.
//
// Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.

#include "hpsbl/config.hpp"
#include "hpsbl/errors.hpp"
#include "hpsbl/experiment.hpp"
#include "hpsbl/fem1d.hpp"
#include "hpsbl/plot.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace hpsbl;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  int workers = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string csv; // plot only
};

ExperimentConfig load(const Options &o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.workers > 0)
    cfg.workers = o.workers;
  if (o.seed_set)
    cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

void write_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text))
    throw ConfigError("--out", "cannot write '" + path.string() + "'");
  std::cout << path.string() << '\n';
}

fs::path out_dir(const Options &o) {
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec)
    throw ConfigError("--out", "cannot create '" + o.out + "': " + ec.message());
  return o.out;
}

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("--csv", "cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int sweep(const Options &o) {
  const ExperimentConfig cfg = load(o);
  const fs::path dir = out_dir(o);
  const auto rows = run_sweep(cfg);
  const std::string csv = sweep_csv(cfg, rows);
  write_file(dir / cfg.csv, csv);
  if (!cfg.svg.empty())
    write_file(dir / cfg.svg, emit_plot(csv, cfg.plot));
  int failed = 0;
  for (const auto &r : rows)
    if (!r.error.empty()) {
      std::cerr << "run " << r.run_id << " (eps=" << r.eps << ", p=" << r.p << "): " << r.error << '\n';
      ++failed;
    }
  return failed ? 3 : 0;
}

int verify(const Options &o) {
  const ExperimentConfig cfg = load(o);
  const fs::path dir = out_dir(o);
  const VerifyResult res = run_verify(cfg);
  write_file(dir / "verify.csv", verify_csv(cfg, res));
  for (const auto &t : res.trailer)
    std::cout << t << '\n';
  return 0;
}

int plot(const Options &o) {
  const ExperimentConfig cfg = load(o);
  const fs::path dir = out_dir(o);
  const fs::path csv = o.csv.empty() ? dir / cfg.csv : fs::path(o.csv);
  write_file(dir / (cfg.svg.empty() ? "sweep.svg" : cfg.svg), emit_plot(read_file(csv), cfg.plot));
  return 0;
}

int mesh_dump(const Options &o) {
  const ExperimentConfig cfg = load(o);
  const fs::path dir = out_dir(o);
  const double eps = cfg.eps.front();
  const int p = cfg.p_min;
  if (cfg.dim == 2) {
    const BlMesh2D mesh = split_needles(domain_mesh(cfg), cfg.lambda, p, eps);
    std::string svg = mesh_svg(mesh);
    char grid[64];
    std::snprintf(grid, sizeof grid, "# epsilon=%.6g p=%d\n", eps, p);
    const std::string note = "<!--\n" + output_header(cfg, "mesh-dump") + grid + "-->\n";
    const auto at = svg.find("<svg");
    svg.insert(at == std::string::npos ? 0 : at, note);
    write_file(dir / "mesh.svg", svg);
  } else {
    std::ostringstream out;
    out << output_header(cfg, "mesh-dump") << "epsilon,p,node\n";
    for (double e : cfg.eps)
      for (int q : cfg.degrees())
        for (double x : make_sbl_mesh(cfg.lambda, q, e).mesh.nodes()) {
          char buf[96];
          std::snprintf(buf, sizeof buf, "%.14e,%d,%.14e\n", e, q, x);
          out << buf;
        }
    write_file(dir / "mesh.csv", out.str());
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"hp-FEM on Spectral Boundary Layer meshes: sweeps, measured constants, plots"};
  app.set_version_flag("--version", std::string(HPSBL_VERSION));
  app.require_subcommand(1);

  Options o;
  const auto common = [&](CLI::App *sub) {
    sub->add_option("--config", o.config, "key = value configuration file")->required();
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--workers", o.workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "random seed (overrides the config)");
  };
  CLI::App *s_sweep = app.add_subcommand("sweep", "convergence sweep over (eps, p): CSV and optional SVG");
  CLI::App *s_verify = app.add_subcommand("verify", "measured analysis constants: CSV with regression trailer");
  CLI::App *s_plot = app.add_subcommand("plot", "semi-log SVG from a sweep CSV");
  CLI::App *s_mesh = app.add_subcommand("mesh-dump", "mesh of the first (eps, p_min): SVG (2D) or node CSV (1D)");
  for (CLI::App *sub : {s_sweep, s_verify, s_plot, s_mesh})
    common(sub);
  s_plot->add_option("--csv", o.csv, "input CSV (default: <out>/<csv>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s_sweep)
      return sweep(o);
    if (*s_verify)
      return verify(o);
    if (*s_plot)
      return plot(o);
    return mesh_dump(o);
  } catch (const InputError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}
