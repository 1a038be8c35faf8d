#pragma once

// Experiment configuration: a flat "key = value" text format.
//
//   # comment
//   problem   = preset1d-paper     preset1d-const | preset2d-ellipse | preset2d-disk | custom
//   dim       = 1                  1 | 2 (custom only; presets fix it)
//   domain    = ellipse            disk | ellipse (2D)
//   b         = 1                  expression in x (and y)
//   f         = 1/(x+1/2)
//   eps       = 1e-4, 1e-5         list, each in (0,1]
//   p_min     = 1
//   p_max     = 5
//   lambda    = 1
//   reference = auto               auto | exact | solve
//   samples   = 20                 points per sampling line (2D max error)
//   csv       = sweep.csv          file names inside the output directory
//   svg       = sweep.svg          empty: no plot
//   plot      = err_balanced       column drawn by the plot
//   seed      = 1
//   workers   = 1
//   trials    = 20                 random functions per grid point (verify)
//   c         = 0.5                admissibility sqrt(lambda p eps) p <= c (verify)
//
// A preset supplies defaults for every key; explicit keys override them.

#include "hpsbl/expr.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hpsbl {

enum class Reference { Auto, Exact, Solve };

struct ExperimentConfig {
  std::string problem = "custom";
  int dim = 1;
  std::string domain = "ellipse";
  std::string b = "1";
  std::string f = "1";
  std::vector<double> eps{1e-4};
  int p_min = 1;
  int p_max = 5;
  double lambda = 1.0;
  Reference reference = Reference::Auto;
  int samples = 20;
  std::string csv = "sweep.csv";
  std::string svg;
  std::string plot = "err_balanced";
  std::uint64_t seed = 1;
  int workers = 1;
  int trials = 20;
  double c = 0.5;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  std::vector<int> degrees() const;
  Expr b_expr() const;
  Expr f_expr() const;
  /// A closed-form solution exists (1D, b = f = 1).
  bool has_exact() const;
  bool use_exact() const;

  /// Canonical "key=value" lines of everything that affects results
  /// (output names and worker count excluded).
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;
};

/// Defaults of a named preset; ConfigError("problem") for unknown names.
ExperimentConfig preset(const std::string &name);

/// Parses config text. Unknown keys, malformed values and duplicate keys
/// raise ConfigError; the result is validated.
ExperimentConfig parse_config(const std::string &text);
ExperimentConfig load_config(const std::string &path);

const char *to_string(Reference r);

} // namespace hpsbl
