#include "hpsbl/config.hpp"
#include "hpsbl/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace hpsbl {

namespace {

const std::set<std::string> kProblems{"preset1d-paper", "preset1d-const", "preset2d-ellipse", "preset2d-disk",
                                      "custom"};

std::string trim(const std::string &s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos)
    return {};
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

double to_double(const std::string &field, const std::string &v) {
  const char *s = v.c_str();
  char *end = nullptr;
  errno = 0;
  const double x = std::strtod(s, &end);
  if (end == s || *end != '\0' || errno == ERANGE || !std::isfinite(x))
    throw ConfigError(field, "'" + v + "' is not a number");
  return x;
}

long long to_integer(const std::string &field, const std::string &v) {
  const char *s = v.c_str();
  char *end = nullptr;
  errno = 0;
  const long long x = std::strtoll(s, &end, 10);
  if (end == s || *end != '\0' || errno == ERANGE)
    throw ConfigError(field, "'" + v + "' is not an integer");
  return x;
}

int to_int(const std::string &field, const std::string &v) {
  const long long x = to_integer(field, v);
  if (x < -1000000 || x > 1000000)
    throw ConfigError(field, "'" + v + "' is out of range");
  return static_cast<int>(x);
}

std::vector<double> to_list(const std::string &field, const std::string &v) {
  std::string s = v;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  for (std::string tok; in >> tok;)
    out.push_back(to_double(field, tok));
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Expr parse_field(const std::string &field, const std::string &src) {
  try {
    return Expr::parse(src);
  } catch (const InputError &e) {
    throw ConfigError(field, e.what());
  }
}

} // namespace

const char *to_string(Reference r) {
  switch (r) {
  case Reference::Auto:
    return "auto";
  case Reference::Exact:
    return "exact";
  case Reference::Solve:
    return "solve";
  }
  return "?";
}

std::vector<int> ExperimentConfig::degrees() const {
  std::vector<int> out;
  for (int p = p_min; p <= p_max; ++p)
    out.push_back(p);
  return out;
}

Expr ExperimentConfig::b_expr() const { return parse_field("b", b); }
Expr ExperimentConfig::f_expr() const { return parse_field("f", f); }

bool ExperimentConfig::has_exact() const {
  return dim == 1 && b_expr() == Expr::constant(1.0) && f_expr() == Expr::constant(1.0);
}

bool ExperimentConfig::use_exact() const {
  return reference == Reference::Exact || (reference == Reference::Auto && has_exact());
}

void ExperimentConfig::validate() const {
  if (!kProblems.count(problem))
    throw ConfigError("problem", "unknown problem '" + problem + "'");
  if (dim != 1 && dim != 2)
    throw ConfigError("dim", "must be 1 or 2");
  if (dim == 2 && domain != "disk" && domain != "ellipse")
    throw ConfigError("domain", "must be disk or ellipse");

  for (const auto &[field, src] : {std::pair{"b", &b}, std::pair{"f", &f}}) {
    const Expr e = parse_field(field, *src);
    if (dim == 1 && e.uses_y())
      throw ConfigError(field, "y is not available in 1D");
  }
  try {
    const Expr be = b_expr();
    const double m = dim == 1 ? check_positivity(be, sample_interval(0.0, 1.0, kDefaultPositivitySamples))
                              : check_positivity(be, sample_ellipse(domain == "disk" ? 1.0 : 2.0, 1.0,
                                                                    kDefaultPositivitySamples));
    if (!(m > 0.0))
      throw ConfigError("b", "not positive on the domain (sampled minimum " + fmt(m) + ")");
  } catch (const DomainError &e) {
    throw ConfigError("b", e.what());
  }

  if (eps.empty())
    throw ConfigError("eps", "empty list");
  for (double e : eps)
    if (!(e > 0.0 && e <= 1.0))
      throw ConfigError("eps", "value " + fmt(e) + " outside (0,1]");
  if (p_min < 1)
    throw ConfigError("p_min", "must be >= 1");
  if (p_max < p_min)
    throw ConfigError("p_max", "must be >= p_min");
  if (p_max > 30)
    throw ConfigError("p_max", "must be <= 30");
  if (!(lambda > 0.0))
    throw ConfigError("lambda", "must be positive");
  if (reference == Reference::Exact && !has_exact())
    throw ConfigError("reference", "no closed-form solution for this problem");
  if (samples < 1)
    throw ConfigError("samples", "must be >= 1");
  if (csv.empty())
    throw ConfigError("csv", "empty file name");
  if (plot.empty())
    throw ConfigError("plot", "empty column name");
  if (workers < 1)
    throw ConfigError("workers", "must be >= 1");
  if (trials < 1)
    throw ConfigError("trials", "must be >= 1");
  if (!(c > 0.0))
    throw ConfigError("c", "must be positive");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  out << "b=" << b << '\n' << "c=" << fmt(c) << '\n' << "dim=" << dim << '\n';
  if (dim == 2)
    out << "domain=" << domain << '\n';
  out << "eps=";
  for (std::size_t i = 0; i < eps.size(); ++i)
    out << (i ? "," : "") << fmt(eps[i]);
  out << '\n'
      << "f=" << f << '\n'
      << "lambda=" << fmt(lambda) << '\n'
      << "p_max=" << p_max << '\n'
      << "p_min=" << p_min << '\n'
      << "problem=" << problem << '\n'
      << "reference=" << (use_exact() ? "exact" : "solve") << '\n'
      << "samples=" << samples << '\n'
      << "seed=" << seed << '\n'
      << "trials=" << trials << '\n';
  return out.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig preset(const std::string &name) {
  if (!kProblems.count(name))
    throw ConfigError("problem", "unknown problem '" + name + "'");
  ExperimentConfig c;
  c.problem = name;
  if (name == "preset1d-paper") {
    c.f = "1/(x+1/2)";
    c.eps = {1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    c.p_max = 5;
    c.svg = "sweep.svg";
  } else if (name == "preset1d-const") {
    c.eps = {1e-4, 1e-6, 1e-8};
    c.p_max = 10;
    c.reference = Reference::Exact;
    c.svg = "sweep.svg";
  } else if (name == "preset2d-ellipse" || name == "preset2d-disk") {
    c.dim = 2;
    c.domain = name == "preset2d-disk" ? "disk" : "ellipse";
    c.eps = {1e-3, 1e-4};
    c.p_max = 7;
    c.svg = "sweep.svg";
    c.plot = "err_max";
  }
  return c;
}

ExperimentConfig parse_config(const std::string &text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, "line " + std::to_string(lineno) + " has no '='");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("", "line " + std::to_string(lineno) + " has an empty key");
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
      throw ConfigError(key, "duplicate key on line " + std::to_string(lineno));
  }

  ExperimentConfig c = preset(kv.count("problem") ? kv.at("problem") : "custom");
  for (const auto &[key, v] : kv) {
    if (key == "problem") {
    } else if (key == "dim") {
      const int d = to_int(key, v);
      if (c.problem != "custom" && d != c.dim)
        throw ConfigError(key, c.problem + " is " + std::to_string(c.dim) + "D");
      c.dim = d;
    } else if (key == "domain") {
      if (c.problem != "custom" && v != c.domain)
        throw ConfigError(key, c.problem + " fixes the domain");
      c.domain = v;
    } else if (key == "b") {
      c.b = v;
    } else if (key == "f") {
      c.f = v;
    } else if (key == "eps") {
      c.eps = to_list(key, v);
    } else if (key == "p_min") {
      c.p_min = to_int(key, v);
    } else if (key == "p_max") {
      c.p_max = to_int(key, v);
    } else if (key == "lambda") {
      c.lambda = to_double(key, v);
    } else if (key == "reference") {
      if (v == "auto")
        c.reference = Reference::Auto;
      else if (v == "exact")
        c.reference = Reference::Exact;
      else if (v == "solve")
        c.reference = Reference::Solve;
      else
        throw ConfigError(key, "must be auto, exact or solve");
    } else if (key == "samples") {
      c.samples = to_int(key, v);
    } else if (key == "csv") {
      c.csv = v;
    } else if (key == "svg") {
      c.svg = v;
    } else if (key == "plot") {
      c.plot = v;
    } else if (key == "seed") {
      const long long s = to_integer(key, v);
      if (s < 0)
        throw ConfigError(key, "must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "workers") {
      c.workers = to_int(key, v);
    } else if (key == "trials") {
      c.trials = to_int(key, v);
    } else if (key == "c") {
      c.c = to_double(key, v);
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("--config", "cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

} // namespace hpsbl
