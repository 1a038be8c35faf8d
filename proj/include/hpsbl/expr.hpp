#pragma once

// Coefficient mini-language: literals, variables x and y, + - * / ^,
// unary minus, sin cos exp log sqrt abs, parentheses.
//
// Precedence (tightest first): ^, unary -, * /, + -.  ^ is right-associative,
// everything else left-associative, so -2^2 == -4 and 2^3^2 == 512.

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hpsbl {

class Expr {
public:
  enum class Kind { Number, VarX, VarY, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Func { Sin, Cos, Exp, Log, Sqrt, Abs };

  struct Node {
    Kind kind;
    double value = 0.0;
    Func func = Func::Sin;
    std::shared_ptr<const Node> lhs; // also the operand of Neg / Call
    std::shared_ptr<const Node> rhs;
  };

  /// The constant 0 expression.
  Expr();

  static Expr parse(std::string_view src);
  static Expr constant(double c);

  /// Throws DomainError on log/sqrt/division domain violations and
  /// InputError when y is referenced but not supplied.
  double eval(double x, std::optional<double> y = std::nullopt) const;
  double operator()(double x) const { return eval(x); }
  double operator()(double x, double y) const { return eval(x, y); }

  bool uses_y() const;
  /// Fully parenthesised, re-parseable text.
  std::string to_string() const;

  const Node &root() const { return *root_; }

  friend bool operator==(const Expr &a, const Expr &b);

private:
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

bool structurally_equal(const Expr::Node &a, const Expr::Node &b);

/// Minimum of e over `points` (columns are (x[,y]) samples).
double check_positivity(const Expr &e, const Eigen::Matrix2Xd &points);
double check_positivity(const Expr &e, const std::vector<double> &points);

/// n equispaced points on [a,b], endpoints included.
std::vector<double> sample_interval(double a, double b, int n);
/// n quasi-uniform points filling the ellipse (x/a)^2+(y/b)^2 <= 1
/// (sunflower / golden-angle spiral).
Eigen::Matrix2Xd sample_ellipse(double a, double b, int n);

inline constexpr int kDefaultPositivitySamples = 10000;

} // namespace hpsbl
