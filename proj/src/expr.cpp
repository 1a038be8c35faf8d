#include "hpsbl/expr.hpp"
#include "hpsbl/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace hpsbl {

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_number(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Kind::Number;
  n->value = v;
  return n;
}

NodePtr make_node(Expr::Kind k, NodePtr lhs, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = k;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

struct FuncName {
  const char *name;
  Expr::Func func;
};

constexpr FuncName kFunctions[] = {
    {"sin", Expr::Func::Sin},   {"cos", Expr::Func::Cos},   {"exp", Expr::Func::Exp},
    {"log", Expr::Func::Log},   {"sqrt", Expr::Func::Sqrt}, {"abs", Expr::Func::Abs},
};

const char *func_name(Expr::Func f) {
  for (const auto &fn : kFunctions)
    if (fn.func == f)
      return fn.name;
  return "?";
}

// Binding powers. Unary minus sits between * / and ^.
constexpr int kBpAdd = 10;
constexpr int kBpMul = 20;
constexpr int kBpUnary = 30;
constexpr int kBpPow = 40;

class Parser {
public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ParseError("empty expression", pos_);
    NodePtr e = expression(0);
    skip_ws();
    if (pos_ < src_.size())
      throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  // Pratt loop: parse a prefix term, then fold infix operators whose left
  // binding power exceeds min_bp.
  NodePtr expression(int min_bp) {
    NodePtr lhs = prefix();
    for (;;) {
      skip_ws();
      if (pos_ >= src_.size())
        break;
      const char c = src_[pos_];
      int lbp, rbp;
      Expr::Kind kind;
      switch (c) {
      case '+': lbp = kBpAdd, rbp = kBpAdd + 1, kind = Expr::Kind::Add; break;
      case '-': lbp = kBpAdd, rbp = kBpAdd + 1, kind = Expr::Kind::Sub; break;
      case '*': lbp = kBpMul, rbp = kBpMul + 1, kind = Expr::Kind::Mul; break;
      case '/': lbp = kBpMul, rbp = kBpMul + 1, kind = Expr::Kind::Div; break;
      case '^': lbp = kBpPow, rbp = kBpPow, kind = Expr::Kind::Pow; break; // right assoc
      default: return lhs;
      }
      if (lbp <= min_bp)
        break;
      ++pos_;
      NodePtr rhs = expression(rbp - (kind == Expr::Kind::Pow ? 1 : 0));
      lhs = make_node(kind, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  NodePtr prefix() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '-') {
      ++pos_;
      return make_node(Expr::Kind::Neg, expression(kBpUnary));
    }
    if (c == '(') {
      ++pos_;
      NodePtr inner = expression(0);
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= src_.size() || src_[pos_] != c)
      throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < src_.size() && (src_[q] == '+' || src_[q] == '-'))
        ++q;
      if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
        pos_ = q;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_)
      throw ParseError("malformed number", start);
    return make_number(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x")
      return make_node(Expr::Kind::VarX, nullptr);
    if (name == "y")
      return make_node(Expr::Kind::VarY, nullptr);
    if (name == "pi")
      return make_number(std::numbers::pi);
    for (const auto &fn : kFunctions) {
      if (name == fn.name) {
        expect('(');
        NodePtr arg = expression(0);
        expect(')');
        auto n = std::make_shared<Expr::Node>();
        n->kind = Expr::Kind::Call;
        n->func = fn.func;
        n->lhs = std::move(arg);
        return n;
      }
    }
    throw UnknownIdentifierError(std::string(name), start);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Expr::Node &n, std::string &out) {
  switch (n.kind) {
  case Expr::Kind::Number:
    out += format_number(n.value);
    return;
  case Expr::Kind::VarX: out += 'x'; return;
  case Expr::Kind::VarY: out += 'y'; return;
  case Expr::Kind::Neg:
    out += "(-";
    print(*n.lhs, out);
    out += ')';
    return;
  case Expr::Kind::Call:
    out += func_name(n.func);
    out += '(';
    print(*n.lhs, out);
    out += ')';
    return;
  default: break;
  }
  char op = '+';
  switch (n.kind) {
  case Expr::Kind::Sub: op = '-'; break;
  case Expr::Kind::Mul: op = '*'; break;
  case Expr::Kind::Div: op = '/'; break;
  case Expr::Kind::Pow: op = '^'; break;
  default: break;
  }
  out += '(';
  print(*n.lhs, out);
  out += ' ';
  out += op;
  out += ' ';
  print(*n.rhs, out);
  out += ')';
}

std::string print(const Expr::Node &n) {
  std::string s;
  print(n, s);
  return s;
}

double eval_node(const Expr::Node &n, double x, const std::optional<double> &y) {
  switch (n.kind) {
  case Expr::Kind::Number: return n.value;
  case Expr::Kind::VarX: return x;
  case Expr::Kind::VarY:
    if (!y)
      throw InputError("expression references y but no y was supplied");
    return *y;
  case Expr::Kind::Neg: return -eval_node(*n.lhs, x, y);
  case Expr::Kind::Add: return eval_node(*n.lhs, x, y) + eval_node(*n.rhs, x, y);
  case Expr::Kind::Sub: return eval_node(*n.lhs, x, y) - eval_node(*n.rhs, x, y);
  case Expr::Kind::Mul: return eval_node(*n.lhs, x, y) * eval_node(*n.rhs, x, y);
  case Expr::Kind::Div: {
    const double num = eval_node(*n.lhs, x, y);
    const double den = eval_node(*n.rhs, x, y);
    if (den == 0.0)
      throw DomainError("division by zero", print(n));
    return num / den;
  }
  case Expr::Kind::Pow: {
    const double base = eval_node(*n.lhs, x, y);
    const double ex = eval_node(*n.rhs, x, y);
    if (base < 0.0 && std::floor(ex) != ex)
      throw DomainError("negative base with non-integer exponent", print(n));
    if (base == 0.0 && ex < 0.0)
      throw DomainError("division by zero", print(n));
    return std::pow(base, ex);
  }
  case Expr::Kind::Call: {
    const double a = eval_node(*n.lhs, x, y);
    switch (n.func) {
    case Expr::Func::Sin: return std::sin(a);
    case Expr::Func::Cos: return std::cos(a);
    case Expr::Func::Exp: return std::exp(a);
    case Expr::Func::Abs: return std::abs(a);
    case Expr::Func::Log:
      if (!(a > 0.0))
        throw DomainError("log of nonpositive value", print(n));
      return std::log(a);
    case Expr::Func::Sqrt:
      if (a < 0.0)
        throw DomainError("sqrt of negative value", print(n));
      return std::sqrt(a);
    }
  }
  }
  return 0.0;
}

bool node_uses_y(const Expr::Node &n) {
  if (n.kind == Expr::Kind::VarY)
    return true;
  return (n.lhs && node_uses_y(*n.lhs)) || (n.rhs && node_uses_y(*n.rhs));
}

} // namespace

Expr::Expr() : root_(make_number(0.0)) {}

Expr Expr::parse(std::string_view src) { return Expr(Parser(src).parse()); }

Expr Expr::constant(double c) { return Expr(make_number(c)); }

double Expr::eval(double x, std::optional<double> y) const { return eval_node(*root_, x, y); }

bool Expr::uses_y() const { return node_uses_y(*root_); }

std::string Expr::to_string() const { return print(*root_); }

bool structurally_equal(const Expr::Node &a, const Expr::Node &b) {
  if (a.kind != b.kind)
    return false;
  if (a.kind == Expr::Kind::Number)
    return a.value == b.value;
  if (a.kind == Expr::Kind::Call && a.func != b.func)
    return false;
  if (bool(a.lhs) != bool(b.lhs) || bool(a.rhs) != bool(b.rhs))
    return false;
  return (!a.lhs || structurally_equal(*a.lhs, *b.lhs)) &&
         (!a.rhs || structurally_equal(*a.rhs, *b.rhs));
}

bool operator==(const Expr &a, const Expr &b) { return structurally_equal(*a.root_, *b.root_); }

double check_positivity(const Expr &e, const Eigen::Matrix2Xd &points) {
  double lo = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.cols(); ++i)
    lo = std::min(lo, e.eval(points(0, i), points(1, i)));
  return lo;
}

double check_positivity(const Expr &e, const std::vector<double> &points) {
  double lo = std::numeric_limits<double>::infinity();
  for (double x : points)
    lo = std::min(lo, e.eval(x));
  return lo;
}

std::vector<double> sample_interval(double a, double b, int n) {
  std::vector<double> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    pts[static_cast<std::size_t>(i)] = n == 1 ? 0.5 * (a + b) : a + (b - a) * i / (n - 1);
  return pts;
}

Eigen::Matrix2Xd sample_ellipse(double a, double b, int n) {
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  Eigen::Matrix2Xd pts(2, n);
  for (int i = 0; i < n; ++i) {
    const double r = std::sqrt((i + 0.5) / n);
    const double th = i * golden;
    pts(0, i) = a * r * std::cos(th);
    pts(1, i) = b * r * std::sin(th);
  }
  return pts;
}

} // namespace hpsbl
