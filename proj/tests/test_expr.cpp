#include "doctest.h"

#include "hpsbl/errors.hpp"
#include "hpsbl/expr.hpp"

#include <cmath>
#include <functional>
#include <random>

using namespace hpsbl;

TEST_CASE("parse and evaluate") {
  CHECK(Expr::parse("1/(x+1/2)").eval(0.0) == doctest::Approx(2.0));
  CHECK(Expr::parse("exp(-x/0.1)+2*x").eval(0.0) == doctest::Approx(1.0));
  CHECK(Expr::parse("2^3^2").eval(0.0) == doctest::Approx(512.0));
  CHECK(Expr::parse("1").eval(0.37, 0.2) == 1.0);
  CHECK(Expr::parse("x*y").eval(2.0, 3.0) == doctest::Approx(6.0));
  CHECK(Expr::parse("-2^2").eval(0.0) == doctest::Approx(-4.0));
  CHECK(Expr::parse("2^-1").eval(0.0) == doctest::Approx(0.5));
  CHECK(Expr::parse("1-2-3").eval(0.0) == doctest::Approx(-4.0));
  CHECK(Expr::parse("8/4/2").eval(0.0) == doctest::Approx(1.0));
  CHECK(Expr::parse("-x*3").eval(2.0) == doctest::Approx(-6.0));
  CHECK(Expr::parse(" 1.5e-1 + 2E2 ").eval(0.0) == doctest::Approx(200.15));
  CHECK(Expr::parse("abs(sin(pi/2)) + cos(0) + log(exp(2)) + sqrt(4)").eval(0.0) ==
        doctest::Approx(6.0));
}

TEST_CASE("parse errors carry offsets and names") {
  try {
    Expr::parse("1+*2");
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.offset() == 2);
  }
  try {
    Expr::parse("(x+1");
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.offset() == 4);
  }
  try {
    Expr::parse("2*foo(x)");
    FAIL("expected UnknownIdentifierError");
  } catch (const UnknownIdentifierError &e) {
    CHECK(e.identifier() == "foo");
  }
  CHECK_THROWS_AS(Expr::parse(""), ParseError);
  CHECK_THROWS_AS(Expr::parse("1 2"), ParseError);
}

TEST_CASE("domain errors name the offending sub-expression") {
  try {
    Expr::parse("1 + sqrt(x)").eval(-1.0);
    FAIL("expected DomainError");
  } catch (const DomainError &e) {
    CHECK(e.subexpression() == "sqrt(x)");
  }
  CHECK_THROWS_AS(Expr::parse("log(x)").eval(0.0), DomainError);
  CHECK_THROWS_AS(Expr::parse("1/x").eval(0.0), DomainError);
  CHECK_THROWS_AS(Expr::parse("x+y").eval(1.0), InputError);
  CHECK(Expr::parse("x+y").uses_y());
  CHECK_FALSE(Expr::parse("x+1").uses_y());
}

TEST_CASE("print / parse round trip") {
  const char *corpus[] = {
      "1",          "x",           "y",           "-x",          "x+1",        "x-1-2",
      "x*y/3",      "2^3^2",       "-2^2",        "(-2)^2",      "1/(x+1/2)",  "exp(-x/0.1)+2*x",
      "sin(x)*cos(y)", "sqrt(abs(x-0.3))", "log(1+x^2)", "x^-1",   "-(-(x))",    "1e-8*x",
      "3.141592653589793*x", "(x+y)*(x-y)", "x/(y/(x/y))", "2*-3",  "exp(sin(cos(x)))", "1-(2-(3-x))",
      "0.1+0.2",    "x^2^-0.5",    "-x^y",        "abs(-x)",     "1/3",        "123456789.125*y",
      "sqrt(x)*sqrt(y)/(1+x*y)", "((((x))))",
  };
  for (const char *src : corpus) {
    const Expr e = Expr::parse(src);
    const Expr again = Expr::parse(e.to_string());
    CHECK_MESSAGE(e == again, src);
    CHECK(again.to_string() == e.to_string());
  }
}

namespace {

// Random expression together with an independently computed value: each
// table entry renders its operands as text and applies the matching std
// function to their values.
struct Sample {
  std::string text;
  double value;
};

struct Generator {
  std::mt19937_64 rng;
  double x, y;

  Sample leaf() {
    std::uniform_int_distribution<int> pick(0, 2);
    switch (pick(rng)) {
    case 0: return {"x", x};
    case 1: return {"y", y};
    default: {
      std::uniform_int_distribution<int> num(1, 99);
      const int k = num(rng);
      const std::string s = std::to_string(k / 10) + "." + std::to_string(k % 10);
      return {s, std::stod(s)};
    }
    }
  }

  Sample gen(int depth) {
    if (depth == 0)
      return leaf();
    using Rule = std::function<Sample(Generator &, int)>;
    static const std::vector<Rule> table = {
        [](Generator &g, int d) { auto a = g.gen(d - 1), b = g.gen(d - 1);
          return Sample{"(" + a.text + ")+(" + b.text + ")", a.value + b.value}; },
        [](Generator &g, int d) { auto a = g.gen(d - 1), b = g.gen(d - 1);
          return Sample{"(" + a.text + ")-(" + b.text + ")", a.value - b.value}; },
        [](Generator &g, int d) { auto a = g.gen(d - 1), b = g.gen(d - 1);
          return Sample{"(" + a.text + ")*(" + b.text + ")", a.value * b.value}; },
        [](Generator &g, int d) { auto a = g.gen(d - 1), b = g.gen(d - 1);
          return Sample{"(" + a.text + ")/(2+sin(" + b.text + "))", a.value / (2 + std::sin(b.value))}; },
        [](Generator &g, int d) { auto a = g.gen(d - 1);
          return Sample{"abs(" + a.text + ")^1.5", std::pow(std::abs(a.value), 1.5)}; },
        [](Generator &g, int d) { auto a = g.gen(d - 1);
          return Sample{"-(" + a.text + ")", -a.value}; },
        [](Generator &g, int d) { auto a = g.gen(d - 1);
          return Sample{"cos(" + a.text + ")", std::cos(a.value)}; },
        [](Generator &g, int d) { auto a = g.gen(d - 1);
          return Sample{"exp(sin(" + a.text + "))", std::exp(std::sin(a.value))}; },
        [](Generator &g, int d) { auto a = g.gen(d - 1);
          return Sample{"log(1+abs(" + a.text + "))", std::log(1 + std::abs(a.value))}; },
        [](Generator &g, int d) { auto a = g.gen(d - 1);
          return Sample{"sqrt(abs(" + a.text + "))", std::sqrt(std::abs(a.value))}; },
    };
    std::uniform_int_distribution<std::size_t> pick(0, table.size() - 1);
    return table[pick(rng)](*this, depth);
  }
};

} // namespace

TEST_CASE("eval agrees with a table-driven reference evaluator") {
  Generator g{std::mt19937_64(2024), 0.0, 0.0};
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::uniform_int_distribution<int> depth(1, 4);
  for (int i = 0; i < 1000; ++i) {
    g.x = coord(g.rng);
    g.y = coord(g.rng);
    const Sample s = g.gen(depth(g.rng));
    const double v = Expr::parse(s.text).eval(g.x, g.y);
    CHECK_MESSAGE(std::abs(v - s.value) <= 1e-12 * std::max(1.0, std::abs(s.value)), s.text);
  }
}

TEST_CASE("check_positivity") {
  CHECK(check_positivity(Expr::parse("1"), sample_interval(0, 1, 100)) == 1.0);
  CHECK(check_positivity(Expr::parse("x-0.5"), sample_interval(0, 1, 1001)) <= -0.499);
  CHECK(check_positivity(Expr::parse("1+0*x"), sample_ellipse(2, 1, 1000)) == 1.0);
  const auto pts = sample_ellipse(2.0, 1.0, 500);
  for (Eigen::Index i = 0; i < pts.cols(); ++i)
    CHECK(std::pow(pts(0, i) / 2, 2) + pts(1, i) * pts(1, i) <= 1.0);
}
