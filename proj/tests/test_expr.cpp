#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "sigflow/expr.hpp"

using namespace sigflow;

namespace {

double ev(const char* s, double x, double y) {
  return parse_expression(s)->eval(x, y);
}

// Central difference with a step small enough for ~1e-8 accuracy on the
// smooth expressions below.
double numeric_diff(const ExprPtr& e, Var v, double x, double y) {
  const double h = 1e-5;
  if (v == Var::X) return (e->eval(x + h, y) - e->eval(x - h, y)) / (2.0 * h);
  return (e->eval(x, y + h) - e->eval(x, y - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("parser evaluates arithmetic with the usual precedence") {
  CHECK(ev("2 + 3*4", 0, 0) == 14.0);
  CHECK(ev("x^2 - y/2", 3, 4) == 7.0);
  CHECK(ev("-x^2", 3, 0) == -9.0);
  CHECK(ev("(x + y)^3", 1, 2) == 27.0);
  CHECK(ev("2*x^3", 2, 0) == 16.0);
  CHECK(ev("6/3/2", 0, 0) == 1.0);
  CHECK(ev("1 - 2 - 3", 0, 0) == -4.0);
  CHECK(ev("  x\t+ y ", 1, 1) == 2.0);
  CHECK(ev("2^3", 0, 0) == 8.0);
}

TEST_CASE("parser handles functions") {
  CHECK(ev("sin(x)", 0.7, 0) == doctest::Approx(std::sin(0.7)).epsilon(1e-15));
  CHECK(ev("cos(x)*exp(y)", 0.3, 0.2) ==
        doctest::Approx(std::cos(0.3) * std::exp(0.2)).epsilon(1e-15));
  CHECK(ev("sqrt(x^2 + y^2)", 3, 4) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(ev("ln(exp(x))", 1.3, 0) == doctest::Approx(1.3).epsilon(1e-12));
}

TEST_CASE("parse errors carry a sensible offset") {
  auto offset_of = [](const char* s) -> std::size_t {
    try {
      parse_expression(s);
    } catch (const ParseError& pe) {
      return pe.offset;
    }
    return std::size_t(-1);
  };
  CHECK_THROWS_AS(parse_expression(""), ParseError);
  CHECK_THROWS_AS(parse_expression("x +"), ParseError);
  CHECK_THROWS_AS(parse_expression("(x"), ParseError);
  CHECK_THROWS_AS(parse_expression("tan(x)"), ParseError);
  CHECK_THROWS_AS(parse_expression("x y"), ParseError);
  CHECK_THROWS_AS(parse_expression("x ^ y"), ParseError);
  CHECK(offset_of("x + @") <= 5);
  CHECK(offset_of("x y") >= 1);
}

TEST_CASE("evaluation domain errors") {
  CHECK_THROWS_AS(ev("ln(y)", 0, -1.0), EvalDomainError);
  CHECK_THROWS_AS(ev("sqrt(x)", -1.0, 0), EvalDomainError);
  CHECK_THROWS_AS(ev("1/y", 0, 0), EvalDomainError);
}

TEST_CASE("exact derivatives match central differences") {
  const char* exprs[] = {
      "x^2*y - 3*x*y^2 + 2",
      "sin(x*y)",
      "cos(x)^2",
      "exp(x*y/4)",
      "sqrt(x^2 + y^2 + 1)",
      "ln(x^2 + 1)",
      "x/(y + 2)",
      "(x - y)^4",
      "sin(x)*exp(y) - cos(x*y)",
  };
  std::mt19937 rng(12345);
  auto unit = [&rng] { return (double(rng() >> 8) / 16777216.0) * 2.0 - 1.0; };
  for (const char* s : exprs) {
    ExprPtr e = parse_expression(s);
    ExprPtr dx = e->diff(Var::X);
    ExprPtr dy = e->diff(Var::Y);
    for (int i = 0; i < 5; ++i) {
      double x = unit(), y = unit();
      double scale = 1.0 + std::abs(dx->eval(x, y)) + std::abs(dy->eval(x, y));
      CHECK(std::abs(dx->eval(x, y) - numeric_diff(e, Var::X, x, y)) <=
            1e-7 * scale);
      CHECK(std::abs(dy->eval(x, y) - numeric_diff(e, Var::Y, x, y)) <=
            1e-7 * scale);
    }
  }
}

TEST_CASE("second derivatives are exact too") {
  ExprPtr e = parse_expression("x^3*y^2 + sin(x)*y");
  ExprPtr exy = e->diff(Var::X)->diff(Var::Y);
  // d2/dxdy = 6 x^2 y + cos(x)
  for (double x : {-0.7, 0.0, 1.3})
    for (double y : {-2.0, 0.5}) {
      CHECK(exy->eval(x, y) ==
            doctest::Approx(6 * x * x * y + std::cos(x)).epsilon(1e-13));
    }
  CHECK(parse_expression("x^2 + x")->diff(Var::Y)->eval(3, 5) == 0.0);
}

TEST_CASE("to_string round-trips through the parser up to evaluation") {
  const char* exprs[] = {"x^2*y - 3*x*y^2 + 2", "sin(x*y)/(2 + cos(y))",
                         "-x^3 + sqrt(y^2 + 1)", "exp(-x)*ln(y + 3)"};
  for (const char* s : exprs) {
    ExprPtr e = parse_expression(s);
    ExprPtr back = parse_expression(e->to_string());
    for (double x : {-1.1, 0.4})
      for (double y : {-0.3, 1.7}) {
        CHECK(back->eval(x, y) == doctest::Approx(e->eval(x, y)).epsilon(1e-14));
      }
  }
}

TEST_CASE("swap_xy exchanges the variables") {
  ExprPtr e = parse_expression("x^2*sin(y) + 3*y");
  ExprPtr s = swap_xy(e);
  for (double x : {-0.8, 0.6})
    for (double y : {-0.2, 1.9}) {
      CHECK(s->eval(x, y) == doctest::Approx(e->eval(y, x)).epsilon(1e-15));
    }
}

TEST_CASE("smart constructors fold constants") {
  ExprPtr c = Expr::add(Expr::constant(2), Expr::constant(3));
  CHECK(c->kind == NodeKind::Constant);
  CHECK(c->value == 5.0);
  ExprPtr x = Expr::variable(Var::X);
  CHECK(Expr::mul(Expr::constant(1), x)->kind == NodeKind::Variable);
  CHECK(Expr::pow(x, 1)->kind == NodeKind::Variable);
  CHECK(Expr::add(Expr::constant(0), x)->kind == NodeKind::Variable);
}
