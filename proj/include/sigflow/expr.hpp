#pragma once

// Symbolic expressions in the two surface coordinates x, y.
// Immutable shared trees; differentiation is exact (rule-based), never numeric.

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sigflow {

enum class Var { X, Y };

enum class NodeKind {
  Constant,
  Variable,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // integer exponent only
  Neg,
  Sin,
  Cos,
  Exp,
  Sqrt,
  Ln,
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Thrown by parse_expression; offset is a byte offset into the input text.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t offset_)
      : std::runtime_error(what), offset(offset_) {}
  std::size_t offset;
};

// Thrown by eval on ln of a non-positive value, sqrt of a negative value,
// division by zero, or 0 raised to a negative power.
struct EvalDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Expr {
 public:
  NodeKind kind;
  double value = 0.0;   // Constant
  Var var = Var::X;     // Variable
  int exponent = 0;     // Pow
  ExprPtr a, b;         // children; b unused for unary nodes

  double eval(double x, double y) const;
  ExprPtr diff(Var v) const;
  std::string to_string() const;

  // Smart constructors fold constants and drop trivial identities
  // (0+e, 1*e, e^1, ...). Only evaluation equivalence is promised.
  static ExprPtr constant(double v);
  static ExprPtr variable(Var v);
  static ExprPtr add(ExprPtr l, ExprPtr r);
  static ExprPtr sub(ExprPtr l, ExprPtr r);
  static ExprPtr mul(ExprPtr l, ExprPtr r);
  static ExprPtr div(ExprPtr l, ExprPtr r);
  static ExprPtr pow(ExprPtr base, int n);
  static ExprPtr neg(ExprPtr e);
  static ExprPtr fun(NodeKind k, ExprPtr arg);
};

// Exchange the roles of x and y throughout (used to move work into the
// inverse-slope chart, where the vertical direction becomes slope zero).
ExprPtr swap_xy(const ExprPtr& e);

// Grammar (documented in the README):
//   expr   := term { ('+'|'-') term }
//   term   := factor { ('*'|'/') factor }
//   factor := base [ '^' int ]
//   base   := number | 'x' | 'y' | '(' expr ')' | '-' factor | func '(' expr ')'
//   func   := sin | cos | exp | sqrt | ln
ExprPtr parse_expression(std::string_view text);

}  // namespace sigflow
