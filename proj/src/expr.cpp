#include "sigflow/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace sigflow {

namespace {

ExprPtr make_node(NodeKind k) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  return e;
}

bool is_const(const ExprPtr& e, double v) {
  return e->kind == NodeKind::Constant && e->value == v;
}

double ipow(double base, int n) {
  if (n == 0) return 1.0;
  if (n < 0) {
    if (base == 0.0) throw EvalDomainError("0 raised to a negative power");
    return 1.0 / ipow(base, -n);
  }
  double acc = 1.0, b = base;
  unsigned m = static_cast<unsigned>(n);
  while (m) {
    if (m & 1u) acc *= b;
    b *= b;
    m >>= 1u;
  }
  return acc;
}

}  // namespace

ExprPtr Expr::constant(double v) {
  auto e = make_node(NodeKind::Constant);
  std::const_pointer_cast<Expr>(e)->value = v;
  return e;
}

ExprPtr Expr::variable(Var v) {
  auto e = make_node(NodeKind::Variable);
  std::const_pointer_cast<Expr>(e)->var = v;
  return e;
}

ExprPtr Expr::add(ExprPtr l, ExprPtr r) {
  if (l->kind == NodeKind::Constant && r->kind == NodeKind::Constant)
    return constant(l->value + r->value);
  if (is_const(l, 0.0)) return r;
  if (is_const(r, 0.0)) return l;
  auto e = make_node(NodeKind::Add);
  auto m = std::const_pointer_cast<Expr>(e);
  m->a = std::move(l);
  m->b = std::move(r);
  return e;
}

ExprPtr Expr::sub(ExprPtr l, ExprPtr r) {
  if (l->kind == NodeKind::Constant && r->kind == NodeKind::Constant)
    return constant(l->value - r->value);
  if (is_const(r, 0.0)) return l;
  if (is_const(l, 0.0)) return neg(std::move(r));
  auto e = make_node(NodeKind::Sub);
  auto m = std::const_pointer_cast<Expr>(e);
  m->a = std::move(l);
  m->b = std::move(r);
  return e;
}

ExprPtr Expr::mul(ExprPtr l, ExprPtr r) {
  if (l->kind == NodeKind::Constant && r->kind == NodeKind::Constant)
    return constant(l->value * r->value);
  if (is_const(l, 0.0) || is_const(r, 0.0)) return constant(0.0);
  if (is_const(l, 1.0)) return r;
  if (is_const(r, 1.0)) return l;
  if (is_const(l, -1.0)) return neg(std::move(r));
  if (is_const(r, -1.0)) return neg(std::move(l));
  auto e = make_node(NodeKind::Mul);
  auto m = std::const_pointer_cast<Expr>(e);
  m->a = std::move(l);
  m->b = std::move(r);
  return e;
}

ExprPtr Expr::div(ExprPtr l, ExprPtr r) {
  if (is_const(r, 1.0)) return l;
  if (is_const(l, 0.0) && r->kind != NodeKind::Constant) return constant(0.0);
  if (l->kind == NodeKind::Constant && r->kind == NodeKind::Constant &&
      r->value != 0.0)
    return constant(l->value / r->value);
  auto e = make_node(NodeKind::Div);
  auto m = std::const_pointer_cast<Expr>(e);
  m->a = std::move(l);
  m->b = std::move(r);
  return e;
}

ExprPtr Expr::pow(ExprPtr base, int n) {
  if (n == 0) return constant(1.0);
  if (n == 1) return base;
  if (base->kind == NodeKind::Constant && !(base->value == 0.0 && n < 0))
    return constant(ipow(base->value, n));
  auto e = make_node(NodeKind::Pow);
  auto m = std::const_pointer_cast<Expr>(e);
  m->a = std::move(base);
  m->exponent = n;
  return e;
}

ExprPtr Expr::neg(ExprPtr e) {
  if (e->kind == NodeKind::Constant) return constant(-e->value);
  if (e->kind == NodeKind::Neg) return e->a;
  auto n = make_node(NodeKind::Neg);
  std::const_pointer_cast<Expr>(n)->a = std::move(e);
  return n;
}

ExprPtr Expr::fun(NodeKind k, ExprPtr arg) {
  auto e = make_node(k);
  std::const_pointer_cast<Expr>(e)->a = std::move(arg);
  return e;
}

double Expr::eval(double x, double y) const {
  switch (kind) {
    case NodeKind::Constant: return value;
    case NodeKind::Variable: return var == Var::X ? x : y;
    case NodeKind::Add: return a->eval(x, y) + b->eval(x, y);
    case NodeKind::Sub: return a->eval(x, y) - b->eval(x, y);
    case NodeKind::Mul: return a->eval(x, y) * b->eval(x, y);
    case NodeKind::Div: {
      double den = b->eval(x, y);
      if (den == 0.0) throw EvalDomainError("division by zero");
      return a->eval(x, y) / den;
    }
    case NodeKind::Pow: return ipow(a->eval(x, y), exponent);
    case NodeKind::Neg: return -a->eval(x, y);
    case NodeKind::Sin: return std::sin(a->eval(x, y));
    case NodeKind::Cos: return std::cos(a->eval(x, y));
    case NodeKind::Exp: return std::exp(a->eval(x, y));
    case NodeKind::Sqrt: {
      double v = a->eval(x, y);
      if (v < 0.0) throw EvalDomainError("sqrt of a negative value");
      return std::sqrt(v);
    }
    case NodeKind::Ln: {
      double v = a->eval(x, y);
      if (v <= 0.0) throw EvalDomainError("ln of a non-positive value");
      return std::log(v);
    }
  }
  throw std::logic_error("corrupt expression node");
}

ExprPtr Expr::diff(Var v) const {
  switch (kind) {
    case NodeKind::Constant: return constant(0.0);
    case NodeKind::Variable: return constant(var == v ? 1.0 : 0.0);
    case NodeKind::Add: return add(a->diff(v), b->diff(v));
    case NodeKind::Sub: return sub(a->diff(v), b->diff(v));
    case NodeKind::Mul:
      return add(mul(a->diff(v), b), mul(a, b->diff(v)));
    case NodeKind::Div:
      // (a/b)' = (a'b - ab') / b^2
      return div(sub(mul(a->diff(v), b), mul(a, b->diff(v))), pow(b, 2));
    case NodeKind::Pow:
      // (a^n)' = n a^(n-1) a'
      return mul(mul(constant(exponent), pow(a, exponent - 1)), a->diff(v));
    case NodeKind::Neg: return neg(a->diff(v));
    case NodeKind::Sin: return mul(fun(NodeKind::Cos, a), a->diff(v));
    case NodeKind::Cos: return neg(mul(fun(NodeKind::Sin, a), a->diff(v)));
    case NodeKind::Exp: return mul(fun(NodeKind::Exp, a), a->diff(v));
    case NodeKind::Sqrt:
      // (sqrt a)' = a' / (2 sqrt a)
      return div(a->diff(v), mul(constant(2.0), fun(NodeKind::Sqrt, a)));
    case NodeKind::Ln: return div(a->diff(v), a);
  }
  throw std::logic_error("corrupt expression node");
}

namespace {

const char* fun_name(NodeKind k) {
  switch (k) {
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Exp: return "exp";
    case NodeKind::Sqrt: return "sqrt";
    case NodeKind::Ln: return "ln";
    default: return "?";
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string Expr::to_string() const {
  switch (kind) {
    case NodeKind::Constant:
      return value < 0.0 ? "(" + fmt_double(value) + ")" : fmt_double(value);
    case NodeKind::Variable: return var == Var::X ? "x" : "y";
    case NodeKind::Add: return "(" + a->to_string() + " + " + b->to_string() + ")";
    case NodeKind::Sub: return "(" + a->to_string() + " - " + b->to_string() + ")";
    case NodeKind::Mul: return "(" + a->to_string() + " * " + b->to_string() + ")";
    case NodeKind::Div: return "(" + a->to_string() + " / " + b->to_string() + ")";
    case NodeKind::Pow:
      return a->to_string() + "^" +
             (exponent < 0 ? "(" + std::to_string(exponent) + ")"
                           : std::to_string(exponent));
    case NodeKind::Neg: return "(-" + a->to_string() + ")";
    default: return std::string(fun_name(kind)) + "(" + a->to_string() + ")";
  }
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExprPtr run() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("empty expression", 0);
    ExprPtr e = parse_expr();
    skip_ws();
    if (pos_ < text_.size())
      throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    for (;;) {
      if (eat('+'))
        e = Expr::add(e, parse_term());
      else if (eat('-'))
        e = Expr::sub(e, parse_term());
      else
        return e;
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    for (;;) {
      if (eat('*'))
        e = Expr::mul(e, parse_factor());
      else if (eat('/'))
        e = Expr::div(e, parse_factor());
      else
        return e;
    }
  }

  ExprPtr parse_factor() {
    ExprPtr base = parse_base();
    if (eat('^')) return Expr::pow(base, parse_int_exponent());
    return base;
  }

  int parse_int_exponent() {
    skip_ws();
    std::size_t start = pos_;
    bool negative = false;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
      negative = text_[pos_] == '-';
      ++pos_;
    }
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      throw ParseError("integer exponent required after '^'", start);
    long v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + (text_[pos_] - '0');
      if (v > 1000000) throw ParseError("exponent too large", start);
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
      throw ParseError("integer exponent required after '^'", start);
    return static_cast<int>(negative ? -v : v);
  }

  ExprPtr parse_base() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
    char c = text_[pos_];
    if (c == '(') {
      std::size_t open = pos_;
      ++pos_;
      ExprPtr e = parse_expr();
      if (!eat(')')) throw ParseError("expected ')' for '(' here", open);
      return e;
    }
    if (c == '-') {
      ++pos_;
      return Expr::neg(parse_factor());
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  ExprPtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        pos_ = mark;  // 'e' belonged to something else; not a valid exponent
      else
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
          ++pos_;
    }
    std::string tok(text_.substr(start, pos_ - start));
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw ParseError("malformed number '" + tok + "'", start);
    return Expr::constant(v);
  }

  ExprPtr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (name == "x") return Expr::variable(Var::X);
    if (name == "y") return Expr::variable(Var::Y);

    NodeKind k;
    if (name == "sin") k = NodeKind::Sin;
    else if (name == "cos") k = NodeKind::Cos;
    else if (name == "exp") k = NodeKind::Exp;
    else if (name == "sqrt") k = NodeKind::Sqrt;
    else if (name == "ln" || name == "log") k = NodeKind::Ln;
    else throw ParseError("unknown identifier '" + name + "'", start);

    if (!eat('('))
      throw ParseError("function '" + name + "' takes exactly one parenthesized argument",
                       start);
    ExprPtr arg = parse_expr();
    if (peek() == ',')
      throw ParseError("function '" + name + "' takes exactly one argument", pos_);
    if (!eat(')')) throw ParseError("expected ')' closing call to '" + name + "'", pos_);
    return Expr::fun(k, arg);
  }
};

}  // namespace

ExprPtr parse_expression(std::string_view text) { return Parser(text).run(); }

ExprPtr swap_xy(const ExprPtr& e) {
  switch (e->kind) {
    case NodeKind::Constant: return e;
    case NodeKind::Variable:
      return Expr::variable(e->var == Var::X ? Var::Y : Var::X);
    case NodeKind::Add: return Expr::add(swap_xy(e->a), swap_xy(e->b));
    case NodeKind::Sub: return Expr::sub(swap_xy(e->a), swap_xy(e->b));
    case NodeKind::Mul: return Expr::mul(swap_xy(e->a), swap_xy(e->b));
    case NodeKind::Div: return Expr::div(swap_xy(e->a), swap_xy(e->b));
    case NodeKind::Pow: return Expr::pow(swap_xy(e->a), e->exponent);
    case NodeKind::Neg: return Expr::neg(swap_xy(e->a));
    default: return Expr::fun(e->kind, swap_xy(e->a));
  }
}

}  // namespace sigflow
