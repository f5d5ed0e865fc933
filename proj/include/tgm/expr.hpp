#pragma once

// Scalar expressions over chart coordinates: AST, parser, printer,
// evaluation and exact symbolic differentiation.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgm/errors.hpp"

namespace tgm {

namespace expr {

enum class Op : std::uint8_t {
  constant,
  variable,
  add,
  sub,
  mul,
  div,
  pow,
  neg,
  sin,
  cos,
  exp,
  log,
  sqrt,
  tanh,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op;
  double value = 0.0;  // constant
  int var = -1;        // variable
  NodePtr lhs;         // unary argument or left operand
  NodePtr rhs;

  bool is_constant() const { return op == Op::constant; }
  bool is_constant(double c) const { return op == Op::constant && value == c; }
};

inline bool is_binary(Op op) {
  return op == Op::add || op == Op::sub || op == Op::mul || op == Op::div || op == Op::pow;
}

inline bool is_function(Op op) {
  return op == Op::sin || op == Op::cos || op == Op::exp || op == Op::log || op == Op::sqrt ||
         op == Op::tanh;
}

inline std::string_view function_name(Op op) {
  switch (op) {
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sqrt: return "sqrt";
    case Op::tanh: return "tanh";
    default: return "";
  }
}

inline std::optional<Op> function_from_name(std::string_view name) {
  for (Op op : {Op::sin, Op::cos, Op::exp, Op::log, Op::sqrt, Op::tanh})
    if (function_name(op) == name) return op;
  return std::nullopt;
}

inline double apply_function(Op op, double x) {
  switch (op) {
    case Op::sin: return std::sin(x);
    case Op::cos: return std::cos(x);
    case Op::exp: return std::exp(x);
    case Op::log:
      if (!(x > 0.0)) throw DomainError("log of non-positive value " + std::to_string(x));
      return std::log(x);
    case Op::sqrt:
      if (x < 0.0) throw DomainError("sqrt of negative value " + std::to_string(x));
      return std::sqrt(x);
    case Op::tanh: return std::tanh(x);
    default: throw Error("not a function node");
  }
}

inline double apply_pow(double base, double exponent) {
  if (base == 0.0 && exponent < 0.0) throw DomainError("division by zero in power");
  if (base < 0.0 && exponent != std::floor(exponent))
    throw DomainError("negative base with non-integer exponent");
  return std::pow(base, exponent);
}

inline double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::add: return a + b;
    case Op::sub: return a - b;
    case Op::mul: return a * b;
    case Op::div:
      if (b == 0.0) throw DomainError("division by zero");
      return a / b;
    case Op::pow: return apply_pow(a, b);
    default: throw Error("not a binary node");
  }
}

}  // namespace expr

/// Immutable scalar expression. Variables are chart coordinate indices.
class ScalarField {
public:
  ScalarField() : node_(make_constant(0.0)) {}
  explicit ScalarField(expr::NodePtr node) : node_(std::move(node)) {}

  static ScalarField constant(double c) { return ScalarField(make_constant(c)); }
  static ScalarField variable(int index) {
    auto n = std::make_shared<expr::Node>();
    n->op = expr::Op::variable;
    n->var = index;
    return ScalarField(std::move(n));
  }

  const expr::Node& node() const { return *node_; }
  const expr::NodePtr& ptr() const { return node_; }

  bool is_constant() const { return node_->is_constant(); }
  bool is_zero() const { return node_->is_constant(0.0); }
  double constant_value() const { return node_->value; }

  double eval(std::span<const double> point) const { return eval_node(*node_, point); }

  /// Largest variable index referenced, or -1.
  int max_variable() const { return max_var(*node_); }

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator/(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator-(const ScalarField& a);
  friend ScalarField pow(const ScalarField& base, const ScalarField& exponent);
  friend ScalarField apply(expr::Op function, const ScalarField& arg);

  ScalarField& operator+=(const ScalarField& o) { return *this = *this + o; }
  ScalarField& operator-=(const ScalarField& o) { return *this = *this - o; }
  ScalarField& operator*=(const ScalarField& o) { return *this = *this * o; }

private:
  static expr::NodePtr make_constant(double c) {
    auto n = std::make_shared<expr::Node>();
    n->op = expr::Op::constant;
    n->value = c;
    return n;
  }

  static double eval_node(const expr::Node& n, std::span<const double> p) {
    using expr::Op;
    switch (n.op) {
      case Op::constant: return n.value;
      case Op::variable: return p[static_cast<std::size_t>(n.var)];
      case Op::neg: return -eval_node(*n.lhs, p);
      case Op::add:
      case Op::sub:
      case Op::mul:
      case Op::div:
      case Op::pow: {
        double r = expr::apply_binary(n.op, eval_node(*n.lhs, p), eval_node(*n.rhs, p));
        if (!std::isfinite(r)) throw DomainError("non-finite intermediate value");
        return r;
      }
      default: {
        double r = expr::apply_function(n.op, eval_node(*n.lhs, p));
        if (!std::isfinite(r)) throw DomainError("non-finite intermediate value");
        return r;
      }
    }
  }

  static int max_var(const expr::Node& n) {
    int m = n.op == expr::Op::variable ? n.var : -1;
    if (n.lhs) m = std::max(m, max_var(*n.lhs));
    if (n.rhs) m = std::max(m, max_var(*n.rhs));
    return m;
  }

  expr::NodePtr node_;
};

namespace expr {

inline NodePtr make_node(Op op, NodePtr lhs, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

// Folds a constant result only when it is finite and raises no domain error.
inline std::optional<double> try_fold(Op op, double a, double b = 0.0) {
  try {
    double r = is_binary(op) ? apply_binary(op, a, b) : apply_function(op, a);
    if (std::isfinite(r)) return r;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

}  // namespace expr

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  using namespace expr;
  if (a.is_constant() && b.is_constant())
    if (auto r = try_fold(Op::add, a.constant_value(), b.constant_value()))
      return ScalarField::constant(*r);
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return ScalarField(make_node(Op::add, a.ptr(), b.ptr()));
}

inline ScalarField operator-(const ScalarField& a) {
  using namespace expr;
  if (a.is_constant()) return ScalarField::constant(-a.constant_value() + 0.0);
  if (a.node().op == Op::neg) return ScalarField(a.node().lhs);
  return ScalarField(make_node(Op::neg, a.ptr()));
}

inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  using namespace expr;
  if (a.is_constant() && b.is_constant())
    if (auto r = try_fold(Op::sub, a.constant_value(), b.constant_value()))
      return ScalarField::constant(*r);
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  return ScalarField(make_node(Op::sub, a.ptr(), b.ptr()));
}

inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  using namespace expr;
  if (a.is_constant() && b.is_constant())
    if (auto r = try_fold(Op::mul, a.constant_value(), b.constant_value()))
      return ScalarField::constant(*r);
  if (a.is_zero() || b.is_zero()) return ScalarField::constant(0.0);
  if (a.node().is_constant(1.0)) return b;
  if (b.node().is_constant(1.0)) return a;
  if (a.node().is_constant(-1.0)) return -b;
  if (b.node().is_constant(-1.0)) return -a;
  return ScalarField(make_node(Op::mul, a.ptr(), b.ptr()));
}

inline ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  using namespace expr;
  if (a.is_constant() && b.is_constant())
    if (auto r = try_fold(Op::div, a.constant_value(), b.constant_value()))
      return ScalarField::constant(*r);
  if (a.is_zero() && !b.is_zero()) return ScalarField::constant(0.0);
  if (b.node().is_constant(1.0)) return a;
  return ScalarField(make_node(Op::div, a.ptr(), b.ptr()));
}

inline ScalarField pow(const ScalarField& base, const ScalarField& exponent) {
  using namespace expr;
  if (base.is_constant() && exponent.is_constant())
    if (auto r = try_fold(Op::pow, base.constant_value(), exponent.constant_value()))
      return ScalarField::constant(*r);
  if (exponent.is_zero()) return ScalarField::constant(1.0);
  if (exponent.node().is_constant(1.0)) return base;
  if (base.node().is_constant(1.0)) return base;
  return ScalarField(make_node(Op::pow, base.ptr(), exponent.ptr()));
}

inline ScalarField apply(expr::Op function, const ScalarField& arg) {
  using namespace expr;
  if (arg.is_constant())
    if (auto r = try_fold(function, arg.constant_value())) return ScalarField::constant(*r);
  return ScalarField(make_node(function, arg.ptr()));
}

inline ScalarField sin(const ScalarField& a) { return apply(expr::Op::sin, a); }
inline ScalarField cos(const ScalarField& a) { return apply(expr::Op::cos, a); }
inline ScalarField exp(const ScalarField& a) { return apply(expr::Op::exp, a); }
inline ScalarField log(const ScalarField& a) { return apply(expr::Op::log, a); }
inline ScalarField sqrt(const ScalarField& a) { return apply(expr::Op::sqrt, a); }
inline ScalarField tanh(const ScalarField& a) { return apply(expr::Op::tanh, a); }

inline ScalarField operator*(double c, const ScalarField& f) { return ScalarField::constant(c) * f; }

/// Exact partial derivative with respect to coordinate `var`.
inline ScalarField differentiate(const ScalarField& f, int var) {
  using expr::Op;
  const expr::Node& n = f.node();
  auto sub = [](const expr::NodePtr& p) { return ScalarField(p); };
  switch (n.op) {
    case Op::constant: return ScalarField::constant(0.0);
    case Op::variable: return ScalarField::constant(n.var == var ? 1.0 : 0.0);
    case Op::neg: return -differentiate(sub(n.lhs), var);
    case Op::add: return differentiate(sub(n.lhs), var) + differentiate(sub(n.rhs), var);
    case Op::sub: return differentiate(sub(n.lhs), var) - differentiate(sub(n.rhs), var);
    case Op::mul: {
      ScalarField a = sub(n.lhs), b = sub(n.rhs);
      return differentiate(a, var) * b + a * differentiate(b, var);
    }
    case Op::div: {
      ScalarField a = sub(n.lhs), b = sub(n.rhs);
      ScalarField da = differentiate(a, var), db = differentiate(b, var);
      if (db.is_zero()) return da / b;
      return (da * b - a * db) / pow(b, ScalarField::constant(2.0));
    }
    case Op::pow: {
      ScalarField a = sub(n.lhs), b = sub(n.rhs);
      ScalarField da = differentiate(a, var), db = differentiate(b, var);
      if (db.is_zero()) {
        if (da.is_zero()) return ScalarField::constant(0.0);
        return b * pow(a, b - ScalarField::constant(1.0)) * da;
      }
      if (da.is_zero()) return f * log(a) * db;
      return f * (db * log(a) + b * da / a);
    }
    case Op::sin: return cos(sub(n.lhs)) * differentiate(sub(n.lhs), var);
    case Op::cos: return -(sin(sub(n.lhs)) * differentiate(sub(n.lhs), var));
    case Op::exp: return f * differentiate(sub(n.lhs), var);
    case Op::log: return differentiate(sub(n.lhs), var) / sub(n.lhs);
    case Op::sqrt: return differentiate(sub(n.lhs), var) / (ScalarField::constant(2.0) * f);
    case Op::tanh:
      return (ScalarField::constant(1.0) - f * f) * differentiate(sub(n.lhs), var);
  }
  throw Error("corrupt expression node");
}

/// Replaces every variable i by `replacement[i]`.
inline ScalarField substitute(const ScalarField& f, std::span<const ScalarField> replacement) {
  using expr::Op;
  const expr::Node& n = f.node();
  auto rec = [&](const expr::NodePtr& p) { return substitute(ScalarField(p), replacement); };
  switch (n.op) {
    case Op::constant: return f;
    case Op::variable: return replacement[static_cast<std::size_t>(n.var)];
    case Op::neg: return -rec(n.lhs);
    case Op::add: return rec(n.lhs) + rec(n.rhs);
    case Op::sub: return rec(n.lhs) - rec(n.rhs);
    case Op::mul: return rec(n.lhs) * rec(n.rhs);
    case Op::div: return rec(n.lhs) / rec(n.rhs);
    case Op::pow: return pow(rec(n.lhs), rec(n.rhs));
    default: return apply(n.op, rec(n.lhs));
  }
}

// ---------------------------------------------------------------------------
// Printing

namespace expr {

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Binding strength used for parenthesization.
inline int precedence(const Node& n) {
  switch (n.op) {
    case Op::add:
    case Op::sub: return 1;
    case Op::mul:
    case Op::div: return 2;
    case Op::neg: return 3;
    case Op::constant: return n.value < 0.0 || std::signbit(n.value) ? 3 : 5;
    case Op::pow: return 4;
    default: return 5;
  }
}

inline void print(const Node& n, std::span<const std::string> names, std::string& out);

inline void print_wrapped(const Node& n, bool parens, std::span<const std::string> names,
                          std::string& out) {
  if (parens) out += '(';
  print(n, names, out);
  if (parens) out += ')';
}

inline void print(const Node& n, std::span<const std::string> names, std::string& out) {
  switch (n.op) {
    case Op::constant:
      if (std::signbit(n.value)) {
        out += '-';
        out += format_number(-n.value);
      } else {
        out += format_number(n.value);
      }
      return;
    case Op::variable: out += names[static_cast<std::size_t>(n.var)]; return;
    case Op::neg:
      out += '-';
      print_wrapped(*n.lhs, precedence(*n.lhs) <= 3, names, out);
      return;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div: {
      int p = precedence(n);
      const char* sym = n.op == Op::add ? " + " : n.op == Op::sub ? " - " : n.op == Op::mul ? "*" : "/";
      print_wrapped(*n.lhs, precedence(*n.lhs) < p, names, out);
      out += sym;
      print_wrapped(*n.rhs, precedence(*n.rhs) <= p, names, out);
      return;
    }
    case Op::pow:
      print_wrapped(*n.lhs, precedence(*n.lhs) < 5, names, out);
      out += '^';
      print_wrapped(*n.rhs, precedence(*n.rhs) < 3, names, out);
      return;
    default:
      out += function_name(n.op);
      out += '(';
      print(*n.lhs, names, out);
      out += ')';
      return;
  }
}

}  // namespace expr

inline std::string to_string(const ScalarField& f, std::span<const std::string> names) {
  std::string out;
  expr::print(f.node(), names, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | 'pi' | ident | ident '(' expr ')' | '(' expr ')'

namespace expr {

class Parser {
public:
  Parser(std::string_view text, std::span<const std::string> names) : text_(text), names_(names) {}

  ScalarField parse() {
    skip_ws();
    if (at_end()) throw ParseError("empty expression", pos_);
    ScalarField f = parse_expr();
    skip_ws();
    if (!at_end()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return f;
  }

private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_ws() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                         text_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ScalarField parse_expr() {
    ScalarField lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = raw(Op::add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = raw(Op::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  ScalarField parse_term() {
    ScalarField lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = raw(Op::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = raw(Op::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  ScalarField parse_unary() {
    if (accept('-')) {
      ScalarField arg = parse_unary();
      if (arg.is_constant()) return ScalarField::constant(-arg.constant_value());
      return ScalarField(make_node(Op::neg, arg.ptr()));
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  ScalarField parse_power() {
    ScalarField base = parse_primary();
    if (accept('^')) return raw(Op::pow, base, parse_unary());
    return base;
  }

  ScalarField parse_primary() {
    skip_ws();
    if (at_end()) throw ParseError("unexpected end of input", pos_);
    char c = peek();
    if (c == '(') {
      ++pos_;
      ScalarField inner = parse_expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (is_ident_start(c)) {
      std::size_t start = pos_;
      while (!at_end() && is_ident_char(text_[pos_])) ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      skip_ws();
      if (peek() == '(') {
        auto fn = function_from_name(name);
        if (!fn) throw UnknownSymbolError(name);
        ++pos_;
        ScalarField arg = parse_expr();
        if (!accept(')')) throw ParseError("expected ')'", pos_);
        return ScalarField(make_node(*fn, arg.ptr()));
      }
      for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return ScalarField::variable(static_cast<int>(i));
      if (name == "pi") return ScalarField::constant(std::numbers::pi);
      throw UnknownSymbolError(name);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  ScalarField parse_number() {
    std::size_t start = pos_;
    while (!at_end() && ((text_[pos_] >= '0' && text_[pos_] <= '9') || text_[pos_] == '.')) ++pos_;
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (!at_end() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (at_end() || text_[pos_] < '0' || text_[pos_] > '9') {
        pos_ = save;
      } else {
        while (!at_end() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
      }
    }
    double value = 0.0;
    std::string_view tok = text_.substr(start, pos_ - start);
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ParseError("malformed number", start);
    return ScalarField::constant(value);
  }

  static ScalarField raw(Op op, const ScalarField& a, const ScalarField& b) {
    return ScalarField(make_node(op, a.ptr(), b.ptr()));
  }

  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

  std::string_view text_;
  std::span<const std::string> names_;
  std::size_t pos_ = 0;
};

}  // namespace expr

/// Parses `text` with `names` as the only admissible symbols (plus the
/// constant `pi` when no coordinate shadows it). The AST is returned as
/// written; no simplification is applied.
inline ScalarField parse_expression(std::string_view text, std::span<const std::string> names) {
  return expr::Parser(text, names).parse();
}

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto start = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!start(s[0])) return false;
  for (char c : s)
    if (!start(c) && !(c >= '0' && c <= '9')) return false;
  return true;
}

}  // namespace tgm
