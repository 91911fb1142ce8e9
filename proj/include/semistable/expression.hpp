#pragma once

// Infix arithmetic expressions in one variable t.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?          right associative, binds tighter than unary minus
//   primary := number | 't' | func '(' expr ')' | '(' expr ')'
//   func    := exp | ln | sqrt

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "semistable/errors.hpp"
#include "semistable/jet.hpp"

namespace semistable {

class ExprAst {
 public:
  enum class Op : std::uint8_t { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Exp, Ln, Sqrt };

  struct Node {
    Op op;
    double value = 0.0;  // Constant only
    int lhs = -1;
    int rhs = -1;
  };

  static ExprAst parse(std::string_view text);

  /// Evaluates at t. Scalar is double or Jet2. Throws DomainError where the
  /// expression is undefined.
  template <class Scalar>
  Scalar eval(const Scalar& t) const {
    return eval_node(root_, t);
  }

  double value(double t) const { return eval(t); }
  Jet2 jet(double t) const { return eval(Jet2::variable(t)); }

  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }
  std::string to_string() const { return render(root_); }

 private:
  friend class ExprParser;

  template <class Scalar>
  Scalar eval_node(int index, const Scalar& t) const;

  std::string render(int index) const;

  std::vector<Node> nodes_;
  int root_ = -1;
};

namespace detail {

inline double primal(double x) { return x; }
inline double primal(const Jet2& x) { return x.value; }

inline double pow_scalar(double a, double b) { return std::pow(a, b); }
inline Jet2 pow_scalar(const Jet2& a, const Jet2& b) { return semistable::pow(a, b); }
inline double exp_scalar(double a) { return std::exp(a); }
inline Jet2 exp_scalar(const Jet2& a) { return semistable::exp(a); }
inline double log_scalar(double a) { return std::log(a); }
inline Jet2 log_scalar(const Jet2& a) { return semistable::log(a); }
inline double sqrt_scalar(double a) { return std::sqrt(a); }
inline Jet2 sqrt_scalar(const Jet2& a) { return semistable::sqrt(a); }

inline bool is_exponent_constant(double) { return true; }
inline bool is_exponent_constant(const Jet2& b) { return b.is_constant(); }

}  // namespace detail

template <class Scalar>
Scalar ExprAst::eval_node(int index, const Scalar& t) const {
  const Node& node = nodes_[static_cast<std::size_t>(index)];
  switch (node.op) {
    case Op::Constant:
      return Scalar(node.value);
    case Op::Variable:
      return t;
    case Op::Neg:
      return -eval_node(node.lhs, t);
    case Op::Add:
      return eval_node(node.lhs, t) + eval_node(node.rhs, t);
    case Op::Sub:
      return eval_node(node.lhs, t) - eval_node(node.rhs, t);
    case Op::Mul:
      return eval_node(node.lhs, t) * eval_node(node.rhs, t);
    case Op::Div: {
      const Scalar den = eval_node(node.rhs, t);
      if (detail::primal(den) == 0.0) throw DomainError("division by zero");
      return eval_node(node.lhs, t) / den;
    }
    case Op::Pow: {
      const Scalar base = eval_node(node.lhs, t);
      const Scalar expo = eval_node(node.rhs, t);
      const double b = detail::primal(base);
      const double e = detail::primal(expo);
      if (!detail::is_exponent_constant(expo) && b <= 0.0)
        throw DomainError("variable exponent needs a positive base");
      if (b < 0.0 && std::floor(e) != e) throw DomainError("negative base with non-integer exponent");
      if (b == 0.0 && e < 0.0) throw DomainError("zero base with negative exponent");
      return detail::pow_scalar(base, expo);
    }
    case Op::Exp:
      return detail::exp_scalar(eval_node(node.lhs, t));
    case Op::Ln: {
      const Scalar arg = eval_node(node.lhs, t);
      if (!(detail::primal(arg) > 0.0)) throw DomainError("ln of a non-positive argument");
      return detail::log_scalar(arg);
    }
    case Op::Sqrt: {
      const Scalar arg = eval_node(node.lhs, t);
      if (detail::primal(arg) < 0.0) throw DomainError("sqrt of a negative argument");
      return detail::sqrt_scalar(arg);
    }
  }
  throw DomainError("malformed expression");
}

inline std::string ExprAst::render(int index) const {
  const Node& node = nodes_[static_cast<std::size_t>(index)];
  auto bin = [&](const char* sym) {
    return "(" + render(node.lhs) + sym + render(node.rhs) + ")";
  };
  switch (node.op) {
    case Op::Constant: {
      char buf[32];
      auto res = std::to_chars(buf, buf + sizeof buf, node.value);
      return std::string(buf, res.ptr);
    }
    case Op::Variable: return "t";
    case Op::Neg: return "(-" + render(node.lhs) + ")";
    case Op::Add: return bin("+");
    case Op::Sub: return bin("-");
    case Op::Mul: return bin("*");
    case Op::Div: return bin("/");
    case Op::Pow: return bin("^");
    case Op::Exp: return "exp(" + render(node.lhs) + ")";
    case Op::Ln: return "ln(" + render(node.lhs) + ")";
    case Op::Sqrt: return "sqrt(" + render(node.lhs) + ")";
  }
  return "?";
}

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  ExprAst run() {
    ast_.root_ = parse_expr();
    skip_space();
    if (pos_ != text_.size()) throw ParseError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
    return std::move(ast_);
  }

 private:
  using Op = ExprAst::Op;

  int add(Op op, int lhs = -1, int rhs = -1, double value = 0.0) {
    ast_.nodes_.push_back({op, value, lhs, rhs});
    return static_cast<int>(ast_.nodes_.size()) - 1;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = add(Op::Add, lhs, parse_term());
      else if (accept('-')) lhs = add(Op::Sub, lhs, parse_term());
      else return lhs;
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = add(Op::Mul, lhs, parse_unary());
      else if (accept('/')) lhs = add(Op::Div, lhs, parse_unary());
      else return lhs;
    }
  }

  int parse_unary() {
    if (accept('-')) return add(Op::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    if (accept('^')) return add(Op::Pow, base, parse_unary());
    return base;
  }

  int parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = parse_expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      if (name == "t") return add(Op::Variable);
      Op op;
      if (name == "exp") op = Op::Exp;
      else if (name == "ln") op = Op::Ln;
      else if (name == "sqrt") op = Op::Sqrt;
      else throw ParseError("unknown identifier '" + std::string(name) + "'", start);
      expect('(');
      const int arg = parse_expr();
      expect(')');
      return add(op, arg);
    }
    throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  int parse_number() {
    const std::size_t start = pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) throw ParseError("malformed number", start);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return add(Op::Constant, -1, -1, value);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  ExprAst ast_;
};

inline ExprAst ExprAst::parse(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i)
    if (static_cast<unsigned char>(text[i]) > 127) throw ParseError("non-ASCII character", i);
  return ExprParser(text).run();
}

}  // namespace semistable
