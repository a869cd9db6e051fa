#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "roa/interval.hpp"

namespace roa {

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UnknownIdentifier, BadExponent };

  ParseError(Kind kind, std::size_t offset, const std::string& what)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), kind_(kind), offset_(offset) {}

  Kind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Tanh };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

// Immutable expression tree node. Shared subtrees are allowed; nodes are never
// mutated after construction, so trees can be evaluated from many threads.
struct ExprNode {
  Op op;
  double value = 0.0;    // Const
  std::size_t index = 0; // Var
  int exponent = 0;      // Pow
  Expr lhs;              // unary operand or left operand
  Expr rhs;
};

namespace expr {

Expr constant(double v);
Expr var(std::size_t index);
Expr neg(Expr a);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr base, int exponent);
Expr tanh(Expr a);

// Smart constructors with constant folding and 0/1 identities, used by
// differentiate() to keep derivative trees small.
Expr fold_add(Expr a, Expr b);
Expr fold_sub(Expr a, Expr b);
Expr fold_mul(Expr a, Expr b);
Expr fold_neg(Expr a);

bool is_const(const Expr& e, double v);

}  // namespace expr

// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := atom ['^' INT]
//   atom   := NUMBER | IDENT | 'tanh' '(' expr ')' | '(' expr ')' | '-' factor
Expr parse_expr(std::string_view text, const std::vector<std::string>& state_names);

double eval_point(const Expr& e, std::span<const double> x);
Interval eval_interval(const Expr& e, const BoxRegion& box);
Expr differentiate(const Expr& e, std::size_t wrt);

// Highest Var index + 1 (0 for constant expressions).
std::size_t arity(const Expr& e);

// Fully parenthesized infix form; parse_expr(to_string(e)) evaluates identically.
std::string to_string(const Expr& e, const std::vector<std::string>& state_names);

// Structural equality (exact constants).
bool same_tree(const Expr& a, const Expr& b);

}  // namespace roa
