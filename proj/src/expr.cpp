#include "roa/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace roa {

namespace expr {
namespace {

Expr make(Op op, Expr lhs = nullptr, Expr rhs = nullptr) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

bool both_const(const Expr& a, const Expr& b) { return a->op == Op::Const && b->op == Op::Const; }

}  // namespace

Expr constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

Expr var(std::size_t index) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Var;
  n->index = index;
  return n;
}

Expr neg(Expr a) { return make(Op::Neg, std::move(a)); }
Expr add(Expr a, Expr b) { return make(Op::Add, std::move(a), std::move(b)); }
Expr sub(Expr a, Expr b) { return make(Op::Sub, std::move(a), std::move(b)); }
Expr mul(Expr a, Expr b) { return make(Op::Mul, std::move(a), std::move(b)); }
Expr div(Expr a, Expr b) { return make(Op::Div, std::move(a), std::move(b)); }
Expr tanh(Expr a) { return make(Op::Tanh, std::move(a)); }

Expr pow(Expr base, int exponent) {
  if (exponent < 1) throw std::invalid_argument("power exponent must be >= 1");
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Pow;
  n->exponent = exponent;
  n->lhs = std::move(base);
  return n;
}

bool is_const(const Expr& e, double v) { return e->op == Op::Const && e->value == v; }

Expr fold_neg(Expr a) {
  if (a->op == Op::Const) return constant(-a->value);
  if (a->op == Op::Neg) return a->lhs;
  return neg(std::move(a));
}

Expr fold_add(Expr a, Expr b) {
  if (both_const(a, b)) return constant(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return add(std::move(a), std::move(b));
}

Expr fold_sub(Expr a, Expr b) {
  if (both_const(a, b)) return constant(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return fold_neg(std::move(b));
  return sub(std::move(a), std::move(b));
}

Expr fold_mul(Expr a, Expr b) {
  if (both_const(a, b)) return constant(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return mul(std::move(a), std::move(b));
}

}  // namespace expr

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& names) : text_(text), names_(names) {}

  Expr parse() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, ParseError::Kind kind = ParseError::Kind::Syntax) const {
    throw ParseError(kind, pos_, msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = expr::add(lhs, parse_term());
      } else if (accept('-')) {
        lhs = expr::sub(lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    for (;;) {
      if (accept('*')) {
        lhs = expr::mul(lhs, parse_factor());
      } else if (accept('/')) {
        lhs = expr::div(lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_factor() {
    Expr base = parse_atom();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                                   text_[pos_] == '_'))
      ++pos_;
    const std::string_view tok = text_.substr(start, pos_ - start);
    int n = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || n < 1) {
      pos_ = start;
      fail("exponent must be a positive integer literal", ParseError::Kind::BadExponent);
    }
    return expr::pow(base, n);
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      expect(')');
      return e;
    }
    if (c == '-') {
      ++pos_;
      return expr::neg(parse_factor());
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return expr::constant(v);
  }

  Expr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "tanh") {
      expect('(');
      Expr e = parse_expr();
      expect(')');
      return expr::tanh(e);
    }
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
      pos_ = start;
      fail("unknown identifier '" + std::string(name) + "'", ParseError::Kind::UnknownIdentifier);
    }
    return expr::var(static_cast<std::size_t>(it - names_.begin()));
  }

  std::string_view text_;
  const std::vector<std::string>& names_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text, const std::vector<std::string>& state_names) {
  return Parser(text, state_names).parse();
}

double eval_point(const Expr& e, std::span<const double> x) {
  switch (e->op) {
    case Op::Const:
      return e->value;
    case Op::Var:
      if (e->index >= x.size()) throw EvalError("variable index out of range");
      return x[e->index];
    case Op::Neg:
      return -eval_point(e->lhs, x);
    case Op::Add:
      return eval_point(e->lhs, x) + eval_point(e->rhs, x);
    case Op::Sub:
      return eval_point(e->lhs, x) - eval_point(e->rhs, x);
    case Op::Mul:
      return eval_point(e->lhs, x) * eval_point(e->rhs, x);
    case Op::Div: {
      const double d = eval_point(e->rhs, x);
      if (d == 0.0) throw EvalError("division by zero");
      return eval_point(e->lhs, x) / d;
    }
    case Op::Pow: {
      const double b = eval_point(e->lhs, x);
      double r = b;
      for (int i = 1; i < e->exponent; ++i) r *= b;
      return r;
    }
    case Op::Tanh:
      return std::tanh(eval_point(e->lhs, x));
  }
  throw EvalError("corrupt expression node");
}

Interval eval_interval(const Expr& e, const BoxRegion& box) {
  switch (e->op) {
    case Op::Const:
      return Interval(e->value);
    case Op::Var:
      if (e->index >= box.dim()) throw EvalError("variable index out of range");
      return box[e->index];
    case Op::Neg:
      return -eval_interval(e->lhs, box);
    case Op::Add:
      return eval_interval(e->lhs, box) + eval_interval(e->rhs, box);
    case Op::Sub:
      return eval_interval(e->lhs, box) - eval_interval(e->rhs, box);
    case Op::Mul:
      return eval_interval(e->lhs, box) * eval_interval(e->rhs, box);
    case Op::Div:
      return eval_interval(e->lhs, box) / eval_interval(e->rhs, box);
    case Op::Pow:
      return pow(eval_interval(e->lhs, box), e->exponent);
    case Op::Tanh:
      return tanh(eval_interval(e->lhs, box));
  }
  throw EvalError("corrupt expression node");
}

Expr differentiate(const Expr& e, std::size_t wrt) {
  using namespace expr;
  switch (e->op) {
    case Op::Const:
      return constant(0.0);
    case Op::Var:
      return constant(e->index == wrt ? 1.0 : 0.0);
    case Op::Neg:
      return fold_neg(differentiate(e->lhs, wrt));
    case Op::Add:
      return fold_add(differentiate(e->lhs, wrt), differentiate(e->rhs, wrt));
    case Op::Sub:
      return fold_sub(differentiate(e->lhs, wrt), differentiate(e->rhs, wrt));
    case Op::Mul:
      return fold_add(fold_mul(differentiate(e->lhs, wrt), e->rhs), fold_mul(e->lhs, differentiate(e->rhs, wrt)));
    case Op::Div: {
      // (a/b)' = (a' b - a b') / b^2
      Expr num = fold_sub(fold_mul(differentiate(e->lhs, wrt), e->rhs), fold_mul(e->lhs, differentiate(e->rhs, wrt)));
      if (is_const(num, 0.0)) return num;
      return div(num, pow(e->rhs, 2));
    }
    case Op::Pow: {
      Expr db = differentiate(e->lhs, wrt);
      if (is_const(db, 0.0)) return db;
      const int n = e->exponent;
      if (n == 1) return db;
      Expr lower = n == 2 ? e->lhs : pow(e->lhs, n - 1);
      return fold_mul(fold_mul(constant(static_cast<double>(n)), lower), db);
    }
    case Op::Tanh: {
      Expr da = differentiate(e->lhs, wrt);
      if (is_const(da, 0.0)) return da;
      return fold_mul(sub(constant(1.0), pow(e, 2)), da);
    }
  }
  throw EvalError("corrupt expression node");
}

std::size_t arity(const Expr& e) {
  if (!e) return 0;
  if (e->op == Op::Var) return e->index + 1;
  return std::max(arity(e->lhs), arity(e->rhs));
}

namespace {

void print(std::ostringstream& os, const Expr& e, const std::vector<std::string>& names) {
  switch (e->op) {
    case Op::Const: {
      char buf[32];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, std::fabs(e->value));
      (void)ec;
      if (e->value < 0 || std::signbit(e->value)) os << "(-" << std::string_view(buf, ptr - buf) << ")";
      else os << std::string_view(buf, ptr - buf);
      return;
    }
    case Op::Var:
      os << (e->index < names.size() ? names[e->index] : "x" + std::to_string(e->index + 1));
      return;
    case Op::Neg:
      os << "(-";
      print(os, e->lhs, names);
      os << ")";
      return;
    case Op::Pow:
      os << "(";
      print(os, e->lhs, names);
      os << ")^" << e->exponent;
      return;
    case Op::Tanh:
      os << "tanh(";
      print(os, e->lhs, names);
      os << ")";
      return;
    default:
      break;
  }
  const char sym = e->op == Op::Add ? '+' : e->op == Op::Sub ? '-' : e->op == Op::Mul ? '*' : '/';
  os << "(";
  print(os, e->lhs, names);
  os << " " << sym << " ";
  print(os, e->rhs, names);
  os << ")";
}

}  // namespace

std::string to_string(const Expr& e, const std::vector<std::string>& state_names) {
  std::ostringstream os;
  print(os, e, state_names);
  return os.str();
}

bool same_tree(const Expr& a, const Expr& b) {
  if (!a || !b) return !a && !b;
  if (a->op != b->op) return false;
  switch (a->op) {
    case Op::Const:
      return a->value == b->value;
    case Op::Var:
      return a->index == b->index;
    case Op::Pow:
      return a->exponent == b->exponent && same_tree(a->lhs, b->lhs);
    default:
      return same_tree(a->lhs, b->lhs) && same_tree(a->rhs, b->rhs);
  }
}

}  // namespace roa
