// SPDX-License-Identifier: Apache-2.0

#include "expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace nrwe {

namespace {

using Node = Expr::Node;
using NodePtr = Expr::NodePtr;
using Kind = Expr::Kind;

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->value = v;
  return n;
}

NodePtr make_var(const std::string& name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->name = name;
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->kind == Kind::Constant && n->value == v;
}

NodePtr make_binary(Kind kind, NodePtr a, NodePtr b);
NodePtr make_func(const std::string& name, NodePtr arg);

NodePtr make_neg(NodePtr a) {
  if (a->kind == Kind::Constant) return make_const(-a->value);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Neg;
  n->lhs = std::move(a);
  return n;
}

// Smart constructors fold constants and drop identity operands so that
// derivatives of t-free expressions collapse to the literal 0.
NodePtr make_binary(Kind kind, NodePtr a, NodePtr b) {
  if (a->kind == Kind::Constant && b->kind == Kind::Constant) {
    switch (kind) {
      case Kind::Add: return make_const(a->value + b->value);
      case Kind::Sub: return make_const(a->value - b->value);
      case Kind::Mul: return make_const(a->value * b->value);
      default: break;  // fold / and ^ at eval time so domain errors surface
    }
  }
  switch (kind) {
    case Kind::Add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Kind::Sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_neg(b);
      break;
    case Kind::Mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Kind::Div:
      if (is_const(a, 0.0)) return make_const(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Kind::Pow:
      if (is_const(b, 1.0)) return a;
      if (is_const(b, 0.0)) return make_const(1.0);
      break;
    default:
      break;
  }
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr make_func(const std::string& name, NodePtr arg) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Func;
  n->name = name;
  n->lhs = std::move(arg);
  return n;
}

double eval_node(const NodePtr& n, double t, double x) {
  switch (n->kind) {
    case Kind::Constant:
      return n->value;
    case Kind::Variable:
      return n->name == "t" ? t : x;
    case Kind::Add:
      return eval_node(n->lhs, t, x) + eval_node(n->rhs, t, x);
    case Kind::Sub:
      return eval_node(n->lhs, t, x) - eval_node(n->rhs, t, x);
    case Kind::Mul:
      return eval_node(n->lhs, t, x) * eval_node(n->rhs, t, x);
    case Kind::Div: {
      const double denom = eval_node(n->rhs, t, x);
      if (denom == 0.0) fail(ErrorCode::DomainError, "division by zero");
      return eval_node(n->lhs, t, x) / denom;
    }
    case Kind::Pow: {
      const double base = eval_node(n->lhs, t, x);
      const double expo = eval_node(n->rhs, t, x);
      const double v = std::pow(base, expo);
      if (!std::isfinite(v))
        fail(ErrorCode::DomainError, "pow produced a non-finite value");
      return v;
    }
    case Kind::Neg:
      return -eval_node(n->lhs, t, x);
    case Kind::Func: {
      const double a = eval_node(n->lhs, t, x);
      if (n->name == "exp") {
        const double v = std::exp(a);
        if (!std::isfinite(v)) fail(ErrorCode::DomainError, "exp overflow");
        return v;
      }
      if (n->name == "log") {
        if (a <= 0.0) fail(ErrorCode::DomainError, "log of non-positive value");
        return std::log(a);
      }
      if (n->name == "sin") return std::sin(a);
      if (n->name == "cos") return std::cos(a);
      if (n->name == "sqrt") {
        if (a < 0.0) fail(ErrorCode::DomainError, "sqrt of negative value");
        return std::sqrt(a);
      }
      if (n->name == "abs") return std::abs(a);
      if (n->name == "sign") return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
      fail(ErrorCode::UnknownIdentifier, "unknown function " + n->name);
    }
  }
  fail(ErrorCode::DomainError, "corrupt expression node");
}

NodePtr diff_node(const NodePtr& n, const std::string& var) {
  switch (n->kind) {
    case Kind::Constant:
      return make_const(0.0);
    case Kind::Variable:
      return make_const(n->name == var ? 1.0 : 0.0);
    case Kind::Add:
      return make_binary(Kind::Add, diff_node(n->lhs, var), diff_node(n->rhs, var));
    case Kind::Sub:
      return make_binary(Kind::Sub, diff_node(n->lhs, var), diff_node(n->rhs, var));
    case Kind::Mul:
      return make_binary(Kind::Add,
                         make_binary(Kind::Mul, diff_node(n->lhs, var), n->rhs),
                         make_binary(Kind::Mul, n->lhs, diff_node(n->rhs, var)));
    case Kind::Div:
      // (u/v)' = u'/v - u v'/v^2
      return make_binary(
          Kind::Sub, make_binary(Kind::Div, diff_node(n->lhs, var), n->rhs),
          make_binary(Kind::Div, make_binary(Kind::Mul, n->lhs, diff_node(n->rhs, var)),
                      make_binary(Kind::Pow, n->rhs, make_const(2.0))));
    case Kind::Pow: {
      const NodePtr& base = n->lhs;
      const NodePtr& expo = n->rhs;
      if (expo->kind == Kind::Constant) {
        // c * base^(c-1) * base'
        return make_binary(
            Kind::Mul,
            make_binary(Kind::Mul, make_const(expo->value),
                        make_binary(Kind::Pow, base, make_const(expo->value - 1.0))),
            diff_node(base, var));
      }
      // base^expo * (expo' * log(base) + expo * base'/base)
      NodePtr inner = make_binary(
          Kind::Add,
          make_binary(Kind::Mul, diff_node(expo, var), make_func("log", base)),
          make_binary(Kind::Mul, expo, make_binary(Kind::Div, diff_node(base, var), base)));
      return make_binary(Kind::Mul, NodePtr(n), inner);
    }
    case Kind::Neg:
      return make_neg(diff_node(n->lhs, var));
    case Kind::Func: {
      NodePtr inner = diff_node(n->lhs, var);
      NodePtr outer;
      if (n->name == "exp") outer = make_func("exp", n->lhs);
      else if (n->name == "log") outer = make_binary(Kind::Div, make_const(1.0), n->lhs);
      else if (n->name == "sin") outer = make_func("cos", n->lhs);
      else if (n->name == "cos") outer = make_neg(make_func("sin", n->lhs));
      else if (n->name == "sqrt")
        outer = make_binary(Kind::Div, make_const(0.5), make_func("sqrt", n->lhs));
      else if (n->name == "abs") outer = make_func("sign", n->lhs);  // kink at 0
      else if (n->name == "sign") outer = make_const(0.0);
      else fail(ErrorCode::UnknownIdentifier, "unknown function " + n->name);
      return make_binary(Kind::Mul, outer, inner);
    }
  }
  fail(ErrorCode::DomainError, "corrupt expression node");
}

bool depends_node(const NodePtr& n, const std::string& var) {
  switch (n->kind) {
    case Kind::Constant: return false;
    case Kind::Variable: return n->name == var;
    case Kind::Neg: return depends_node(n->lhs, var);
    case Kind::Func: return depends_node(n->lhs, var);
    default:
      return depends_node(n->lhs, var) || depends_node(n->rhs, var);
  }
}

void print_node(const NodePtr& n, std::ostringstream& out) {
  switch (n->kind) {
    case Kind::Constant: out << n->value; return;
    case Kind::Variable: out << n->name; return;
    case Kind::Add: out << '('; print_node(n->lhs, out); out << " + "; print_node(n->rhs, out); out << ')'; return;
    case Kind::Sub: out << '('; print_node(n->lhs, out); out << " - "; print_node(n->rhs, out); out << ')'; return;
    case Kind::Mul: out << '('; print_node(n->lhs, out); out << " * "; print_node(n->rhs, out); out << ')'; return;
    case Kind::Div: out << '('; print_node(n->lhs, out); out << " / "; print_node(n->rhs, out); out << ')'; return;
    case Kind::Pow: out << '('; print_node(n->lhs, out); out << '^'; print_node(n->rhs, out); out << ')'; return;
    case Kind::Neg: out << "(-"; print_node(n->lhs, out); out << ')'; return;
    case Kind::Func: out << n->name << '('; print_node(n->lhs, out); out << ')'; return;
  }
}

class Parser {
 public:
  Parser(const std::string& src, const std::set<std::string>& vars)
      : src_(src), vars_(vars) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= src_.size())
      fail(ErrorCode::ParseError, "empty expression (offset 0)");
    NodePtr e = parse_sum();
    skip_ws();
    if (pos_ < src_.size())
      fail(ErrorCode::ParseError,
           "unexpected input at offset " + std::to_string(pos_));
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    for (;;) {
      if (accept('+')) lhs = make_binary(Kind::Add, lhs, parse_product());
      else if (accept('-')) lhs = make_binary(Kind::Sub, lhs, parse_product());
      else return lhs;
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = make_binary(Kind::Mul, lhs, parse_unary());
      else if (accept('/')) lhs = make_binary(Kind::Div, lhs, parse_unary());
      else return lhs;
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make_neg(parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (accept('^')) {
      // right-associative; exponent may carry its own unary minus
      return make_binary(Kind::Pow, base, parse_unary());
    }
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size())
      fail(ErrorCode::ParseError,
           "unexpected end of input at offset " + std::to_string(pos_));
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_sum();
      if (!accept(')'))
        fail(ErrorCode::ParseError,
             "expected ')' at offset " + std::to_string(pos_));
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(ErrorCode::ParseError,
         "unexpected character '" + std::string(1, c) + "' at offset " +
             std::to_string(pos_));
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    std::size_t consumed = 0;
    double v;
    try {
      v = std::stod(src_.substr(start), &consumed);
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, "bad number at offset " + std::to_string(start));
    }
    pos_ = start + consumed;
    return make_const(v);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name = src_.substr(start, pos_ - start);
    static const std::set<std::string> kFuncs = {"exp", "log", "sin",
                                                 "cos", "sqrt", "abs"};
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      if (!kFuncs.count(name))
        fail(ErrorCode::UnknownIdentifier,
             "unknown function '" + name + "' at offset " + std::to_string(start));
      ++pos_;
      NodePtr arg = parse_sum();
      if (!accept(')'))
        fail(ErrorCode::ParseError,
             "expected ')' at offset " + std::to_string(pos_));
      return make_func(name, arg);
    }
    if (!vars_.count(name))
      fail(ErrorCode::UnknownIdentifier,
           "unknown identifier '" + name + "' at offset " + std::to_string(start));
    return make_var(name);
  }

  const std::string& src_;
  const std::set<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr Expr::constant(double v) { return Expr(make_const(v)); }
Expr Expr::variable(const std::string& name) { return Expr(make_var(name)); }

double Expr::eval(double t, double x) const {
  if (!root_) fail(ErrorCode::InvalidArgument, "evaluating empty expression");
  return eval_node(root_, t, x);
}

Expr Expr::differentiate(const std::string& var) const {
  if (!root_) fail(ErrorCode::InvalidArgument, "differentiating empty expression");
  return Expr(diff_node(root_, var));
}

bool Expr::depends_on(const std::string& var) const {
  return root_ && depends_node(root_, var);
}

std::string Expr::to_string() const {
  if (!root_) return "";
  std::ostringstream out;
  print_node(root_, out);
  return out.str();
}

Expr parse_expr(const std::string& source, const std::set<std::string>& allowed_vars) {
  if (source.empty()) fail(ErrorCode::ParseError, "empty expression (offset 0)");
  Parser p(source, allowed_vars);
  return Expr(p.parse());
}

}  // namespace nrwe
