// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_EXPR_HPP
#define NRWE_EXPR_HPP

#include <memory>
#include <set>
#include <string>

#include "errors.hpp"

namespace nrwe {

/// Expression tree over constants, the variables {t, x}, the binary
/// operators + - * / ^ and the unary functions exp log sin cos sqrt abs.
/// Evaluation raises DomainError instead of returning non-finite values.
class Expr {
 public:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Func };

  struct Node {
    Kind kind;
    double value = 0.0;       // Constant
    std::string name;         // Variable / Func
    NodePtr lhs, rhs;         // children (rhs unused for unary)
  };

  Expr() = default;
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  static Expr constant(double v);
  static Expr variable(const std::string& name);

  bool empty() const { return root_ == nullptr; }
  const NodePtr& root() const { return root_; }

  double eval(double t, double x) const;
  Expr differentiate(const std::string& var) const;
  bool depends_on(const std::string& var) const;
  std::string to_string() const;

 private:
  NodePtr root_;
};

/// Recursive-descent parser with standard precedence (^ right-associative,
/// then unary minus, then * /, then + -). ParseError carries the byte
/// offset of the failure; identifiers outside `allowed_vars` and the
/// function set raise UnknownIdentifier.
Expr parse_expr(const std::string& source, const std::set<std::string>& allowed_vars);

}  // namespace nrwe

#endif  // NRWE_EXPR_HPP
