#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "contactlab/jet.hpp"

namespace contactlab {

// Value / gradient / Hessian of a scalar expression with respect to its
// declared variables. The Hessian is symmetric by construction.
struct Jet2 {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<std::vector<double>> hessian;
};

class ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

// Immutable parsed scalar expression over named variables.
class Expr {
 public:
  Expr() = default;

  // Grammar: literals, identifiers, + - * / ^ (right-assoc), unary -, and the
  // functions sin cos tan exp log sqrt atan2 bump01 smoothstep; `pi` is a
  // named constant. Throws Error(SyntaxError, ...) with a byte offset.
  static Expr parse(const std::string& source);

  bool empty() const { return !root_; }

  // Every identifier must appear in `variables`; throws UnknownIdentifier.
  void validate(const std::vector<std::string>& variables) const;

  // Free identifiers in first-occurrence order.
  std::vector<std::string> free_variables() const;

  // Evaluate with jets with respect to `variables` (assignment by position).
  Jet eval(const std::vector<std::string>& variables,
           const std::vector<Jet>& values) const;

  double value(const std::unordered_map<std::string, double>& assignment) const;
  Jet2 jet2(const std::vector<std::string>& variables,
            const std::vector<double>& point) const;

  std::string pretty() const;
  bool same_ast(const Expr& other) const;

  const ExprPtr& root() const { return root_; }

 private:
  explicit Expr(ExprPtr r) : root_(std::move(r)) {}
  ExprPtr root_;
};

}  // namespace contactlab
