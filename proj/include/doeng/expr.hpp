#ifndef DOENG_EXPR_HPP
#define DOENG_EXPR_HPP

#include "doeng/value.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace doeng {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Body of a structural equation. Boolean connectives are defined only on
// {0,1}-valued operands; other domains go through eq/if/table.
struct Expr {
  enum class Op { Literal, Var, And, Or, Xor, Not, Eq, If, Table };

  Op op = Op::Literal;
  Value literal;                 // Literal
  std::string var;               // Var
  std::vector<ExprPtr> args;     // And/Or/Xor/Not/Eq/If

  // Table: explicit lookup over named arguments.
  std::vector<std::string> table_vars;
  std::vector<std::pair<std::vector<Value>, Value>> table_rows;

  static ExprPtr lit(Value v);
  static ExprPtr ref(std::string name);
  static ExprPtr make(Op op, std::vector<ExprPtr> args);
  static ExprPtr table(std::vector<std::string> vars,
                       std::vector<std::pair<std::vector<Value>, Value>> rows);
};

// Free variables in first-appearance order, duplicates removed.
std::vector<std::string> free_vars(const Expr& e);

// Evaluate with a variable lookup. Throws Error(BadExpression) on a boolean
// connective applied to a non-{0,1} value, Error(PartialFunction) on an
// uncovered table row.
Value eval_expr(const Expr& e, const std::function<Value(const std::string&)>& lookup);

bool expr_equal(const Expr& a, const Expr& b);

// Canonical text form (what the DSL prints and re-parses).
std::string expr_to_string(const Expr& e);

} // namespace doeng

#endif
