#include "doeng/expr.hpp"

#include "doeng/errors.hpp"

#include <algorithm>

namespace doeng {

ExprPtr Expr::lit(Value v) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Literal;
  e->literal = std::move(v);
  return e;
}

ExprPtr Expr::ref(std::string name) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Var;
  e->var = std::move(name);
  return e;
}

ExprPtr Expr::make(Op op, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = std::move(args);
  return e;
}

ExprPtr Expr::table(std::vector<std::string> vars,
                    std::vector<std::pair<std::vector<Value>, Value>> rows) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Table;
  e->table_vars = std::move(vars);
  e->table_rows = std::move(rows);
  return e;
}

namespace {

void collect_free(const Expr& e, std::vector<std::string>& out) {
  auto add = [&out](const std::string& name) {
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  };
  switch (e.op) {
    case Expr::Op::Literal: break;
    case Expr::Op::Var: add(e.var); break;
    case Expr::Op::Table:
      for (const auto& v : e.table_vars) add(v);
      break;
    default:
      for (const auto& a : e.args) collect_free(*a, out);
  }
}

bool as_bool(const Value& v, const char* where) {
  if (!value_is_bool(v))
    throw Error(ErrKind::BadExpression,
                std::string(where) + " applied to non-{0,1} value " + v.str());
  return v.as_rat() == 1;
}

} // namespace

std::vector<std::string> free_vars(const Expr& e) {
  std::vector<std::string> out;
  collect_free(e, out);
  return out;
}

Value eval_expr(const Expr& e, const std::function<Value(const std::string&)>& lookup) {
  using Op = Expr::Op;
  switch (e.op) {
    case Op::Literal: return e.literal;
    case Op::Var: return lookup(e.var);
    case Op::And: {
      bool acc = true;
      for (const auto& a : e.args) acc = as_bool(eval_expr(*a, lookup), "and") && acc;
      return Value::rat(acc ? 1 : 0);
    }
    case Op::Or: {
      bool acc = false;
      for (const auto& a : e.args) acc = as_bool(eval_expr(*a, lookup), "or") || acc;
      return Value::rat(acc ? 1 : 0);
    }
    case Op::Xor: {
      bool acc = false;
      for (const auto& a : e.args) acc = as_bool(eval_expr(*a, lookup), "xor") != acc;
      return Value::rat(acc ? 1 : 0);
    }
    case Op::Not:
      return Value::rat(as_bool(eval_expr(*e.args[0], lookup), "not") ? 0 : 1);
    case Op::Eq:
      return Value::rat(eval_expr(*e.args[0], lookup) == eval_expr(*e.args[1], lookup) ? 1 : 0);
    case Op::If:
      return as_bool(eval_expr(*e.args[0], lookup), "if") ? eval_expr(*e.args[1], lookup)
                                                          : eval_expr(*e.args[2], lookup);
    case Op::Table: {
      std::vector<Value> key;
      key.reserve(e.table_vars.size());
      for (const auto& v : e.table_vars) key.push_back(lookup(v));
      for (const auto& row : e.table_rows)
        if (row.first == key) return row.second;
      std::string tuple;
      for (const auto& v : key) {
        if (!tuple.empty()) tuple += ", ";
        tuple += v.str();
      }
      throw Error(ErrKind::PartialFunction, "lookup table covers no row for (" + tuple + ")");
    }
  }
  throw Error(ErrKind::BadExpression, "corrupt expression node");
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Expr::Op::Literal: return a.literal == b.literal;
    case Expr::Op::Var: return a.var == b.var;
    case Expr::Op::Table:
      return a.table_vars == b.table_vars && a.table_rows == b.table_rows;
    default: {
      if (a.args.size() != b.args.size()) return false;
      for (size_t i = 0; i < a.args.size(); ++i)
        if (!expr_equal(*a.args[i], *b.args[i])) return false;
      return true;
    }
  }
}

std::string expr_to_string(const Expr& e) {
  using Op = Expr::Op;
  auto join_args = [&e](const char* head) {
    std::string s = head;
    s += "(";
    for (size_t i = 0; i < e.args.size(); ++i) {
      if (i) s += ", ";
      s += expr_to_string(*e.args[i]);
    }
    s += ")";
    return s;
  };
  switch (e.op) {
    case Op::Literal: return e.literal.str();
    case Op::Var: return e.var;
    case Op::And: return join_args("and");
    case Op::Or: return join_args("or");
    case Op::Xor: return join_args("xor");
    case Op::Not: return join_args("not");
    case Op::Eq: return join_args("eq");
    case Op::If: return join_args("if");
    case Op::Table: {
      std::string s = "table(";
      for (size_t i = 0; i < e.table_vars.size(); ++i) {
        if (i) s += ", ";
        s += e.table_vars[i];
      }
      s += ") { ";
      for (size_t i = 0; i < e.table_rows.size(); ++i) {
        if (i) s += ", ";
        const auto& [key, val] = e.table_rows[i];
        if (key.size() == 1) {
          s += key[0].str();
        } else {
          s += "(";
          for (size_t j = 0; j < key.size(); ++j) {
            if (j) s += ", ";
            s += key[j].str();
          }
          s += ")";
        }
        s += ": " + val.str();
      }
      s += " }";
      return s;
    }
  }
  return "?";
}

} // namespace doeng
