#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// Cross-checks the engine's compiled evaluation (tabulated equations, chained
// support enumeration, world realization) against a deliberately naive
// interpreter that works straight off the declarative RawModel surface.

#include "doeng/identities.hpp"
#include "doeng/inference.hpp"
#include "fixtures.hpp"

#include <map>
#include <string>

using namespace doeng;

namespace {

using Env = std::map<std::string, Value>;

Value naive_eval(const Expr& e, const Env& env) {
  auto truth = [](const Value& v) { return v == Value::rat(1); };
  switch (e.op) {
    case Expr::Op::Literal: return e.literal;
    case Expr::Op::Var: return env.at(e.var);
    case Expr::Op::And: {
      bool acc = true;
      for (const auto& a : e.args) acc = truth(naive_eval(*a, env)) && acc;
      return Value::rat(acc);
    }
    case Expr::Op::Or: {
      bool acc = false;
      for (const auto& a : e.args) acc = truth(naive_eval(*a, env)) || acc;
      return Value::rat(acc);
    }
    case Expr::Op::Xor: {
      bool acc = false;
      for (const auto& a : e.args) acc = truth(naive_eval(*a, env)) != acc;
      return Value::rat(acc);
    }
    case Expr::Op::Not: return Value::rat(!truth(naive_eval(*e.args[0], env)));
    case Expr::Op::Eq:
      return Value::rat(naive_eval(*e.args[0], env) == naive_eval(*e.args[1], env));
    case Expr::Op::If:
      return truth(naive_eval(*e.args[0], env)) ? naive_eval(*e.args[1], env)
                                                : naive_eval(*e.args[2], env);
    case Expr::Op::Table: {
      std::vector<Value> key;
      for (const auto& v : e.table_vars) key.push_back(env.at(v));
      for (const auto& [k, out] : e.table_rows)
        if (k == key) return out;
      throw std::runtime_error("naive table miss");
    }
  }
  throw std::runtime_error("naive eval fell through");
}

// P(event var = value) under an optional static intervention, summing the
// product of raw table rows over every exogenous assignment.
Rat naive_prob(const RawModel& raw, const Env& intervened, const std::string& var,
               const Value& value) {
  std::vector<const RawExoTable*> exo;
  for (const auto& d : raw.decls)
    if (d.kind == VarKind::Exogenous) {
      for (const auto& t : raw.tables)
        if (t.variable == d.name) exo.push_back(&t);
    }

  Rat total(0);
  Env env;
  std::function<void(size_t, Rat)> rec = [&](size_t i, Rat p) {
    if (p == 0) return;
    if (i == exo.size()) {
      // declaration order doubles as evaluation order for these models
      Env world = env;
      for (const auto& [name, v] : intervened) world[name] = v;
      for (const auto& d : raw.decls) {
        if (d.kind != VarKind::Endogenous) continue;
        if (intervened.count(d.name)) continue;
        for (const auto& eq : raw.equations)
          if (eq.target == d.name) world[d.name] = naive_eval(*eq.body, world);
      }
      if (world.at(var) == value) total += p;
      return;
    }
    const RawExoTable& t = *exo[i];
    if (intervened.count(t.variable)) {
      env[t.variable] = intervened.at(t.variable);
      rec(i + 1, p);
      env.erase(t.variable);
      return;
    }
    std::vector<Value> key;
    for (const auto& c : t.conditioners) key.push_back(env.at(c));
    for (const auto& row : t.rows) {
      if (row.given != key) continue;
      for (const auto& [val, q] : row.probs) {
        env[t.variable] = val;
        rec(i + 1, p * q);
      }
      env.erase(t.variable);
    }
  };
  rec(0, Rat(1));
  return total;
}

void crosscheck(const Scm& scm) {
  const Event y1{{{"Y", Value::rat(1)}}};
  CHECK(naive_prob(scm.raw(), {}, "Y", Value::rat(1)) ==
        exact_query(scm, y1, WorldSpec::observational()).exact);
  for (int xv = 0; xv <= 1; ++xv) {
    const Env dox{{"X", Value::rat(xv)}};
    CHECK(naive_prob(scm.raw(), dox, "Y", Value::rat(1)) ==
          exact_query(scm, y1, WorldSpec::do_static({{"X", Value::rat(xv)}})).exact);
  }
}

} // namespace

TEST_CASE("naive interpreter agrees with the engine on the fixtures") {
  crosscheck(fixtures::m1());
  crosscheck(fixtures::m1b());
  crosscheck(fixtures::m2());
  crosscheck(fixtures::m3());
}

TEST_CASE("naive interpreter agrees with the engine on random models") {
  for (std::uint64_t seed = 0; seed < 40; ++seed)
    for (Shape shape : {Shape::Fig1a, Shape::Fig1b, Shape::Fig2a, Shape::Fig2b})
      crosscheck(random_scm(seed, shape));
}

TEST_CASE("naive interpreter agrees on intervened confounders too") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Scm scm = random_scm(seed, Shape::Fig2a);
    const Event y1{{{"Y", Value::rat(1)}}};
    for (const Value& wv : scm.decl(scm.index_of("W")).domain) {
      const Env dow{{"W", wv}};
      CHECK(naive_prob(scm.raw(), dow, "Y", Value::rat(1)) ==
            exact_query(scm, y1, WorldSpec::do_static({{"W", wv}})).exact);
    }
  }
}
