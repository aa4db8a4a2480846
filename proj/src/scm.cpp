#include "doeng/scm.hpp"

#include <algorithm>
#include <set>

namespace doeng {

const char* err_kind_name(ErrKind k) {
  switch (k) {
    case ErrKind::Cycle: return "Cycle";
    case ErrKind::PartialFunction: return "PartialFunction";
    case ErrKind::BadTable: return "BadTable";
    case ErrKind::BadExpression: return "BadExpression";
    case ErrKind::DuplicateDeclaration: return "DuplicateDeclaration";
    case ErrKind::MissingDefinition: return "MissingDefinition";
    case ErrKind::BadDomain: return "BadDomain";
    case ErrKind::SupportTooLarge: return "SupportTooLarge";
    case ErrKind::UnknownVariable: return "UnknownVariable";
    case ErrKind::ValueNotInDomain: return "ValueNotInDomain";
    case ErrKind::FixedNotParent: return "FixedNotParent";
    case ErrKind::UnattainableStratum: return "UnattainableStratum";
    case ErrKind::StratumNotCovered: return "StratumNotCovered";
    case ErrKind::IndexUnrealized: return "IndexUnrealized";
    case ErrKind::ImportCycle: return "ImportCycle";
    case ErrKind::WorldConflict: return "WorldConflict";
    case ErrKind::ZeroConditioningEvent: return "ZeroConditioningEvent";
    case ErrKind::PositivityViolation: return "PositivityViolation";
    case ErrKind::NonBinaryVariable: return "NonBinaryVariable";
    case ErrKind::NonNumericVariable: return "NonNumericVariable";
    case ErrKind::ShapeMismatch: return "ShapeMismatch";
    case ErrKind::EmptyPreimage: return "EmptyPreimage";
    case ErrKind::NeedTwoVersions: return "NeedTwoVersions";
    case ErrKind::InvalidCollection: return "InvalidCollection";
    case ErrKind::BadArgument: return "BadArgument";
    case ErrKind::Io: return "Io";
  }
  return "Error";
}

namespace {

std::string tuple_str(const std::vector<std::string>& names, const std::vector<Value>& vals) {
  std::string s;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) s += ", ";
    s += names[i] + "=" + vals[i].str();
  }
  return s;
}

} // namespace

int Scm::index_of(const std::string& name) const {
  auto it = name_to_id_.find(name);
  if (it == name_to_id_.end())
    throw Error(ErrKind::UnknownVariable, "unknown variable '" + name + "'");
  return it->second;
}

std::optional<int> Scm::find(const std::string& name) const {
  auto it = name_to_id_.find(name);
  if (it == name_to_id_.end()) return std::nullopt;
  return it->second;
}

int Scm::value_index(int var, const Value& v) const {
  const Domain& d = decls_[var].domain;
  for (size_t i = 0; i < d.size(); ++i)
    if (d[i] == v) return static_cast<int>(i);
  throw Error(ErrKind::ValueNotInDomain,
              "value " + v.str() + " not in domain of '" + decls_[var].name + "'");
}

const std::vector<int>& Scm::parents(int var) const {
  return is_exogenous(var) ? tables_[var].conditioners : eqs_[var].parents;
}

const Scm::CompiledEq& Scm::equation(int var) const {
  if (is_exogenous(var))
    throw Error(ErrKind::BadArgument, "'" + decls_[var].name + "' is exogenous");
  return eqs_[var];
}

const Scm::CompiledTable& Scm::table(int var) const {
  if (!is_exogenous(var))
    throw Error(ErrKind::BadArgument, "'" + decls_[var].name + "' is endogenous");
  return tables_[var];
}

std::vector<int> Scm::observed_vars() const {
  std::vector<int> out;
  for (int v = 0; v < var_count(); ++v)
    if (decls_[v].observed) out.push_back(v);
  return out;
}

bool Scm::operator==(const Scm& o) const {
  if (decls_.size() != o.decls_.size()) return false;
  for (size_t i = 0; i < decls_.size(); ++i) {
    const auto& a = decls_[i];
    const auto& b = o.decls_[i];
    if (a.name != b.name || a.domain != b.domain || a.kind != b.kind ||
        a.observed != b.observed || a.modifiable != b.modifiable)
      return false;
  }
  if (raw_.tables.size() != o.raw_.tables.size()) return false;
  for (size_t i = 0; i < raw_.tables.size(); ++i) {
    const auto& a = raw_.tables[i];
    const auto& b = o.raw_.tables[i];
    if (a.variable != b.variable || a.conditioners != b.conditioners) return false;
    if (a.rows.size() != b.rows.size()) return false;
    for (size_t r = 0; r < a.rows.size(); ++r)
      if (a.rows[r].given != b.rows[r].given || a.rows[r].probs != b.rows[r].probs)
        return false;
  }
  if (raw_.equations.size() != o.raw_.equations.size()) return false;
  for (size_t i = 0; i < raw_.equations.size(); ++i) {
    const auto& a = raw_.equations[i];
    const auto& b = o.raw_.equations[i];
    if (a.target != b.target || !expr_equal(*a.body, *b.body)) return false;
  }
  return true;
}

Scm Scm::validate(const RawModel& raw) {
  std::vector<Violation> bad;
  auto report = [&bad](ErrKind k, std::string msg, int line = 0, int col = 0) {
    bad.push_back(Violation{k, std::move(msg), line, col});
  };

  // Declarations: unique names, sane domains.
  std::map<std::string, int> ids;
  for (size_t i = 0; i < raw.decls.size(); ++i) {
    const auto& d = raw.decls[i];
    if (ids.count(d.name)) {
      report(ErrKind::DuplicateDeclaration, "duplicate declaration of '" + d.name + "'",
             d.line, d.col);
      continue;
    }
    ids[d.name] = static_cast<int>(i);
    if (d.domain.empty())
      report(ErrKind::BadDomain, "domain of '" + d.name + "' is empty", d.line, d.col);
    for (size_t a = 0; a < d.domain.size(); ++a)
      for (size_t b = a + 1; b < d.domain.size(); ++b)
        if (d.domain[a] == d.domain[b])
          report(ErrKind::BadDomain,
                 "domain of '" + d.name + "' repeats value " + d.domain[a].str(), d.line,
                 d.col);
  }

  // Exactly one table per exogenous variable, one equation per endogenous one.
  std::map<std::string, const RawExoTable*> table_of;
  for (const auto& t : raw.tables) {
    auto it = ids.find(t.variable);
    if (it == ids.end()) {
      report(ErrKind::UnknownVariable, "table for undeclared variable '" + t.variable + "'",
             t.line, t.col);
      continue;
    }
    if (raw.decls[it->second].kind != VarKind::Exogenous)
      report(ErrKind::BadTable, "endogenous '" + t.variable + "' cannot carry a table",
             t.line, t.col);
    if (table_of.count(t.variable))
      report(ErrKind::DuplicateDeclaration, "second table for '" + t.variable + "'", t.line,
             t.col);
    table_of[t.variable] = &t;
  }
  std::map<std::string, const RawEquation*> eq_of;
  for (const auto& e : raw.equations) {
    auto it = ids.find(e.target);
    if (it == ids.end()) {
      report(ErrKind::UnknownVariable, "equation for undeclared variable '" + e.target + "'",
             e.line, e.col);
      continue;
    }
    if (raw.decls[it->second].kind != VarKind::Endogenous)
      report(ErrKind::BadTable, "exogenous '" + e.target + "' cannot carry an equation",
             e.line, e.col);
    if (eq_of.count(e.target))
      report(ErrKind::DuplicateDeclaration, "second equation for '" + e.target + "'", e.line,
             e.col);
    eq_of[e.target] = &e;
  }
  for (const auto& d : raw.decls) {
    if (d.kind == VarKind::Exogenous && !table_of.count(d.name))
      report(ErrKind::MissingDefinition, "exogenous '" + d.name + "' has no table", d.line,
             d.col);
    if (d.kind == VarKind::Endogenous && !eq_of.count(d.name))
      report(ErrKind::MissingDefinition, "endogenous '" + d.name + "' has no equation",
             d.line, d.col);
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));

  Scm scm;
  scm.raw_ = raw;
  scm.decls_ = raw.decls;
  scm.name_to_id_ = ids;
  const int n = scm.var_count();
  scm.eqs_.resize(n);
  scm.tables_.resize(n);
  for (int v = 0; v < n; ++v)
    if (scm.is_exogenous(v)) scm.exo_vars_.push_back(v);

  auto value_index_checked = [&](int var, const Value& val) -> int {
    const Domain& dom = scm.decls_[var].domain;
    for (size_t i = 0; i < dom.size(); ++i)
      if (dom[i] == val) return static_cast<int>(i);
    return -1;
  };

  // Compile exogenous tables.
  for (const auto& t : raw.tables) {
    const int var = ids.at(t.variable);
    CompiledTable ct;
    bool ok = true;
    for (const auto& cname : t.conditioners) {
      auto it = ids.find(cname);
      if (it == ids.end()) {
        report(ErrKind::UnknownVariable,
               "table for '" + t.variable + "' conditions on unknown '" + cname + "'",
               t.line, t.col);
        ok = false;
        continue;
      }
      const int cvar = it->second;
      if (scm.decls_[cvar].kind != VarKind::Exogenous || cvar >= var) {
        report(ErrKind::BadTable,
               "conditioner '" + cname + "' of '" + t.variable +
                   "' must be an exogenous variable declared earlier",
               t.line, t.col);
        ok = false;
        continue;
      }
      ct.conditioners.push_back(cvar);
    }
    if (!ok) continue;

    // Every conditioner combination must appear exactly once.
    std::int64_t expect_rows = 1;
    for (int c : ct.conditioners)
      expect_rows *= static_cast<std::int64_t>(scm.decls_[c].domain.size());
    bool rows_clean = true;
    for (const auto& row : t.rows) {
      if (row.given.size() != ct.conditioners.size()) {
        report(ErrKind::BadTable,
               "table row for '" + t.variable + "' has wrong conditioner arity", t.line,
               t.col);
        rows_clean = false;
        continue;
      }
      std::vector<int32_t> key;
      bool keyok = true;
      for (size_t i = 0; i < row.given.size(); ++i) {
        int idx = value_index_checked(ct.conditioners[i], row.given[i]);
        if (idx < 0) {
          report(ErrKind::ValueNotInDomain,
                 "table row key " + row.given[i].str() + " not in domain of '" +
                     scm.decls_[ct.conditioners[i]].name + "'",
                 t.line, t.col);
          keyok = false;
          break;
        }
        key.push_back(idx);
      }
      if (!keyok) {
        rows_clean = false;
        continue;
      }
      if (ct.rows.count(key)) {
        report(ErrKind::BadTable, "duplicate table row for '" + t.variable + "'", t.line,
               t.col);
        rows_clean = false;
        continue;
      }
      std::vector<Rat> probs(scm.decls_[var].domain.size(), Rat(0));
      Rat sum(0);
      bool rowok = true;
      std::set<int> seen;
      for (const auto& [val, p] : row.probs) {
        const int idx = value_index_checked(var, val);
        if (idx < 0) {
          report(ErrKind::ValueNotInDomain,
                 "table of '" + t.variable + "' assigns probability to " + val.str() +
                     " outside its domain",
                 t.line, t.col);
          rowok = false;
          break;
        }
        if (!seen.insert(idx).second) {
          report(ErrKind::BadTable,
                 "table of '" + t.variable + "' lists value " + val.str() + " twice", t.line,
                 t.col);
          rowok = false;
          break;
        }
        if (p < 0 || p > 1) {
          report(ErrKind::BadTable,
                 "probability " + rat_to_string(p) + " for '" + t.variable +
                     "' outside [0,1]",
                 t.line, t.col);
          rowok = false;
          break;
        }
        probs[idx] = p;
        sum += p;
      }
      if (!rowok) {
        rows_clean = false;
        continue;
      }
      if (sum != 1) {
        report(ErrKind::BadTable,
               "table of '" + t.variable + "' sums to " + rat_to_string(sum) + ", not 1",
               t.line, t.col);
        rows_clean = false;
        continue;
      }
      ct.rows[key] = std::move(probs);
    }
    if (rows_clean && static_cast<std::int64_t>(ct.rows.size()) != expect_rows)
      report(ErrKind::BadTable,
             "table of '" + t.variable + "' covers " + std::to_string(ct.rows.size()) +
                 " of " + std::to_string(expect_rows) + " conditioner combinations",
             t.line, t.col);

    for (const auto& [key, probs] : ct.rows) {
      std::vector<double> cdf(probs.size());
      double acc = 0;
      for (size_t i = 0; i < probs.size(); ++i) {
        acc += rat_to_double(probs[i]);
        cdf[i] = acc;
      }
      cdf.back() = 1.0;
      ct.cdfs[key] = std::move(cdf);
    }
    scm.tables_[var] = std::move(ct);
  }

  // Compile equations: derive parents from free variables, tabulate the body
  // over every parent combination (this is the totality check).
  for (const auto& e : raw.equations) {
    const int var = ids.at(e.target);
    CompiledEq ce;
    ce.body = e.body;
    bool ok = true;
    for (const auto& pname : free_vars(*e.body)) {
      auto it = ids.find(pname);
      if (it == ids.end()) {
        report(ErrKind::UnknownVariable,
               "equation of '" + e.target + "' references unknown '" + pname + "'", e.line,
               e.col);
        ok = false;
        continue;
      }
      if (it->second == var) {
        report(ErrKind::Cycle, "equation of '" + e.target + "' references itself", e.line,
               e.col);
        ok = false;
        continue;
      }
      ce.parents.push_back(it->second);
    }
    if (!ok) continue;

    std::int64_t combos = 1;
    for (int p : ce.parents) {
      combos *= static_cast<std::int64_t>(scm.decls_[p].domain.size());
      if (combos > kDefaultSupportCap) break;
    }
    if (combos > kDefaultSupportCap) {
      report(ErrKind::SupportTooLarge,
             "equation of '" + e.target + "' has too many parent combinations", e.line,
             e.col);
      continue;
    }
    ce.strides.assign(ce.parents.size(), 1);
    for (int i = static_cast<int>(ce.parents.size()) - 2; i >= 0; --i)
      ce.strides[i] =
          ce.strides[i + 1] *
          static_cast<std::int64_t>(scm.decls_[ce.parents[i + 1]].domain.size());

    ce.fn.resize(combos, -1);
    std::vector<int32_t> combo(ce.parents.size(), 0);
    std::vector<std::string> pnames;
    for (int p : ce.parents) pnames.push_back(scm.decls_[p].name);
    for (std::int64_t flat = 0; flat < combos; ++flat) {
      auto lookup = [&](const std::string& name) -> Value {
        for (size_t i = 0; i < pnames.size(); ++i)
          if (pnames[i] == name) return scm.decls_[ce.parents[i]].domain[combo[i]];
        throw Error(ErrKind::UnknownVariable, "unbound '" + name + "'");
      };
      std::vector<Value> combo_vals;
      for (size_t i = 0; i < combo.size(); ++i)
        combo_vals.push_back(scm.decls_[ce.parents[i]].domain[combo[i]]);
      try {
        const Value out = eval_expr(*e.body, lookup);
        const int idx = value_index_checked(var, out);
        if (idx < 0) {
          report(ErrKind::PartialFunction,
                 "equation of '" + e.target + "' maps (" + tuple_str(pnames, combo_vals) +
                     ") to " + out.str() + " outside its domain",
                 e.line, e.col);
          ok = false;
          break;
        }
        ce.fn[flat] = idx;
      } catch (const Error& err) {
        report(err.kind() == ErrKind::PartialFunction ? ErrKind::PartialFunction
                                                      : ErrKind::BadExpression,
               "equation of '" + e.target + "' at (" + tuple_str(pnames, combo_vals) +
                   "): " + err.what(),
               e.line, e.col);
        ok = false;
        break;
      }
      // advance row-major, last parent fastest
      for (int i = static_cast<int>(combo.size()) - 1; i >= 0; --i) {
        if (++combo[i] < static_cast<int32_t>(scm.decls_[ce.parents[i]].domain.size()))
          break;
        combo[i] = 0;
      }
    }
    if (!ok) continue;
    scm.eqs_[var] = std::move(ce);
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));

  // Acyclicity; Kahn's algorithm, stable by declaration order.
  std::vector<std::vector<int>> children(n);
  std::vector<int> indeg(n, 0);
  for (int v = 0; v < n; ++v)
    for (int p : scm.parents(v)) {
      children[p].push_back(v);
      ++indeg[v];
    }
  std::vector<int> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  std::vector<int> order;
  while (!ready.empty()) {
    const auto it = std::min_element(ready.begin(), ready.end());
    const int v = *it;
    ready.erase(it);
    order.push_back(v);
    for (int c : children[v])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (static_cast<int>(order.size()) != n) {
    // Walk parent links among the leftover nodes to name one cycle.
    int start = -1;
    for (int v = 0; v < n; ++v)
      if (indeg[v] > 0) {
        start = v;
        break;
      }
    std::vector<int> path;
    std::vector<int> pos(n, -1);
    int cur = start;
    while (pos[cur] < 0) {
      pos[cur] = static_cast<int>(path.size());
      path.push_back(cur);
      for (int p : scm.parents(cur))
        if (indeg[p] > 0) {
          cur = p;
          break;
        }
    }
    std::string names = scm.decls_[cur].name;
    for (int i = static_cast<int>(path.size()) - 1; i >= pos[cur]; --i)
      names += " -> " + scm.decls_[path[i]].name;
    report(ErrKind::Cycle, "cycle: " + names);
    throw ValidationError(std::move(bad));
  }
  scm.topo_ = std::move(order);
  return scm;
}

std::vector<std::string> topological_order(const Scm& scm) {
  std::vector<std::string> out;
  for (int v : scm.topo_order()) out.push_back(scm.decl(v).name);
  return out;
}

std::vector<std::pair<IdxAssign, Rat>> exogenous_support(const Scm& scm, std::int64_t cap) {
  std::vector<std::pair<IdxAssign, Rat>> out;
  IdxAssign config(scm.var_count(), -1);
  const auto& exo = scm.exogenous_vars();

  // Exogenous declaration order respects conditioner chaining, so each
  // variable's row key is fully assigned by the time we reach it.
  auto rec = [&](auto&& self, size_t i, const Rat& p) -> void {
    if (i == exo.size()) {
      if (static_cast<std::int64_t>(out.size()) >= cap)
        throw Error(ErrKind::SupportTooLarge,
                    "exogenous support exceeds cap of " + std::to_string(cap));
      out.emplace_back(config, p);
      return;
    }
    const int var = exo[i];
    const auto& table = scm.table(var);
    std::vector<int32_t> key;
    key.reserve(table.conditioners.size());
    for (int c : table.conditioners) key.push_back(config[c]);
    const auto& probs = table.rows.at(key);
    for (size_t d = 0; d < probs.size(); ++d) {
      if (probs[d] == 0) continue;
      config[var] = static_cast<int32_t>(d);
      self(self, i + 1, p * probs[d]);
    }
    config[var] = -1;
  };
  rec(rec, 0, Rat(1));
  return out;
}

Value config_value(const Scm& scm, const IdxAssign& config, const std::string& name) {
  const int var = scm.index_of(name);
  const int32_t idx = config[var];
  if (idx < 0)
    throw Error(ErrKind::BadArgument, "'" + name + "' is unset in this configuration");
  return scm.value_at(var, idx);
}

} // namespace doeng
