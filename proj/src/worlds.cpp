#include "doeng/worlds.hpp"

#include <algorithm>
#include <set>

namespace doeng {

namespace {

std::string stratum_str(const Scm& scm, const std::vector<std::string>& names,
                        const std::vector<Value>& vals) {
  (void)scm;
  std::string s;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) s += ", ";
    s += names[i] + "=" + vals[i].str();
  }
  return s;
}

// Enumerate value-index combos of `vars` in row-major domain order.
template <typename F>
void for_each_combo(const Scm& scm, const std::vector<int>& vars, F&& fn) {
  std::vector<int32_t> combo(vars.size(), 0);
  while (true) {
    fn(combo);
    int i = static_cast<int>(combo.size()) - 1;
    for (; i >= 0; --i) {
      if (++combo[i] < static_cast<int32_t>(scm.decl(vars[i]).domain.size())) break;
      combo[i] = 0;
    }
    if (i < 0) break;
  }
}

} // namespace

std::vector<Assignment> preimage(const Scm& scm, const std::string& target,
                                 const Value& value) {
  const int t = scm.index_of(target);
  if (scm.is_exogenous(t))
    throw Error(ErrKind::BadArgument, "preimage target '" + target + "' is exogenous");
  const int32_t want = scm.value_index(t, value);
  const auto& eq = scm.equation(t);

  std::vector<Assignment> out;
  if (eq.parents.empty()) {
    if (!eq.fn.empty() && eq.fn[0] == want) out.push_back({});
    return out;
  }
  for_each_combo(scm, eq.parents, [&](const std::vector<int32_t>& combo) {
    std::int64_t flat = 0;
    for (size_t i = 0; i < combo.size(); ++i) flat += combo[i] * eq.strides[i];
    if (eq.fn[flat] != want) return;
    Assignment a;
    for (size_t i = 0; i < combo.size(); ++i)
      a.emplace_back(scm.decl(eq.parents[i]).name, scm.value_at(eq.parents[i], combo[i]));
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<Assignment> conditional_preimage(const Scm& scm, const std::string& target,
                                             const Value& value, const Assignment& fixed) {
  const int t = scm.index_of(target);
  if (scm.is_exogenous(t))
    throw Error(ErrKind::BadArgument, "preimage target '" + target + "' is exogenous");
  const int32_t want = scm.value_index(t, value);
  const auto& eq = scm.equation(t);

  std::vector<int32_t> pinned(eq.parents.size(), -1);
  for (const auto& [name, val] : fixed) {
    const int var = scm.index_of(name);
    auto it = std::find(eq.parents.begin(), eq.parents.end(), var);
    if (it == eq.parents.end())
      throw Error(ErrKind::FixedNotParent,
                  "'" + name + "' is not a parent of '" + target + "'");
    pinned[it - eq.parents.begin()] = scm.value_index(var, val);
  }

  std::vector<int> remaining; // positions into eq.parents
  for (size_t i = 0; i < eq.parents.size(); ++i)
    if (pinned[i] < 0) remaining.push_back(static_cast<int>(i));

  std::vector<int> remaining_vars;
  for (int pos : remaining) remaining_vars.push_back(eq.parents[pos]);

  std::vector<Assignment> out;
  auto emit = [&](const std::vector<int32_t>& combo) {
    std::vector<int32_t> full = pinned;
    for (size_t i = 0; i < remaining.size(); ++i) full[remaining[i]] = combo[i];
    std::int64_t flat = 0;
    for (size_t i = 0; i < full.size(); ++i) flat += full[i] * eq.strides[i];
    if (eq.fn[flat] != want) return;
    Assignment a;
    for (size_t i = 0; i < remaining.size(); ++i)
      a.emplace_back(scm.decl(remaining_vars[i]).name,
                     scm.value_at(remaining_vars[i], combo[i]));
    out.push_back(std::move(a));
  };
  if (remaining.empty()) {
    std::vector<int32_t> empty;
    emit(empty);
  } else {
    for_each_combo(scm, remaining_vars, emit);
  }
  return out;
}

AttainabilityReport attainability(const Scm& scm, const std::string& target,
                                  const Value& value,
                                  const std::vector<std::string>& index,
                                  const std::vector<std::string>& control) {
  const int t = scm.index_of(target);
  (void)scm.value_index(t, value);

  std::vector<int> index_vars, control_vars;
  for (const auto& n : index) index_vars.push_back(scm.index_of(n));
  for (const auto& n : control) control_vars.push_back(scm.index_of(n));
  for (int c : control_vars)
    if (std::find(index_vars.begin(), index_vars.end(), c) != index_vars.end())
      throw Error(ErrKind::BadArgument,
                  "'" + scm.decl(c).name + "' appears in both index and control");

  const auto& eq = scm.equation(t);
  for (int c : control_vars)
    if (std::find(eq.parents.begin(), eq.parents.end(), c) == eq.parents.end())
      throw Error(ErrKind::FixedNotParent,
                  "control '" + scm.decl(c).name + "' is not a parent of '" + target + "'");
  for (int p : eq.parents) {
    const bool covered =
        std::find(control_vars.begin(), control_vars.end(), p) != control_vars.end() ||
        std::find(index_vars.begin(), index_vars.end(), p) != index_vars.end();
    if (!covered)
      throw Error(ErrKind::BadArgument, "parent '" + scm.decl(p).name + "' of '" + target +
                                            "' is neither indexed nor controlled");
  }

  // Positive-probability strata of the index variables under the observational
  // law, in deterministic (value-index) order.
  CompiledWorld obs = CompiledWorld::compile(scm, WorldSpec::observational());
  CompiledWorld::Scratch scratch;
  std::map<std::vector<int32_t>, Rat> strata;
  for (const auto& [config, p] : exogenous_support(scm)) {
    const IdxAssign& full = obs.realize(scm, config, scratch);
    std::vector<int32_t> key;
    key.reserve(index_vars.size());
    for (int v : index_vars) key.push_back(full[v]);
    strata[key] += p;
  }

  AttainabilityReport report;
  report.target = target;
  report.value = value;
  report.index = index;
  report.control = control;
  for (const auto& [key, p] : strata) {
    AttainabilityReport::Stratum s;
    s.probability = p;
    Assignment fixed;
    for (size_t i = 0; i < index_vars.size(); ++i) {
      s.index_values.push_back(scm.value_at(index_vars[i], key[i]));
      // Only index variables that are parents of the target constrain f.
      if (std::find(eq.parents.begin(), eq.parents.end(), index_vars[i]) != eq.parents.end())
        fixed.emplace_back(index[i], s.index_values.back());
    }
    s.preimage = conditional_preimage(scm, target, value, fixed);
    // Restrict completions to the control variables (the fixed call already
    // pinned index parents; any remaining parent is a control by the check
    // above, so the completions are exactly over controls).
    s.attainable = !s.preimage.empty();
    report.strata.push_back(std::move(s));
  }
  return report;
}

Selector select_first() {
  return [](const std::vector<Assignment>&) -> size_t { return 0; };
}

Selector select_last() {
  return [](const std::vector<Assignment>& xs) -> size_t { return xs.size() - 1; };
}

DynamicIntervention make_dynamic_intervention(const Scm& scm, const std::string& target,
                                              const Value& value,
                                              const std::vector<std::string>& index,
                                              const std::vector<std::string>& control,
                                              const Selector& selector) {
  AttainabilityReport report = attainability(scm, target, value, index, control);
  for (const auto& s : report.strata)
    if (!s.attainable)
      throw Error(ErrKind::UnattainableStratum,
                  "no value of {" +
                      [&] {
                        std::string j;
                        for (const auto& c : control) {
                          if (!j.empty()) j += ", ";
                          j += c;
                        }
                        return j;
                      }() +
                      "} attains " + target + "=" + value.str() + " in stratum (" +
                      stratum_str(scm, index, s.index_values) + ")");

  DynamicIntervention dyn;
  dyn.index = index;
  // Emit targets in a fixed order (control as given); each table row is the
  // selected preimage element re-ordered to match.
  dyn.targets = control;
  for (const auto& s : report.strata) {
    const Assignment& pick = s.preimage[selector(s.preimage)];
    std::vector<Value> row;
    for (const auto& c : control) {
      auto it = std::find_if(pick.begin(), pick.end(),
                             [&](const auto& kv) { return kv.first == c; });
      row.push_back(it->second);
    }
    dyn.table.emplace_back(s.index_values, std::move(row));
  }
  return dyn;
}

CompiledWorld CompiledWorld::compile(const Scm& scm, const WorldSpec& world) {
  CompiledWorld out;

  // Flatten donor worlds, donors first. Identity is the WorldSpec node;
  // revisiting one on the active chain is an import cycle.
  std::map<const WorldSpec*, int> ids;
  std::set<const WorldSpec*> on_stack;
  std::vector<const WorldSpec*> order;

  auto flatten = [&](auto&& self, const WorldSpec* w) -> int {
    auto it = ids.find(w);
    if (it != ids.end()) return it->second;
    if (on_stack.count(w))
      throw Error(ErrKind::ImportCycle, "worlds import each other cyclically");
    on_stack.insert(w);
    for (const auto& imp : w->imports) {
      if (!imp.donor)
        throw Error(ErrKind::BadArgument, "import of '" + imp.variable + "' has no donor");
      self(self, imp.donor.get());
    }
    on_stack.erase(w);
    const int id = static_cast<int>(order.size());
    order.push_back(w);
    ids[w] = id;
    return id;
  };
  flatten(flatten, &world);

  const int n = scm.var_count();
  for (const WorldSpec* w : order) {
    SubWorld sub;

    enum class Mech { Natural, Static, Dynamic, Import };
    std::vector<Mech> mech(n, Mech::Natural);
    std::vector<Step> pending(n);
    auto claim = [&](int var, Mech m) {
      if (mech[var] != Mech::Natural)
        throw Error(ErrKind::WorldConflict,
                    "variable '" + scm.decl(var).name + "' is set by two mechanisms");
      mech[var] = m;
    };

    for (const auto& [name, val] : w->statics.assignments) {
      const int var = scm.index_of(name);
      claim(var, Mech::Static);
      pending[var].kind = Step::Kind::Static;
      pending[var].var = var;
      pending[var].value = scm.value_index(var, val);
    }
    for (size_t d = 0; d < w->dynamics.size(); ++d) {
      const auto& dyn = w->dynamics[d];
      CompiledDynamic cd;
      for (const auto& iname : dyn.index) cd.index_vars.push_back(scm.index_of(iname));
      for (const auto& tname : dyn.targets) cd.target_vars.push_back(scm.index_of(tname));
      for (int tv : cd.target_vars)
        if (std::find(cd.index_vars.begin(), cd.index_vars.end(), tv) != cd.index_vars.end())
          throw Error(ErrKind::WorldConflict,
                      "'" + scm.decl(tv).name + "' is both index and target");
      for (const auto& [key_vals, tgt_vals] : dyn.table) {
        if (key_vals.size() != cd.index_vars.size() ||
            tgt_vals.size() != cd.target_vars.size())
          throw Error(ErrKind::BadArgument, "dynamic intervention row arity mismatch");
        std::vector<int32_t> key, tgt;
        for (size_t i = 0; i < key_vals.size(); ++i)
          key.push_back(scm.value_index(cd.index_vars[i], key_vals[i]));
        for (size_t i = 0; i < tgt_vals.size(); ++i)
          tgt.push_back(scm.value_index(cd.target_vars[i], tgt_vals[i]));
        if (!cd.table.emplace(std::move(key), std::move(tgt)).second)
          throw Error(ErrKind::BadArgument, "dynamic intervention repeats a stratum row");
      }
      for (size_t slot = 0; slot < cd.target_vars.size(); ++slot) {
        const int var = cd.target_vars[slot];
        claim(var, Mech::Dynamic);
        pending[var].kind = Step::Kind::Dynamic;
        pending[var].var = var;
        pending[var].dyn = static_cast<int>(d);
        pending[var].slot = static_cast<int>(slot);
      }
      sub.dynamics.push_back(std::move(cd));
    }
    for (const auto& imp : w->imports) {
      const int var = scm.index_of(imp.variable);
      claim(var, Mech::Import);
      pending[var].kind = Step::Kind::Import;
      pending[var].var = var;
      pending[var].donor = ids.at(imp.donor.get());
      pending[var].donor_var = var;
    }
    for (int var = 0; var < n; ++var) {
      if (mech[var] != Mech::Natural) continue;
      pending[var].var = var;
      pending[var].kind =
          scm.is_exogenous(var) ? Step::Kind::Config : Step::Kind::Equation;
    }

    // Effective dependency graph: dynamic targets depend on their index
    // variables; natural endogenous variables on their equation parents.
    std::vector<std::vector<int>> eff_parents(n);
    for (int var = 0; var < n; ++var) {
      switch (pending[var].kind) {
        case Step::Kind::Dynamic: {
          const auto& cd = sub.dynamics[pending[var].dyn];
          eff_parents[var] = cd.index_vars;
          break;
        }
        case Step::Kind::Equation:
          eff_parents[var] = scm.parents(var);
          break;
        default:
          break; // Config/Static/Import have no in-world dependencies
      }
    }
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> children(n);
    for (int var = 0; var < n; ++var)
      for (int p : eff_parents[var]) {
        children[p].push_back(var);
        ++indeg[var];
      }
    std::vector<int> ready;
    for (int var = 0; var < n; ++var)
      if (indeg[var] == 0) ready.push_back(var);
    std::vector<int> topo;
    while (!ready.empty()) {
      auto it = std::min_element(ready.begin(), ready.end());
      const int var = *it;
      ready.erase(it);
      topo.push_back(var);
      for (int c : children[var])
        if (--indeg[c] == 0) ready.push_back(c);
    }
    if (static_cast<int>(topo.size()) != n) {
      std::string stuck;
      for (int var = 0; var < n; ++var)
        if (indeg[var] > 0) {
          if (!stuck.empty()) stuck += ", ";
          stuck += scm.decl(var).name;
        }
      throw Error(ErrKind::IndexUnrealized,
                  "regime creates a dependency cycle among {" + stuck + "}");
    }
    for (int var : topo) sub.steps.push_back(pending[var]);
    out.worlds_.push_back(std::move(sub));
  }
  return out;
}

const IdxAssign& CompiledWorld::realize(const Scm& scm, const IdxAssign& config,
                                        Scratch& scratch) const {
  const int n = scm.var_count();
  scratch.bufs.resize(worlds_.size());
  for (size_t wi = 0; wi < worlds_.size(); ++wi) {
    const SubWorld& sub = worlds_[wi];
    IdxAssign& buf = scratch.bufs[wi];
    buf.assign(n, -1);
    for (const Step& st : sub.steps) {
      switch (st.kind) {
        case Step::Kind::Config:
          buf[st.var] = config[st.var];
          break;
        case Step::Kind::Static:
          buf[st.var] = st.value;
          break;
        case Step::Kind::Import:
          buf[st.var] = scratch.bufs[st.donor][st.donor_var];
          break;
        case Step::Kind::Equation:
          buf[st.var] = scm.equation(st.var).eval(buf);
          break;
        case Step::Kind::Dynamic: {
          const CompiledDynamic& cd = sub.dynamics[st.dyn];
          std::vector<int32_t> key;
          key.reserve(cd.index_vars.size());
          for (int iv : cd.index_vars) key.push_back(buf[iv]);
          auto it = cd.table.find(key);
          if (it == cd.table.end()) {
            std::string s;
            for (size_t i = 0; i < cd.index_vars.size(); ++i) {
              if (i) s += ", ";
              s += scm.decl(cd.index_vars[i]).name + "=" +
                   scm.value_at(cd.index_vars[i], key[i]).str();
            }
            throw Error(ErrKind::StratumNotCovered,
                        "dynamic intervention covers no row for (" + s + ")");
          }
          buf[st.var] = it->second[st.slot];
          break;
        }
      }
    }
  }
  return scratch.bufs.back();
}

Assignment realize_world(const Scm& scm, const IdxAssign& config, const WorldSpec& world) {
  CompiledWorld cw = CompiledWorld::compile(scm, world);
  CompiledWorld::Scratch scratch;
  const IdxAssign& full = cw.realize(scm, config, scratch);
  Assignment out;
  for (int v = 0; v < scm.var_count(); ++v)
    out.emplace_back(scm.decl(v).name, scm.value_at(v, full[v]));
  return out;
}

} // namespace doeng
