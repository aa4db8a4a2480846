#include "doeng/identities.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace doeng {

namespace {

std::string values_str(const std::vector<std::string>& names,
                       const std::vector<Value>& vals) {
  std::string s;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) s += ", ";
    s += names[i] + "=" + vals[i].str();
  }
  return s;
}

std::set<int> exo_closure(const Scm& scm, const std::vector<int>& seeds) {
  std::set<int> out;
  std::vector<int> stack = seeds;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (!out.insert(v).second) continue;
    if (scm.is_exogenous(v))
      for (int c : scm.table(v).conditioners) stack.push_back(c);
  }
  return out;
}

bool disjoint(const std::set<int>& a, const std::set<int>& b) {
  for (int v : a)
    if (b.count(v)) return false;
  return true;
}

Rat prob_event(const Scm& scm, const std::string& var, const Value& val,
               const WorldSpec& world,
               const std::optional<Event>& given = std::nullopt) {
  return exact_query(scm, Event{{{var, val}}}, world, given).exact;
}

Assignment to_assignment(const std::vector<std::string>& names,
                         const std::vector<Value>& vals) {
  Assignment a;
  for (size_t i = 0; i < names.size(); ++i) a.emplace_back(names[i], vals[i]);
  return a;
}

} // namespace

const char* shape_name(Shape s) {
  switch (s) {
    case Shape::Fig1a: return "fig1a";
    case Shape::Fig1b: return "fig1b";
    case Shape::Fig2a: return "fig2a";
    case Shape::Fig2b: return "fig2b";
  }
  return "?";
}

std::optional<Shape> shape_from_name(const std::string& name) {
  if (name == "fig1a") return Shape::Fig1a;
  if (name == "fig1b") return Shape::Fig1b;
  if (name == "fig2a") return Shape::Fig2a;
  if (name == "fig2b") return Shape::Fig2b;
  return std::nullopt;
}

ShapeRoles infer_roles(const Scm& scm, Shape shape, const std::string& x,
                       const std::string& y) {
  auto mismatch = [&](const std::string& why) -> Error {
    return Error(ErrKind::ShapeMismatch,
                 std::string(shape_name(shape)) + " shape: " + why);
  };

  const auto xi_id = scm.find(x), yi_id = scm.find(y);
  if (!xi_id || !yi_id) throw mismatch("missing variable '" + (xi_id ? y : x) + "'");
  const int xv = *xi_id, yv = *yi_id;
  if (scm.is_exogenous(xv) || scm.is_exogenous(yv))
    throw mismatch("treatment and outcome must be endogenous");
  if (!domain_is_binary01(scm.decl(xv).domain) || !domain_is_binary01(scm.decl(yv).domain))
    throw mismatch("treatment and outcome must be {0,1}-valued");

  std::vector<int> xp_exo, xp_endo, yp_exo, yp_endo;
  for (int p : scm.parents(xv)) (scm.is_exogenous(p) ? xp_exo : xp_endo).push_back(p);
  for (int p : scm.parents(yv)) (scm.is_exogenous(p) ? yp_exo : yp_endo).push_back(p);

  ShapeRoles roles;
  roles.shape = shape;
  roles.x = x;
  roles.y = y;

  auto names_of = [&scm](const std::vector<int>& ids) {
    std::vector<std::string> out;
    for (int v : ids) out.push_back(scm.decl(v).name);
    return out;
  };

  if (shape == Shape::Fig1a || shape == Shape::Fig1b) {
    if (!xp_endo.empty()) throw mismatch("causes of " + x + " must all be exogenous");
    if (xp_exo.empty()) throw mismatch(x + " has no exogenous cause");
    for (int p : yp_endo)
      if (p != xv) throw mismatch(y + " has endogenous parent other than " + x);
    const auto cu = exo_closure(scm, xp_exo);
    const auto cxi = exo_closure(scm, yp_exo);
    if (!disjoint(cu, cxi))
      throw mismatch("causes of " + x + " and noise of " + y + " are not independent");
    roles.u = names_of(xp_exo);
    roles.xi = names_of(yp_exo);
    if (shape == Shape::Fig1b) {
      std::vector<int> v, th;
      for (int p : xp_exo) (scm.decl(p).modifiable ? v : th).push_back(p);
      if (v.empty()) throw mismatch("no modifiable cause of " + x);
      if (th.empty()) throw mismatch("no non-modifiable cause of " + x);
      roles.v = names_of(v);
      roles.theta = names_of(th);
    }
    return roles;
  }

  if (shape == Shape::Fig2a) {
    if (xp_endo.size() != 1)
      throw mismatch(x + " must have exactly one endogenous parent");
    const int wv = xp_endo[0];
    if (wv == yv) throw mismatch(y + " cannot cause " + x);
    if (xp_exo.empty()) throw mismatch(x + " has no through-" + x + " cause");
    for (int p : yp_endo)
      if (p != xv && p != wv)
        throw mismatch(y + " has an endogenous parent outside {" + x + ", " +
                       scm.decl(wv).name + "}");
    std::vector<int> wp_exo;
    for (int p : scm.parents(wv)) {
      if (!scm.is_exogenous(p))
        throw mismatch("confounder '" + scm.decl(wv).name + "' has an endogenous parent");
      wp_exo.push_back(p);
    }
    const auto cu = exo_closure(scm, xp_exo);
    const auto cxi = exo_closure(scm, yp_exo);
    const auto ceta = exo_closure(scm, wp_exo);
    if (!disjoint(cu, cxi) || !disjoint(cu, ceta) || !disjoint(cxi, ceta))
      throw mismatch("exogenous blocks of " + x + ", " + y + ", and the confounder overlap");
    roles.w = scm.decl(wv).name;
    roles.u = names_of(xp_exo);
    roles.xi = names_of(yp_exo);
    return roles;
  }

  // Fig2b
  if (xp_endo.size() != 1) throw mismatch(x + " must have exactly one endogenous parent");
  const int wv = xp_endo[0];
  if (wv == yv) throw mismatch(y + " cannot cause " + x);
  std::vector<int> z_cands, latent;
  for (int p : xp_exo) (scm.decl(p).observed ? z_cands : latent).push_back(p);
  if (z_cands.size() != 1)
    throw mismatch("expected exactly one observed exogenous covariate among causes of " + x);
  const int zv = z_cands[0];
  if (!scm.table(zv).conditioners.empty())
    throw mismatch("observed covariate '" + scm.decl(zv).name + "' must be unconditioned");
  std::vector<int> v, th;
  for (int p : latent) (scm.decl(p).modifiable ? v : th).push_back(p);
  if (v.empty()) throw mismatch("no modifiable latent cause of " + x);
  if (th.empty()) throw mismatch("no non-modifiable latent cause of " + x);
  for (int p : yp_endo)
    if (p != xv && p != wv)
      throw mismatch(y + " has an endogenous parent outside {" + x + ", " +
                     scm.decl(wv).name + "}");
  std::vector<int> yp_latent;
  for (int p : yp_exo)
    if (p != zv) yp_latent.push_back(p);
  std::vector<int> wp_exo;
  for (int p : scm.parents(wv)) {
    if (p == zv) continue;
    if (!scm.is_exogenous(p))
      throw mismatch("confounder '" + scm.decl(wv).name + "' has an endogenous parent");
    wp_exo.push_back(p);
  }
  const auto cvt = exo_closure(scm, [&] {
    std::vector<int> s = v;
    s.insert(s.end(), th.begin(), th.end());
    return s;
  }());
  const auto cxi = exo_closure(scm, yp_latent);
  const auto ceta = exo_closure(scm, wp_exo);
  if (!disjoint(cvt, cxi) || !disjoint(cvt, ceta) || !disjoint(cxi, ceta))
    throw mismatch("latent exogenous blocks overlap");
  for (const auto& c : {cvt, cxi, ceta})
    if (c.count(zv)) throw mismatch("latent block reaches the observed covariate");

  roles.w = scm.decl(wv).name;
  roles.z = scm.decl(zv).name;
  roles.v = names_of(v);
  roles.theta = names_of(th);
  roles.xi = names_of(yp_latent);
  return roles;
}

bool matches_shape(const Scm& scm, Shape shape, const std::string& x, const std::string& y) {
  try {
    infer_roles(scm, shape, x, y);
    return true;
  } catch (const Error&) {
    return false;
  }
}

void IdentityReport::add(std::string model, Rat lhs, Rat rhs) {
  IdentityInstance inst;
  inst.model = std::move(model);
  inst.equal = lhs == rhs;
  inst.lhs = std::move(lhs);
  inst.rhs = std::move(rhs);
  if (!inst.equal) pass = false;
  instances.push_back(std::move(inst));
}

void IdentityReport::note(std::string model, Rat lhs, Rat rhs) {
  notes.push_back(IdentityNote{std::move(model), std::move(lhs), std::move(rhs)});
}

nlohmann::json IdentityReport::to_json() const {
  auto big = [](const Rat& r, bool num) {
    const BigInt v = num ? numerator(r) : denominator(r);
    static const BigInt lo = std::numeric_limits<std::int64_t>::min();
    static const BigInt hi = std::numeric_limits<std::int64_t>::max();
    if (v >= lo && v <= hi) return nlohmann::json(v.convert_to<std::int64_t>());
    return nlohmann::json(v.str());
  };
  nlohmann::json insts = nlohmann::json::array();
  for (const auto& i : instances)
    insts.push_back({{"model", i.model},
                     {"lhs_num", big(i.lhs, true)},
                     {"lhs_den", big(i.lhs, false)},
                     {"rhs_num", big(i.rhs, true)},
                     {"rhs_den", big(i.rhs, false)},
                     {"equal", i.equal}});
  nlohmann::json ns = nlohmann::json::array();
  for (const auto& n : notes)
    ns.push_back({{"model", n.model},
                  {"lhs_num", big(n.lhs, true)},
                  {"lhs_den", big(n.lhs, false)},
                  {"rhs_num", big(n.rhs, true)},
                  {"rhs_den", big(n.rhs, false)}});
  return {{"identity", identity}, {"instances", insts}, {"notes", ns}, {"pass", pass}};
}

IdentityReport check_unconfounded(const Scm& scm, const std::string& model_id,
                                  const std::string& x, const std::string& y) {
  const ShapeRoles roles = infer_roles(scm, Shape::Fig1a, x, y);
  IdentityReport report;
  report.identity = "unconfounded-cause-intervention";

  const int xv = scm.index_of(x);
  const auto& eq = scm.equation(xv);
  const Event y1{{{y, Value::rat(1)}}};

  std::map<int32_t, Rat> rhs_cache;
  const Distribution ud =
      exact_distribution(scm, roles.u, WorldSpec::observational());
  for (const auto& [key, p] : ud.probs) {
    if (p == 0) continue;
    std::vector<Value> uvals;
    for (size_t i = 0; i < roles.u.size(); ++i) uvals.push_back(ud.domains[i][key[i]]);

    // x0 = f_x(u); the equation's parents are exactly the u variables.
    IdxAssign buf(scm.var_count(), -1);
    for (size_t i = 0; i < roles.u.size(); ++i) buf[scm.index_of(roles.u[i])] = key[i];
    const int32_t x0_idx = eq.eval(buf);
    const Value x0 = scm.value_at(xv, x0_idx);

    const Rat lhs = exact_query(scm, y1, WorldSpec::do_static(to_assignment(roles.u, uvals)))
                        .exact;
    auto it = rhs_cache.find(x0_idx);
    if (it == rhs_cache.end())
      it = rhs_cache.emplace(x0_idx, prob_event(scm, y, Value::rat(1),
                                                WorldSpec::do_static({{x, x0}})))
               .first;
    report.add(model_id + " u=(" + values_str(roles.u, uvals) + ")", lhs, it->second);
  }
  return report;
}

IdentityReport check_dynamic_unconfounded(const Scm& scm, const Value& x0,
                                          const std::string& model_id, const std::string& x,
                                          const std::string& y) {
  const ShapeRoles roles = infer_roles(scm, Shape::Fig1b, x, y);
  IdentityReport report;
  report.identity = "unconfounded-dynamic-intervention";

  const Rat rhs = prob_event(scm, y, Value::rat(1), WorldSpec::do_static({{x, x0}}));
  const AttainabilityReport att = attainability(scm, x, x0, roles.theta, roles.v);

  if (att.all_attainable()) {
    const std::pair<const char*, Selector> selectors[] = {{"first", select_first()},
                                                          {"last", select_last()}};
    for (const auto& [name, sel] : selectors) {
      const DynamicIntervention dyn =
          make_dynamic_intervention(scm, x, x0, roles.theta, roles.v, sel);
      WorldSpec world;
      world.add_dynamic(dyn);
      const Rat lhs = prob_event(scm, y, Value::rat(1), world);
      report.add(model_id + " x0=" + x0.str() + " selector=" + name, lhs, rhs);
    }
  } else {
    for (const auto& s : att.strata) {
      if (s.attainable) continue;
      Event given;
      for (size_t i = 0; i < roles.theta.size(); ++i)
        given.atoms.emplace_back(roles.theta[i], s.index_values[i]);
      const Rat lhs =
          prob_event(scm, y, Value::rat(1), WorldSpec::do_static({{x, x0}}), given);
      report.add(model_id + " x0=" + x0.str() + " unattainable (" +
                     values_str(roles.theta, s.index_values) + ")",
                 lhs, rhs);
    }
  }
  return report;
}

IdentityReport check_type_i(const Scm& scm, const Value& x0, const std::string& model_id,
                            const std::string& x, const std::string& y) {
  const ShapeRoles roles = infer_roles(scm, Shape::Fig2a, x, y);
  IdentityReport report;
  report.identity = "confounded-type-i";

  const std::vector<std::string> index{roles.w};
  const Rat rhs_agg = prob_event(scm, y, Value::rat(1), WorldSpec::do_static({{x, x0}}));

  const std::pair<const char*, Selector> selectors[] = {{"first", select_first()},
                                                        {"last", select_last()}};
  for (const auto& [name, sel] : selectors) {
    const DynamicIntervention dyn =
        make_dynamic_intervention(scm, x, x0, index, roles.u, sel);
    WorldSpec world;
    world.add_dynamic(dyn);
    const Rat lhs = prob_event(scm, y, Value::rat(1), world);
    report.add(model_id + " x0=" + x0.str() + " aggregate selector=" + name, lhs, rhs_agg);

    for (const auto& [w_vals, u_vals] : dyn.table) {
      Event given;
      given.atoms.emplace_back(roles.w, w_vals[0]);
      const Rat lhs_s = exact_query(scm, Event{{{y, Value::rat(1)}}},
                                    WorldSpec::do_static(to_assignment(roles.u, u_vals)),
                                    given)
                            .exact;
      const Rat rhs_s = exact_query(scm, Event{{{y, Value::rat(1)}}},
                                    WorldSpec::do_static({{x, x0}}), given)
                            .exact;
      report.add(model_id + " x0=" + x0.str() + " stratum (" + roles.w + "=" +
                     w_vals[0].str() + ") selector=" + name,
                 lhs_s, rhs_s);
    }
  }
  return report;
}

IdentityReport check_type_ii(const Scm& scm, const Value& x0, const std::string& model_id,
                             const Selector& selector, const std::string& x,
                             const std::string& y) {
  const ShapeRoles roles = infer_roles(scm, Shape::Fig2a, x, y);
  IdentityReport report;
  report.identity = "confounded-type-ii";

  const Distribution ud = exact_distribution(scm, roles.u, WorldSpec::observational());
  for (const auto& [key, p] : ud.probs) {
    if (p == 0) continue;
    std::vector<Value> uvals;
    for (size_t i = 0; i < roles.u.size(); ++i) uvals.push_back(ud.domains[i][key[i]]);

    const auto pre = conditional_preimage(scm, x, x0, to_assignment(roles.u, uvals));
    if (pre.empty())
      throw Error(ErrKind::UnattainableStratum,
                  "no value of " + roles.w + " attains " + x + "=" + x0.str() +
                      " in stratum (" + values_str(roles.u, uvals) + ")");
    const Assignment& pick = pre[selector(pre)];
    const Value w0 = pick[0].second;

    Event given;
    for (size_t i = 0; i < roles.u.size(); ++i) given.atoms.emplace_back(roles.u[i], uvals[i]);
    const Rat lhs = exact_query(scm, Event{{{y, Value::rat(1)}}},
                                WorldSpec::do_static({{roles.w, w0}}), given)
                        .exact;
    const Rat rhs = prob_event(scm, y, Value::rat(1),
                               WorldSpec::do_static({{x, x0}, {roles.w, w0}}));
    report.add(model_id + " x0=" + x0.str() + " stratum (" + values_str(roles.u, uvals) +
                   ") w0=" + w0.str(),
               lhs, rhs);
  }

  // The aggregate is reported against do(x=x0), never asserted equal.
  const DynamicIntervention dyn =
      make_dynamic_intervention(scm, x, x0, roles.u, {roles.w}, selector);
  WorldSpec world;
  world.add_dynamic(dyn);
  const Rat agg = prob_event(scm, y, Value::rat(1), world);
  const Rat do_x = prob_event(scm, y, Value::rat(1), WorldSpec::do_static({{x, x0}}));
  report.note(model_id + " x0=" + x0.str() + " aggregate vs do(" + x + "=" + x0.str() + ")",
              agg, do_x);
  return report;
}

IdentityReport check_type_iii(const Scm& scm, const Value& x0, const std::string& model_id,
                              const std::string& x, const std::string& y) {
  const ShapeRoles roles = infer_roles(scm, Shape::Fig2a, x, y);
  IdentityReport report;
  report.identity = "confounded-type-iii";

  const auto pre = preimage(scm, x, x0);
  if (pre.empty())
    throw Error(ErrKind::EmptyPreimage, x + "=" + x0.str() + " has empty preimage");
  for (const Assignment& a : pre) {
    const Rat lhs = prob_event(scm, y, Value::rat(1), WorldSpec::do_static(a));
    Value w0;
    for (const auto& [name, val] : a)
      if (name == roles.w) w0 = val;
    const Rat rhs = prob_event(scm, y, Value::rat(1),
                               WorldSpec::do_static({{roles.w, w0}, {x, x0}}));
    std::string label;
    for (const auto& [name, val] : a) {
      if (!label.empty()) label += ", ";
      label += name + "=" + val.str();
    }
    report.add(model_id + " x0=" + x0.str() + " pair (" + label + ")", lhs, rhs);
  }
  return report;
}

Rat version_relevance_gap(const Scm& scm, const Assignment& u0, const Value& x0,
                          const Selector& pick_a, const Selector& pick_b,
                          const std::string& x, const std::string& y) {
  const ShapeRoles roles = infer_roles(scm, Shape::Fig2a, x, y);
  const auto pre = conditional_preimage(scm, x, x0, u0);
  if (pre.size() < 2)
    throw Error(ErrKind::NeedTwoVersions,
                "preimage of " + x + "=" + x0.str() + " has " +
                    std::to_string(pre.size()) + " element(s); need two versions");
  const Value wa = pre[pick_a(pre)][0].second;
  const Value wb = pre[pick_b(pre)][0].second;
  const Rat pa =
      prob_event(scm, y, Value::rat(1), WorldSpec::do_static({{roles.w, wa}, {x, x0}}));
  const Rat pb =
      prob_event(scm, y, Value::rat(1), WorldSpec::do_static({{roles.w, wb}, {x, x0}}));
  Rat gap = pa - pb;
  if (gap < 0) gap = -gap;
  return gap;
}

IdentityReport check_modifiable_confounded(const Scm& scm, const Value& x0,
                                           const std::string& model_id,
                                           const Selector& selector, const std::string& x,
                                           const std::string& y) {
  const ShapeRoles roles = infer_roles(scm, Shape::Fig2b, x, y);
  IdentityReport report;
  report.identity = "confounded-modifiable-joint";

  std::vector<std::string> index = roles.theta;
  index.push_back(roles.z);
  std::vector<std::string> control = roles.v;
  control.push_back(roles.w);

  const DynamicIntervention dyn =
      make_dynamic_intervention(scm, x, x0, index, control, selector);
  WorldSpec lhs_world;
  lhs_world.add_dynamic(dyn);
  const Rat lhs = prob_event(scm, y, Value::rat(1), lhs_world);

  // Right side: do(x = x0) plus the same stratum-indexed confounder setting.
  DynamicIntervention wdyn;
  wdyn.index = dyn.index;
  wdyn.targets = {roles.w};
  const size_t w_slot = dyn.targets.size() - 1; // control order puts w last
  for (const auto& [key, vals] : dyn.table)
    wdyn.table.emplace_back(key, std::vector<Value>{vals[w_slot]});
  WorldSpec rhs_world = WorldSpec::do_static({{x, x0}});
  rhs_world.add_dynamic(wdyn);
  const Rat rhs = prob_event(scm, y, Value::rat(1), rhs_world);

  report.add(model_id + " x0=" + x0.str(), lhs, rhs);

  const Rat do_x = prob_event(scm, y, Value::rat(1), WorldSpec::do_static({{x, x0}}));
  report.note(model_id + " x0=" + x0.str() + " joint intervention vs do(" + x + "=" +
                  x0.str() + ")",
              lhs, do_x);
  return report;
}

const std::vector<Value>* Collection::find(const std::vector<Value>& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

Collection collection_for(const Scm& scm, const std::string& target, const Value& value,
                          const std::vector<std::string>& index,
                          const std::vector<std::string>& control,
                          const Selector& selector) {
  const DynamicIntervention dyn =
      make_dynamic_intervention(scm, target, value, index, control, selector);
  Collection out;
  for (const auto& [key, vals] : dyn.table) out.entries.emplace_back(key, vals);
  return out;
}

namespace {

void validate_collection(const Scm& scm, const ShapeRoles& roles, const Collection& coll,
                         const Value& x_val, const Distribution& ud) {
  for (const auto& [key, p] : ud.probs) {
    if (p == 0) continue;
    std::vector<Value> uvals;
    for (size_t i = 0; i < roles.u.size(); ++i) uvals.push_back(ud.domains[i][key[i]]);
    const std::vector<Value>* w = coll.find(uvals);
    if (!w || w->size() != 1)
      throw Error(ErrKind::InvalidCollection,
                  "collection misses stratum (" + values_str(roles.u, uvals) + ")");
    const auto pre = conditional_preimage(scm, roles.x, x_val, to_assignment(roles.u, uvals));
    const bool ok = std::any_of(pre.begin(), pre.end(), [&](const Assignment& a) {
      return a.size() == 1 && a[0].second == (*w)[0];
    });
    if (!ok)
      throw Error(ErrKind::InvalidCollection,
                  roles.w + "=" + (*w)[0].str() + " does not attain " + roles.x + "=" +
                      x_val.str() + " in stratum (" + values_str(roles.u, uvals) + ")");
  }
}

} // namespace

DecompositionResult decompose_effect(const Scm& scm, const Collection& w1,
                                     const Collection& w0, const std::string& x,
                                     const std::string& y) {
  const ShapeRoles roles = infer_roles(scm, Shape::Fig2a, x, y);
  const Value one = Value::rat(1), zero = Value::rat(0);

  const Distribution ud = exact_distribution(scm, roles.u, WorldSpec::observational());
  validate_collection(scm, roles, w1, one, ud);
  validate_collection(scm, roles, w0, zero, ud);

  auto dyn_world = [&](const Collection& coll) {
    DynamicIntervention dyn;
    dyn.targets = {roles.w};
    dyn.index = roles.u;
    for (const auto& [key, vals] : coll.entries) dyn.table.emplace_back(key, vals);
    WorldSpec world;
    world.add_dynamic(dyn);
    return world;
  };

  DecompositionResult out;
  out.w1 = w1;
  out.w0 = w0;
  out.total = expectation(scm, y, dyn_world(w1)) - expectation(scm, y, dyn_world(w0));

  Rat indirect(0), direct(0);
  for (const auto& [key, p] : ud.probs) {
    if (p == 0) continue;
    std::vector<Value> uvals;
    for (size_t i = 0; i < roles.u.size(); ++i) uvals.push_back(ud.domains[i][key[i]]);
    const Value w1u = (*w1.find(uvals))[0];
    const Value w0u = (*w0.find(uvals))[0];
    const Rat e_w1_x1 =
        expectation(scm, y, WorldSpec::do_static({{roles.w, w1u}, {x, one}}));
    const Rat e_w1_x0 =
        expectation(scm, y, WorldSpec::do_static({{roles.w, w1u}, {x, zero}}));
    const Rat e_w0_x0 =
        expectation(scm, y, WorldSpec::do_static({{roles.w, w0u}, {x, zero}}));
    indirect += p * (e_w1_x1 - e_w1_x0);
    direct += p * (e_w1_x0 - e_w0_x0);
  }
  out.indirect = indirect;
  out.direct = direct;
  return out;
}

Rat linear_expectation(const LinearModelSpec& lin, const WorldSpec& world) {
  const Scm& scm = lin.block;
  const int xv = scm.index_of(lin.x);
  std::vector<int> wv;
  for (const auto& name : lin.w) wv.push_back(scm.index_of(name));
  for (int v : wv)
    for (const auto& val : scm.decl(v).domain)
      if (!val.is_rat())
        throw Error(ErrKind::NonNumericVariable,
                    "'" + scm.decl(v).name + "' must be numeric in a linear outcome");
  if (!lin.gamma.empty() && lin.gamma.size() != lin.w.size())
    throw Error(ErrKind::BadArgument, "gamma size must match the w components");
  if (lin.alpha.size() != lin.w.size())
    throw Error(ErrKind::BadArgument, "alpha size must match the w components");

  Rat exi(0), pxi(0);
  for (const auto& [val, p] : lin.xi) {
    exi += val * p;
    pxi += p;
  }
  if (pxi != 1) throw Error(ErrKind::BadTable, "xi support sums to " + rat_to_string(pxi));

  CompiledWorld cw = CompiledWorld::compile(scm, world);
  CompiledWorld::Scratch scratch;
  Rat sum(0);
  for (const auto& [config, p] : exogenous_support(scm)) {
    const IdxAssign& full = cw.realize(scm, config, scratch);
    const Rat xval = scm.value_at(xv, full[xv]).as_rat();
    Rat yv = lin.beta * xval;
    for (size_t i = 0; i < wv.size(); ++i) {
      const Rat wval = scm.value_at(wv[i], full[wv[i]]).as_rat();
      yv += lin.alpha[i] * wval;
      if (!lin.gamma.empty()) yv += lin.gamma[i] * wval * xval;
    }
    sum += p * yv;
  }
  return sum + exi;
}

Rat linear_ace(const LinearModelSpec& lin) {
  return linear_expectation(lin, WorldSpec::do_static({{lin.x, Value::rat(1)}})) -
         linear_expectation(lin, WorldSpec::do_static({{lin.x, Value::rat(0)}}));
}

namespace {

// Exogenous causes of x inside the linear block (everything except the w set).
std::vector<std::string> linear_u_vars(const LinearModelSpec& lin) {
  const Scm& scm = lin.block;
  std::vector<std::string> u;
  for (int p : scm.parents(scm.index_of(lin.x))) {
    const std::string& name = scm.decl(p).name;
    if (std::find(lin.w.begin(), lin.w.end(), name) != lin.w.end()) continue;
    if (!scm.is_exogenous(p))
      throw Error(ErrKind::ShapeMismatch,
                  "linear block: parent '" + name + "' of " + lin.x +
                      " is endogenous and not a w component");
    u.push_back(name);
  }
  if (u.empty())
    throw Error(ErrKind::ShapeMismatch, "linear block: " + lin.x + " has no u causes");
  return u;
}

void validate_linear_collection(const LinearModelSpec& lin,
                                const std::vector<std::string>& u, const Collection& coll,
                                const Value& x_val, const Distribution& ud) {
  const Scm& scm = lin.block;
  for (const auto& [key, p] : ud.probs) {
    if (p == 0) continue;
    std::vector<Value> uvals;
    for (size_t i = 0; i < u.size(); ++i) uvals.push_back(ud.domains[i][key[i]]);
    const std::vector<Value>* w = coll.find(uvals);
    if (!w || w->size() != lin.w.size())
      throw Error(ErrKind::InvalidCollection,
                  "collection misses stratum (" + values_str(u, uvals) + ")");
    Assignment fixed = to_assignment(u, uvals);
    const auto pre = conditional_preimage(scm, lin.x, x_val, fixed);
    const bool ok = std::any_of(pre.begin(), pre.end(), [&](const Assignment& a) {
      if (a.size() != lin.w.size()) return false;
      for (size_t i = 0; i < lin.w.size(); ++i) {
        auto it = std::find_if(a.begin(), a.end(),
                               [&](const auto& kv) { return kv.first == lin.w[i]; });
        if (it == a.end() || !(it->second == (*w)[i])) return false;
      }
      return true;
    });
    if (!ok)
      throw Error(ErrKind::InvalidCollection,
                  "collection value does not attain " + lin.x + "=" + x_val.str() +
                      " in stratum (" + values_str(u, uvals) + ")");
  }
}

} // namespace

Rat linear_indirect(const LinearModelSpec& lin, const Collection& w1) {
  const Scm& scm = lin.block;
  const std::vector<std::string> u = linear_u_vars(lin);
  const Distribution ud = exact_distribution(scm, u, WorldSpec::observational());
  validate_linear_collection(lin, u, w1, Value::rat(1), ud);

  Rat sum(0);
  for (const auto& [key, p] : ud.probs) {
    if (p == 0) continue;
    std::vector<Value> uvals;
    for (size_t i = 0; i < u.size(); ++i) uvals.push_back(ud.domains[i][key[i]]);
    const std::vector<Value>& wvals = *w1.find(uvals);
    Assignment set1, set0;
    for (size_t i = 0; i < lin.w.size(); ++i) {
      set1.emplace_back(lin.w[i], wvals[i]);
      set0.emplace_back(lin.w[i], wvals[i]);
    }
    set1.emplace_back(lin.x, Value::rat(1));
    set0.emplace_back(lin.x, Value::rat(0));
    sum += p * (linear_expectation(lin, WorldSpec::do_static(set1)) -
                linear_expectation(lin, WorldSpec::do_static(set0)));
  }
  return sum;
}

IdentityReport check_linear(const LinearModelSpec& lin, const Collection& w1,
                            const Collection& w0, const std::string& model_id) {
  IdentityReport report;
  report.identity = "linear-indirect-vs-ace";

  const std::vector<std::string> u = linear_u_vars(lin);
  const Distribution ud = exact_distribution(lin.block, u, WorldSpec::observational());
  validate_linear_collection(lin, u, w0, Value::rat(0), ud);

  const Rat ind = linear_indirect(lin, w1);
  const Rat ac = linear_ace(lin);
  const bool no_interaction =
      lin.gamma.empty() ||
      std::all_of(lin.gamma.begin(), lin.gamma.end(), [](const Rat& g) { return g == 0; });
  if (no_interaction) {
    report.add(model_id + " indirect = ace", ind, ac);
    report.add(model_id + " indirect = beta", ind, lin.beta);
  } else {
    report.note(model_id + " indirect vs ace (interaction present)", ind, ac);
  }
  return report;
}

IdentityReport check_adjustment(const Scm& scm, const std::string& model_id,
                                const std::string& x, const std::string& y) {
  std::vector<std::string> adjust;
  if (matches_shape(scm, Shape::Fig2a, x, y)) {
    adjust = {infer_roles(scm, Shape::Fig2a, x, y).w};
  } else if (matches_shape(scm, Shape::Fig2b, x, y)) {
    const ShapeRoles roles = infer_roles(scm, Shape::Fig2b, x, y);
    adjust = {roles.w, roles.z};
  } else {
    throw Error(ErrKind::ShapeMismatch, "no back-door set known for this graph");
  }

  IdentityReport report;
  report.identity = "backdoor-adjustment-equals-ace";
  const Rat adj = adjustment_ace(scm, x, y, adjust).exact;
  const Rat ac = ace(scm, x, y).exact;
  std::string set = "{";
  for (size_t i = 0; i < adjust.size(); ++i) set += (i ? ", " : "") + adjust[i];
  set += "}";
  report.add(model_id + " adjust " + set, adj, ac);
  try {
    const Rat naive = adjustment_ace(scm, x, y, {}).exact;
    report.note(model_id + " naive contrast vs ace", naive, ac);
  } catch (const Error&) {
    // marginal positivity can fail on degenerate models; the note is optional
  }
  return report;
}

IdentityReport check_ignorability(const Scm& scm, const std::string& model_id,
                                  const std::string& x, const std::string& y) {
  std::vector<std::string> cond;
  if (matches_shape(scm, Shape::Fig2a, x, y)) {
    cond = {infer_roles(scm, Shape::Fig2a, x, y).w};
  } else if (matches_shape(scm, Shape::Fig1a, x, y)) {
    cond = {};
  } else {
    throw Error(ErrKind::ShapeMismatch, "ignorability diagnostic needs fig1a or fig2a");
  }

  IdentityReport report;
  report.identity = cond.empty() ? "ignorability-marginal" : "ignorability-given-confounder";
  for (int xv = 0; xv <= 1; ++xv) {
    std::vector<std::pair<std::string, WorldSpec>> pairs;
    pairs.emplace_back(y, WorldSpec::do_static({{x, Value::rat(xv)}}));
    pairs.emplace_back(x, WorldSpec::observational());
    for (const auto& c : cond) pairs.emplace_back(c, WorldSpec::observational());
    const Distribution joint = counterfactual_joint(scm, pairs);
    const auto [ok, dev] = cond_indep(joint, {y}, {x}, cond);
    (void)ok;
    report.add(model_id + " x0=" + std::to_string(xv), dev, Rat(0));
  }
  return report;
}

VerifyOutcome run_applicable_checks(const Scm& scm, const std::string& model_id,
                                    const std::string& x, const std::string& y) {
  VerifyOutcome out;
  auto run = [&](const std::string& what, auto&& fn) {
    try {
      IdentityReport r = fn();
      if (!r.pass) out.pass = false;
      out.reports.push_back(std::move(r));
    } catch (const Error& e) {
      out.skipped.push_back(what + ": " + e.what());
    }
  };
  const Value zero = Value::rat(0), one = Value::rat(1);

  run("unconfounded", [&] { return check_unconfounded(scm, model_id, x, y); });
  for (const Value& x0 : {zero, one}) {
    run("dynamic-unconfounded x0=" + x0.str(),
        [&] { return check_dynamic_unconfounded(scm, x0, model_id, x, y); });
    run("type-i x0=" + x0.str(), [&] { return check_type_i(scm, x0, model_id, x, y); });
    run("type-ii x0=" + x0.str(),
        [&] { return check_type_ii(scm, x0, model_id, select_first(), x, y); });
    run("type-iii x0=" + x0.str(), [&] { return check_type_iii(scm, x0, model_id, x, y); });
    run("modifiable-confounded x0=" + x0.str(),
        [&] { return check_modifiable_confounded(scm, x0, model_id, select_first(), x, y); });
  }
  run("decomposition", [&] {
    const ShapeRoles roles = infer_roles(scm, Shape::Fig2a, x, y);
    const Collection w1 = collection_for(scm, x, one, roles.u, {roles.w});
    const Collection w0 = collection_for(scm, x, zero, roles.u, {roles.w});
    const DecompositionResult d = decompose_effect(scm, w1, w0, x, y);
    IdentityReport r;
    r.identity = "decomposition-total-split";
    r.add(model_id + " total = indirect + direct", d.total, d.indirect + d.direct);
    r.note(model_id + " indirect vs direct", d.indirect, d.direct);
    return r;
  });
  run("adjustment", [&] { return check_adjustment(scm, model_id, x, y); });
  run("ignorability", [&] { return check_ignorability(scm, model_id, x, y); });
  return out;
}

// ---- random model generation ----

namespace {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // Small-range draw; bias is irrelevant here, determinism is not.
  int below(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

private:
  std::mt19937_64 engine_;
};

Domain numeric_domain(int size) {
  Domain d;
  for (int i = 0; i < size; ++i) d.push_back(Value::rat(i));
  return d;
}

// Strictly positive probabilities with denominator max_den, summing to 1:
// distinct cut points of the [0, max_den] segment.
std::vector<Rat> random_row(Rng& rng, int k, int max_den) {
  if (k == 1) return {Rat(1)};
  std::set<int> cuts;
  while (static_cast<int>(cuts.size()) < k - 1) cuts.insert(1 + rng.below(max_den - 1));
  std::vector<int> edges{0};
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(max_den);
  std::vector<Rat> out;
  for (int i = 0; i + 1 < static_cast<int>(edges.size()); ++i)
    out.emplace_back(edges[i + 1] - edges[i], max_den);
  return out;
}

RawExoTable random_table(Rng& rng, const RandomScmConfig& cfg, const std::string& name,
                         const Domain& dom,
                         const std::vector<std::pair<std::string, Domain>>& conditioners = {}) {
  RawExoTable t;
  t.variable = name;
  for (const auto& [cname, cdom] : conditioners) t.conditioners.push_back(cname);

  std::vector<std::vector<Value>> keys;
  if (conditioners.empty()) {
    keys.push_back({});
  } else {
    std::vector<size_t> idx(conditioners.size(), 0);
    while (true) {
      std::vector<Value> key;
      for (size_t i = 0; i < idx.size(); ++i) key.push_back(conditioners[i].second[idx[i]]);
      keys.push_back(std::move(key));
      int i = static_cast<int>(idx.size()) - 1;
      for (; i >= 0; --i) {
        if (++idx[i] < conditioners[i].second.size()) break;
        idx[i] = 0;
      }
      if (i < 0) break;
    }
  }
  for (auto& key : keys) {
    RawTableRow row;
    row.given = key;
    const auto probs = random_row(rng, static_cast<int>(dom.size()), cfg.max_denominator);
    for (size_t i = 0; i < dom.size(); ++i) row.probs.emplace_back(dom[i], probs[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Random lookup table expression over the given parents.
ExprPtr random_fn(Rng& rng, const std::vector<std::pair<std::string, Domain>>& parents,
                  const Domain& target, const std::function<bool(const std::vector<int>&)>& accept) {
  std::int64_t combos = 1;
  for (const auto& [n, d] : parents) combos *= static_cast<std::int64_t>(d.size());
  std::vector<int> fn(combos);
  do {
    for (auto& v : fn) v = rng.below(static_cast<int>(target.size()));
  } while (accept && !accept(fn));

  std::vector<std::string> names;
  for (const auto& [n, d] : parents) names.push_back(n);
  std::vector<std::pair<std::vector<Value>, Value>> rows;
  std::vector<size_t> idx(parents.size(), 0);
  for (std::int64_t flat = 0; flat < combos; ++flat) {
    std::vector<Value> key;
    for (size_t i = 0; i < idx.size(); ++i) key.push_back(parents[i].second[idx[i]]);
    rows.emplace_back(std::move(key), target[fn[flat]]);
    int i = static_cast<int>(idx.size()) - 1;
    for (; i >= 0; --i) {
      if (++idx[i] < parents[i].second.size()) break;
      idx[i] = 0;
    }
  }
  return Expr::table(std::move(names), std::move(rows));
}

std::uint64_t shape_seed(std::uint64_t seed, Shape shape) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(shape) + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

VariableDecl exo_decl(const std::string& name, Domain dom, bool observed = false,
                      bool modifiable = false) {
  VariableDecl d;
  d.name = name;
  d.domain = std::move(dom);
  d.kind = VarKind::Exogenous;
  d.observed = observed;
  d.modifiable = modifiable;
  return d;
}

VariableDecl endo_decl(const std::string& name, Domain dom) {
  VariableDecl d;
  d.name = name;
  d.domain = std::move(dom);
  d.kind = VarKind::Endogenous;
  return d;
}

} // namespace

Scm random_scm(std::uint64_t seed, Shape shape, const RandomScmConfig& cfg) {
  Rng rng(shape_seed(seed, shape));
  const Domain bin = numeric_domain(2);
  auto dsize = [&rng, &cfg] { return 2 + rng.below(cfg.max_domain - 1); };

  RawModel raw;
  if (shape == Shape::Fig1a) {
    const Domain du = numeric_domain(dsize());
    raw.decls = {exo_decl("U", du), exo_decl("xi", bin), endo_decl("X", bin),
                 endo_decl("Y", bin)};
    raw.tables = {random_table(rng, cfg, "U", du), random_table(rng, cfg, "xi", bin)};
    raw.equations.push_back({"X", random_fn(rng, {{"U", du}}, bin, nullptr), 0, 0});
    raw.equations.push_back(
        {"Y", random_fn(rng, {{"X", bin}, {"xi", bin}}, bin, nullptr), 0, 0});
    return Scm::validate(raw);
  }

  if (shape == Shape::Fig1b) {
    const Domain dt = numeric_domain(dsize());
    const Domain dv = numeric_domain(dsize());
    raw.decls = {exo_decl("theta", dt), exo_decl("V", dv, false, true), exo_decl("xi", bin),
                 endo_decl("X", bin), endo_decl("Y", bin)};
    raw.tables = {random_table(rng, cfg, "theta", dt),
                  random_table(rng, cfg, "V", dv, {{"theta", dt}}),
                  random_table(rng, cfg, "xi", bin)};
    // fn flat over (V, theta), theta fastest.
    auto accept = [&](const std::vector<int>& fn) -> bool {
      if (!cfg.all_strata_attainable) return true;
      for (size_t t = 0; t < dt.size(); ++t) {
        bool has0 = false, has1 = false;
        for (size_t v = 0; v < dv.size(); ++v) {
          const int out = fn[v * dt.size() + t];
          (out ? has1 : has0) = true;
        }
        if (!has0 || !has1) return false;
      }
      return true;
    };
    raw.equations.push_back({"X", random_fn(rng, {{"V", dv}, {"theta", dt}}, bin, accept), 0, 0});
    raw.equations.push_back(
        {"Y", random_fn(rng, {{"X", bin}, {"xi", bin}}, bin, nullptr), 0, 0});
    return Scm::validate(raw);
  }

  if (shape == Shape::Fig2a) {
    const Domain dw = numeric_domain(dsize());
    const Domain du = numeric_domain(dsize());
    raw.decls = {exo_decl("eta", dw), exo_decl("U", du), exo_decl("xi", bin),
                 endo_decl("W", dw), endo_decl("X", bin), endo_decl("Y", bin)};
    raw.tables = {random_table(rng, cfg, "eta", dw), random_table(rng, cfg, "U", du),
                  random_table(rng, cfg, "xi", bin)};
    raw.equations.push_back({"W", Expr::ref("eta"), 0, 0});
    // Both conditional preimages nonempty: each U-row surjective over W and
    // each W-column surjective over U.
    auto accept = [&](const std::vector<int>& fn) -> bool {
      for (size_t u = 0; u < du.size(); ++u) {
        bool has0 = false, has1 = false;
        for (size_t w = 0; w < dw.size(); ++w) (fn[u * dw.size() + w] ? has1 : has0) = true;
        if (!has0 || !has1) return false;
      }
      for (size_t w = 0; w < dw.size(); ++w) {
        bool has0 = false, has1 = false;
        for (size_t u = 0; u < du.size(); ++u) (fn[u * dw.size() + w] ? has1 : has0) = true;
        if (!has0 || !has1) return false;
      }
      return true;
    };
    raw.equations.push_back({"X", random_fn(rng, {{"U", du}, {"W", dw}}, bin, accept), 0, 0});
    if (cfg.y_reads_w)
      raw.equations.push_back(
          {"Y", random_fn(rng, {{"X", bin}, {"W", dw}, {"xi", bin}}, bin, nullptr), 0, 0});
    else
      raw.equations.push_back(
          {"Y", random_fn(rng, {{"X", bin}, {"xi", bin}}, bin, nullptr), 0, 0});
    return Scm::validate(raw);
  }

  // Fig2b: four exogenous variables; W is a deterministic function of Z.
  const Domain dz = bin;
  const Domain dt = bin;
  const Domain dv = numeric_domain(dsize());
  const Domain dw = bin;
  raw.decls = {exo_decl("Z", dz, true, false), exo_decl("theta", dt),
               exo_decl("V", dv, false, true), exo_decl("xi", bin), endo_decl("W", dw),
               endo_decl("X", bin), endo_decl("Y", bin)};
  raw.tables = {random_table(rng, cfg, "Z", dz), random_table(rng, cfg, "theta", dt),
                random_table(rng, cfg, "V", dv, {{"theta", dt}}),
                random_table(rng, cfg, "xi", bin)};
  raw.equations.push_back({"W", random_fn(rng, {{"Z", dz}}, dw, nullptr), 0, 0});
  // fn flat over (V, theta, W, Z), Z fastest. Joint (v,w) preimages nonempty
  // per (theta, z); both X arms reachable per (w, z) for positivity.
  const size_t nt = dt.size(), nw = dw.size(), nz = dz.size();
  auto at = [&](const std::vector<int>& fn, size_t v, size_t t, size_t w, size_t z) {
    return fn[((v * nt + t) * nw + w) * nz + z];
  };
  auto accept = [&](const std::vector<int>& fn) -> bool {
    for (size_t t = 0; t < nt; ++t)
      for (size_t z = 0; z < nz; ++z) {
        bool has0 = false, has1 = false;
        for (size_t v = 0; v < dv.size(); ++v)
          for (size_t w = 0; w < nw; ++w) (at(fn, v, t, w, z) ? has1 : has0) = true;
        if (!has0 || !has1) return false;
      }
    for (size_t w = 0; w < nw; ++w)
      for (size_t z = 0; z < nz; ++z) {
        bool has0 = false, has1 = false;
        for (size_t v = 0; v < dv.size(); ++v)
          for (size_t t = 0; t < nt; ++t) (at(fn, v, t, w, z) ? has1 : has0) = true;
        if (!has0 || !has1) return false;
      }
    return true;
  };
  raw.equations.push_back(
      {"X", random_fn(rng, {{"V", dv}, {"theta", dt}, {"W", dw}, {"Z", dz}}, bin, accept), 0,
       0});
  raw.equations.push_back(
      {"Y", random_fn(rng, {{"X", bin}, {"W", dw}, {"Z", dz}, {"xi", bin}}, bin, nullptr), 0,
       0});
  return Scm::validate(raw);
}

} // namespace doeng
