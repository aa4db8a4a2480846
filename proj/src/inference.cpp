#include "doeng/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace doeng {

namespace {

std::string fmt_double(double v, const char* fmt = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

nlohmann::json big_to_json(const BigInt& v) {
  static const BigInt lo = std::numeric_limits<std::int64_t>::min();
  static const BigInt hi = std::numeric_limits<std::int64_t>::max();
  if (v >= lo && v <= hi) return v.convert_to<std::int64_t>();
  return v.str();
}

struct CompiledEvent {
  std::vector<std::pair<int, int32_t>> atoms;
  bool satisfied(const IdxAssign& buf) const {
    for (const auto& [var, idx] : atoms)
      if (buf[var] != idx) return false;
    return true;
  }
};

CompiledEvent compile_event(const Scm& scm, const Event& e) {
  CompiledEvent out;
  for (const auto& [name, val] : e.atoms) {
    const int var = scm.index_of(name);
    out.atoms.emplace_back(var, scm.value_index(var, val));
  }
  return out;
}

// splitmix64; used to derive independent per-chunk seeds.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk) {
  return mix64(mix64(seed) ^ mix64(chunk + 1));
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

constexpr std::int64_t kChunk = 1 << 16;

// Draws exogenous configurations from the declared tables.
class ExoSampler {
public:
  explicit ExoSampler(const Scm& scm) : scm_(scm) {
    for (int v : scm.exogenous_vars()) vars_.push_back(v);
  }

  void sample(std::mt19937_64& rng, IdxAssign& config) const {
    for (int v : vars_) {
      const auto& table = scm_.table(v);
      std::vector<int32_t> key;
      key.reserve(table.conditioners.size());
      for (int c : table.conditioners) key.push_back(config[c]);
      const auto& cdf = table.cdfs.at(key);
      const double u = uniform01(rng);
      int32_t idx = 0;
      while (idx + 1 < static_cast<int32_t>(cdf.size()) && u >= cdf[idx]) ++idx;
      config[v] = idx;
    }
  }

private:
  const Scm& scm_;
  std::vector<int> vars_;
};

} // namespace

std::string Event::str() const {
  std::string s;
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (i) s += ", ";
    s += atoms[i].first + "=" + atoms[i].second.str();
  }
  return s;
}

Rat Distribution::mass(const std::vector<std::pair<std::string, Value>>& constraints) const {
  std::vector<std::pair<size_t, int32_t>> want;
  for (const auto& [label, val] : constraints) {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end())
      throw Error(ErrKind::UnknownVariable, "no column '" + label + "' in distribution");
    const size_t col = it - labels.begin();
    int32_t idx = -1;
    for (size_t i = 0; i < domains[col].size(); ++i)
      if (domains[col][i] == val) idx = static_cast<int32_t>(i);
    if (idx < 0) return Rat(0);
    want.emplace_back(col, idx);
  }
  Rat sum(0);
  for (const auto& [key, p] : probs) {
    bool match = true;
    for (const auto& [col, idx] : want)
      if (key[col] != idx) {
        match = false;
        break;
      }
    if (match) sum += p;
  }
  return sum;
}

Rat Distribution::total() const {
  Rat sum(0);
  for (const auto& [key, p] : probs) sum += p;
  return sum;
}

nlohmann::json Distribution::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, p] : probs) {
    nlohmann::json vals = nlohmann::json::array();
    for (size_t i = 0; i < key.size(); ++i) vals.push_back(domains[i][key[i]].str());
    entries.push_back({{"values", vals},
                       {"num", big_to_json(numerator(p))},
                       {"den", big_to_json(denominator(p))}});
  }
  return {{"vars", labels}, {"entries", entries}};
}

QueryResult QueryResult::exact_result(std::string query, Rat value) {
  QueryResult r;
  r.method = Method::Exact;
  r.query = std::move(query);
  r.exact = std::move(value);
  return r;
}

QueryResult QueryResult::mc_result(std::string query, double value, double se,
                                   std::int64_t n, std::uint64_t seed) {
  QueryResult r;
  r.method = Method::MonteCarlo;
  r.query = std::move(query);
  r.value = value;
  r.stderr_ = se;
  r.n = n;
  r.seed = seed;
  return r;
}

nlohmann::json QueryResult::to_json() const {
  if (method == Method::Exact)
    return {{"query", query},
            {"method", "exact"},
            {"num", big_to_json(numerator(exact))},
            {"den", big_to_json(denominator(exact))}};
  return {{"query", query}, {"method", "mc"},   {"value", value},
          {"stderr", stderr_}, {"n", n}, {"seed", seed}};
}

std::string QueryResult::to_text() const {
  if (method == Method::Exact)
    return rat_to_string(exact) + " = " + fmt_double(rat_to_double(exact));
  return fmt_double(value) + " ± " + fmt_double(stderr_, "%.4g") + " (n=" +
         std::to_string(n) + ", seed=" + std::to_string(seed) + ")";
}

std::optional<size_t> Dataset::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<size_t>(it - columns.begin());
}

Distribution exact_distribution(const Scm& scm, const std::vector<std::string>& vars,
                                const WorldSpec& world, std::int64_t cap) {
  Distribution dist;
  std::vector<int> ids;
  for (const auto& name : vars) {
    const int v = scm.index_of(name);
    ids.push_back(v);
    dist.labels.push_back(name);
    dist.domains.push_back(scm.decl(v).domain);
  }
  CompiledWorld cw = CompiledWorld::compile(scm, world);
  CompiledWorld::Scratch scratch;
  for (const auto& [config, p] : exogenous_support(scm, cap)) {
    const IdxAssign& full = cw.realize(scm, config, scratch);
    std::vector<int32_t> key;
    key.reserve(ids.size());
    for (int v : ids) key.push_back(full[v]);
    dist.probs[key] += p;
  }
  return dist;
}

QueryResult exact_query(const Scm& scm, const Event& event, const WorldSpec& world,
                        const std::optional<Event>& given, std::int64_t cap) {
  const CompiledEvent ev = compile_event(scm, event);
  std::optional<CompiledEvent> gv;
  if (given) gv = compile_event(scm, *given);

  CompiledWorld cw = CompiledWorld::compile(scm, world);
  CompiledWorld::Scratch scratch;
  Rat joint(0), denom(0);
  for (const auto& [config, p] : exogenous_support(scm, cap)) {
    const IdxAssign& full = cw.realize(scm, config, scratch);
    const bool g = !gv || gv->satisfied(full);
    if (!g) continue;
    denom += p;
    if (ev.satisfied(full)) joint += p;
  }
  if (gv && denom == 0)
    throw Error(ErrKind::ZeroConditioningEvent,
                "conditioning event {" + given->str() + "} has probability 0");
  const Rat value = gv ? Rat(joint / denom) : joint;
  std::string q = "P(" + event.str();
  if (given) q += " | given " + given->str();
  q += ")";
  return QueryResult::exact_result(std::move(q), value);
}

Rat expectation(const Scm& scm, const std::string& var, const WorldSpec& world,
                std::int64_t cap) {
  const int v = scm.index_of(var);
  for (const auto& val : scm.decl(v).domain)
    if (!val.is_rat())
      throw Error(ErrKind::NonNumericVariable,
                  "'" + var + "' has symbolic values; expectation undefined");
  CompiledWorld cw = CompiledWorld::compile(scm, world);
  CompiledWorld::Scratch scratch;
  Rat sum(0);
  for (const auto& [config, p] : exogenous_support(scm, cap)) {
    const IdxAssign& full = cw.realize(scm, config, scratch);
    sum += p * scm.value_at(v, full[v]).as_rat();
  }
  return sum;
}

namespace {

void require_binary(const Scm& scm, const std::string& name) {
  if (!domain_is_binary01(scm.decl(scm.index_of(name)).domain))
    throw Error(ErrKind::NonBinaryVariable, "'" + name + "' is not {0,1}-valued");
}

} // namespace

QueryResult ace(const Scm& scm, const std::string& x, const std::string& y,
                std::int64_t cap) {
  require_binary(scm, x);
  require_binary(scm, y);
  const Event y1{{{y, Value::rat(1)}}};
  const Rat p1 =
      exact_query(scm, y1, WorldSpec::do_static({{x, Value::rat(1)}}), std::nullopt, cap)
          .exact;
  const Rat p0 =
      exact_query(scm, y1, WorldSpec::do_static({{x, Value::rat(0)}}), std::nullopt, cap)
          .exact;
  return QueryResult::exact_result("ace " + x + " -> " + y, p1 - p0);
}

QueryResult adjustment_ace(const Scm& scm, const std::string& x, const std::string& y,
                           const std::vector<std::string>& adjust, std::int64_t cap) {
  require_binary(scm, x);
  require_binary(scm, y);

  std::vector<std::string> cols = adjust;
  cols.push_back(x);
  cols.push_back(y);
  const Distribution joint = exact_distribution(scm, cols, WorldSpec::observational(), cap);
  const size_t k = adjust.size();

  // Stratum -> (P(w), P(x=1,w), P(y=1,x=1,w), P(x=0,w), P(y=1,x=0,w))
  const int32_t x1 = scm.value_index(scm.index_of(x), Value::rat(1));
  const int32_t y1 = scm.value_index(scm.index_of(y), Value::rat(1));
  struct Cell {
    Rat w, x1w, y1x1w, x0w, y1x0w;
  };
  std::map<std::vector<int32_t>, Cell> strata;
  for (const auto& [key, p] : joint.probs) {
    std::vector<int32_t> w(key.begin(), key.begin() + k);
    Cell& c = strata[w];
    c.w += p;
    const bool is_x1 = key[k] == x1;
    const bool is_y1 = key[k + 1] == y1;
    if (is_x1) {
      c.x1w += p;
      if (is_y1) c.y1x1w += p;
    } else {
      c.x0w += p;
      if (is_y1) c.y1x0w += p;
    }
  }

  Rat sum(0);
  for (const auto& [wkey, c] : strata) {
    if (c.w == 0) continue; // zero-weight strata never materialize here anyway
    if (c.x1w == 0 || c.x0w == 0) {
      std::string s;
      for (size_t i = 0; i < k; ++i) {
        if (i) s += ", ";
        s += adjust[i] + "=" + joint.domains[i][wkey[i]].str();
      }
      if (k == 0) s = "(marginal)";
      throw Error(ErrKind::PositivityViolation,
                  "P(" + x + "=1 | " + s + ") is " + (c.x1w == 0 ? "0" : "1"));
    }
    sum += (c.y1x1w / c.x1w - c.y1x0w / c.x0w) * c.w;
  }
  std::string q = "ace " + x + " -> " + y + " adjust {";
  for (size_t i = 0; i < adjust.size(); ++i) q += (i ? ", " : "") + adjust[i];
  q += "}";
  return QueryResult::exact_result(std::move(q), sum);
}

Distribution counterfactual_joint(const Scm& scm,
                                  const std::vector<std::pair<std::string, WorldSpec>>& pairs,
                                  std::int64_t cap) {
  Distribution dist;
  std::vector<int> ids;
  std::map<std::string, int> seen;
  for (const auto& [name, world] : pairs) {
    const int v = scm.index_of(name);
    ids.push_back(v);
    int& count = seen[name];
    dist.labels.push_back(count == 0 ? name : name + "#" + std::to_string(count));
    ++count;
    dist.domains.push_back(scm.decl(v).domain);
  }
  // Re-label first occurrences of duplicated names as name#0.
  for (size_t i = 0; i < pairs.size(); ++i)
    if (seen[pairs[i].first] > 1 && dist.labels[i] == pairs[i].first)
      dist.labels[i] = pairs[i].first + "#0";

  std::vector<CompiledWorld> worlds;
  for (const auto& [name, world] : pairs) worlds.push_back(CompiledWorld::compile(scm, world));
  std::vector<CompiledWorld::Scratch> scratch(worlds.size());

  for (const auto& [config, p] : exogenous_support(scm, cap)) {
    std::vector<int32_t> key;
    key.reserve(ids.size());
    for (size_t i = 0; i < worlds.size(); ++i) {
      const IdxAssign& full = worlds[i].realize(scm, config, scratch[i]);
      key.push_back(full[ids[i]]);
    }
    dist.probs[key] += p;
  }
  return dist;
}

std::pair<bool, Rat> cond_indep(const Distribution& joint, const std::vector<std::string>& a,
                                const std::vector<std::string>& b,
                                const std::vector<std::string>& c) {
  auto cols_of = [&joint](const std::vector<std::string>& names) {
    std::vector<size_t> cols;
    for (const auto& n : names) {
      auto it = std::find(joint.labels.begin(), joint.labels.end(), n);
      if (it == joint.labels.end())
        throw Error(ErrKind::UnknownVariable, "no column '" + n + "' in joint");
      cols.push_back(it - joint.labels.begin());
    }
    return cols;
  };
  const auto ca = cols_of(a), cb = cols_of(b), cc = cols_of(c);
  std::set<size_t> all;
  for (auto v : ca) all.insert(v);
  for (auto v : cb) all.insert(v);
  for (auto v : cc) all.insert(v);
  if (all.size() != ca.size() + cb.size() + cc.size())
    throw Error(ErrKind::BadArgument, "a, b, c must be disjoint");

  auto project = [](const std::vector<int32_t>& key, const std::vector<size_t>& cols) {
    std::vector<int32_t> out;
    out.reserve(cols.size());
    for (size_t col : cols) out.push_back(key[col]);
    return out;
  };

  using Key = std::vector<int32_t>;
  std::map<Key, Rat> pc;
  std::map<Key, std::map<Key, Rat>> pac, pbc; // c -> a/b -> mass
  std::map<Key, std::map<std::pair<Key, Key>, Rat>> pabc;
  for (const auto& [key, p] : joint.probs) {
    const Key ka = project(key, ca), kb = project(key, cb), kc = project(key, cc);
    pc[kc] += p;
    pac[kc][ka] += p;
    pbc[kc][kb] += p;
    pabc[kc][{ka, kb}] += p;
  }

  Rat max_dev(0);
  for (const auto& [kc, massc] : pc) {
    if (massc == 0) continue;
    for (const auto& [ka, massac] : pac[kc]) {
      for (const auto& [kb, massbc] : pbc[kc]) {
        Rat joint_mass(0);
        auto it = pabc[kc].find({ka, kb});
        if (it != pabc[kc].end()) joint_mass = it->second;
        // P(a,b|c) - P(a|c) P(b|c)
        Rat dev = joint_mass / massc - (massac / massc) * (massbc / massc);
        if (dev < 0) dev = -dev;
        if (dev > max_dev) max_dev = dev;
      }
    }
  }
  return {max_dev == 0, max_dev};
}

PositivityReport positivity(const Scm& scm, const std::string& x,
                            const std::vector<std::string>& adjust, std::int64_t cap) {
  require_binary(scm, x);
  std::vector<std::string> cols = adjust;
  cols.push_back(x);
  const Distribution joint = exact_distribution(scm, cols, WorldSpec::observational(), cap);
  const size_t k = adjust.size();
  const int32_t x1 = scm.value_index(scm.index_of(x), Value::rat(1));

  std::map<std::vector<int32_t>, std::pair<Rat, Rat>> strata; // w -> (P(w), P(x=1,w))
  for (const auto& [key, p] : joint.probs) {
    std::vector<int32_t> w(key.begin(), key.begin() + k);
    auto& s = strata[w];
    s.first += p;
    if (key[k] == x1) s.second += p;
  }

  PositivityReport report;
  report.x = x;
  report.adjust = adjust;
  for (const auto& [wkey, s] : strata) {
    if (s.first == 0) continue;
    PositivityReport::Stratum st;
    for (size_t i = 0; i < k; ++i) st.values.push_back(joint.domains[i][wkey[i]]);
    st.weight = s.first;
    st.p_x1 = s.second / s.first;
    st.ok = st.p_x1 > 0 && st.p_x1 < 1;
    if (!st.ok) report.pass = false;
    report.strata.push_back(std::move(st));
  }
  return report;
}

QueryResult monte_carlo(const Scm& scm, const Event& event, const WorldSpec& world,
                        const std::optional<Event>& given, std::int64_t n,
                        std::uint64_t seed) {
  if (n < 1) throw Error(ErrKind::BadArgument, "sample count must be >= 1");
  const CompiledEvent ev = compile_event(scm, event);
  std::optional<CompiledEvent> gv;
  if (given) gv = compile_event(scm, *given);

  CompiledWorld cw = CompiledWorld::compile(scm, world);
  CompiledWorld::Scratch scratch;
  const ExoSampler sampler(scm);

  std::int64_t hits = 0, denom = 0;
  IdxAssign config(scm.var_count(), -1);
  const std::int64_t chunks = (n + kChunk - 1) / kChunk;
  for (std::int64_t c = 0; c < chunks; ++c) {
    std::mt19937_64 rng(chunk_seed(seed, static_cast<std::uint64_t>(c)));
    const std::int64_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    for (std::int64_t i = lo; i < hi; ++i) {
      sampler.sample(rng, config);
      const IdxAssign& full = cw.realize(scm, config, scratch);
      if (gv && !gv->satisfied(full)) continue;
      ++denom;
      if (ev.satisfied(full)) ++hits;
    }
  }
  if (denom == 0)
    throw Error(ErrKind::ZeroConditioningEvent,
                "no sample satisfies the conditioning event {" + given->str() + "}");
  const double p = static_cast<double>(hits) / static_cast<double>(denom);
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(denom));
  std::string q = "P(" + event.str();
  if (given) q += " | given " + given->str();
  q += ")";
  return QueryResult::mc_result(std::move(q), p, se, n, seed);
}

Dataset sample_dataset(const Scm& scm, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrKind::BadArgument, "sample count must be >= 1");
  Dataset data;
  data.seed = seed;
  std::vector<int> obs = scm.observed_vars();
  for (int v : obs) {
    data.columns.push_back(scm.decl(v).name);
    data.domains.push_back(scm.decl(v).domain);
  }

  CompiledWorld cw = CompiledWorld::compile(scm, WorldSpec::observational());
  CompiledWorld::Scratch scratch;
  const ExoSampler sampler(scm);
  data.rows.reserve(n);

  IdxAssign config(scm.var_count(), -1);
  const std::int64_t chunks = (n + kChunk - 1) / kChunk;
  for (std::int64_t c = 0; c < chunks; ++c) {
    std::mt19937_64 rng(chunk_seed(seed, static_cast<std::uint64_t>(c)));
    const std::int64_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    for (std::int64_t i = lo; i < hi; ++i) {
      sampler.sample(rng, config);
      const IdxAssign& full = cw.realize(scm, config, scratch);
      std::vector<int32_t> row;
      row.reserve(obs.size());
      for (int v : obs) row.push_back(full[v]);
      data.rows.push_back(std::move(row));
    }
  }
  return data;
}

PlugInAdjustment plug_in_adjustment(const Dataset& data, const std::string& x,
                                    const std::string& y,
                                    const std::vector<std::string>& adjust,
                                    int bootstrap_replicates, std::uint64_t seed) {
  auto col_of = [&data](const std::string& name) {
    auto c = data.column(name);
    if (!c) throw Error(ErrKind::UnknownVariable, "no column '" + name + "' in dataset");
    return *c;
  };
  const size_t cx = col_of(x), cy = col_of(y);
  std::vector<size_t> cw;
  for (const auto& name : adjust) cw.push_back(col_of(name));

  auto bin_index = [&data](size_t col, const char* what) {
    int32_t one = -1, zero = -1;
    for (size_t i = 0; i < data.domains[col].size(); ++i) {
      if (data.domains[col][i] == Value::rat(1)) one = static_cast<int32_t>(i);
      if (data.domains[col][i] == Value::rat(0)) zero = static_cast<int32_t>(i);
    }
    if (one < 0 && zero < 0)
      throw Error(ErrKind::NonBinaryVariable,
                  std::string(what) + " column carries no 0/1 values");
    return std::pair<int32_t, int32_t>(zero, one);
  };
  const int32_t x1i = bin_index(cx, "treatment").second;
  const int32_t y1i = bin_index(cy, "outcome").second;

  // Joint cell counts over (adjust..., x, y).
  using Key = std::vector<int32_t>;
  std::map<Key, std::int64_t> cells;
  for (const auto& row : data.rows) {
    Key key;
    key.reserve(cw.size() + 2);
    for (size_t c : cw) key.push_back(row[c]);
    key.push_back(row[cx]);
    key.push_back(row[cy]);
    ++cells[key];
  }
  const std::int64_t n = static_cast<std::int64_t>(data.rows.size());

  PlugInAdjustment out;
  out.seed = seed;
  out.bootstrap_replicates = bootstrap_replicates;

  struct Stat {
    std::int64_t nw = 0, nx1 = 0, ny1x1 = 0, nx0 = 0, ny1x0 = 0;
  };
  auto adjusted_from = [&](const std::map<Key, std::int64_t>& cc, std::int64_t total,
                           bool strict) -> double {
    std::map<Key, Stat> strata;
    std::int64_t mx1 = 0, my1x1 = 0, mx0 = 0, my1x0 = 0;
    for (const auto& [key, count] : cc) {
      Key w(key.begin(), key.end() - 2);
      const bool isx1 = key[key.size() - 2] == x1i;
      const bool isy1 = key[key.size() - 1] == y1i;
      Stat& s = strata[w];
      s.nw += count;
      if (isx1) {
        s.nx1 += count;
        if (isy1) s.ny1x1 += count;
        mx1 += count;
        if (isy1) my1x1 += count;
      } else {
        s.nx0 += count;
        if (isy1) s.ny1x0 += count;
        mx0 += count;
        if (isy1) my1x0 += count;
      }
    }
    double acc = 0;
    for (const auto& [w, s] : strata) {
      if (s.nx1 == 0 || s.nx0 == 0) {
        if (strict) {
          std::string str;
          for (size_t i = 0; i < adjust.size(); ++i) {
            if (i) str += ", ";
            str += adjust[i] + "=" + data.domains[cw[i]][w[i]].str();
          }
          if (adjust.empty()) str = "(marginal)";
          throw Error(ErrKind::PositivityViolation,
                      "observed stratum (" + str + ") lacks " + x + "=" +
                          (s.nx1 == 0 ? "1" : "0") + " rows");
        }
        continue; // bootstrap replicate: drop the stratum
      }
      const double p1 = static_cast<double>(s.ny1x1) / static_cast<double>(s.nx1);
      const double p0 = static_cast<double>(s.ny1x0) / static_cast<double>(s.nx0);
      acc += (p1 - p0) * static_cast<double>(s.nw) / static_cast<double>(total);
    }
    if (strict) {
      if (mx1 == 0 || mx0 == 0)
        throw Error(ErrKind::PositivityViolation,
                    "dataset lacks " + x + "=" + (mx1 == 0 ? "1" : "0") + " rows");
      out.naive = static_cast<double>(my1x1) / static_cast<double>(mx1) -
                  static_cast<double>(my1x0) / static_cast<double>(mx0);
    }
    return acc;
  };

  out.adjusted = adjusted_from(cells, n, true);

  // Zero-weight strata: combinations of observed adjust values never seen
  // together are skipped (with a note), matching the exact-path rule.
  if (!adjust.empty()) {
    std::set<Key> seen;
    for (const auto& [key, count] : cells) seen.insert(Key(key.begin(), key.end() - 2));
    Key combo(cw.size(), 0);
    while (true) {
      if (!seen.count(combo)) {
        std::string str;
        for (size_t i = 0; i < cw.size(); ++i) {
          if (i) str += ", ";
          str += adjust[i] + "=" + data.domains[cw[i]][combo[i]].str();
        }
        out.warnings.push_back("stratum (" + str + ") has no rows; skipped");
      }
      int i = static_cast<int>(combo.size()) - 1;
      for (; i >= 0; --i) {
        if (++combo[i] < static_cast<int32_t>(data.domains[cw[i]].size())) break;
        combo[i] = 0;
      }
      if (i < 0) break;
    }
  }

  // Multinomial bootstrap over the joint cells.
  if (bootstrap_replicates > 1 && n > 0) {
    std::vector<Key> keys;
    std::vector<double> cdf;
    double acc = 0;
    for (const auto& [key, count] : cells) {
      keys.push_back(key);
      acc += static_cast<double>(count) / static_cast<double>(n);
      cdf.push_back(acc);
    }
    cdf.back() = 1.0;

    std::vector<double> estimates;
    estimates.reserve(bootstrap_replicates);
    for (int b = 0; b < bootstrap_replicates; ++b) {
      std::mt19937_64 rng(chunk_seed(seed, 0x424F4F54ULL + static_cast<std::uint64_t>(b)));
      std::map<Key, std::int64_t> resampled;
      for (std::int64_t i = 0; i < n; ++i) {
        const double u = uniform01(rng);
        size_t idx = 0;
        while (idx + 1 < cdf.size() && u >= cdf[idx]) ++idx;
        ++resampled[keys[idx]];
      }
      estimates.push_back(adjusted_from(resampled, n, false));
    }
    double mean = 0;
    for (double e : estimates) mean += e;
    mean /= estimates.size();
    double var = 0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= (estimates.size() - 1);
    out.bootstrap_se = std::sqrt(var);
  }
  return out;
}

void write_csv(const Dataset& data, std::ostream& os) {
  for (size_t i = 0; i < data.columns.size(); ++i) {
    if (i) os << ',';
    os << data.columns[i];
  }
  os << '\n';
  for (const auto& row : data.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << data.domains[i][row[i]].str();
    }
    os << '\n';
  }
}

namespace {

Value parse_csv_value(const std::string& field) {
  // A value is a rational literal or a symbolic label, same as the DSL.
  if (field.empty()) throw Error(ErrKind::Io, "empty CSV field");
  const auto slash = field.find('/');
  auto is_int = [](const std::string& s) {
    if (s.empty()) return false;
    size_t i = (s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
  };
  if (slash != std::string::npos) {
    const std::string a = field.substr(0, slash), b = field.substr(slash + 1);
    if (is_int(a) && is_int(b)) return Value(Rat(BigInt(a), BigInt(b)));
  } else if (is_int(field)) {
    return Value(Rat(BigInt(field)));
  }
  return Value::label(field);
}

} // namespace

Dataset read_csv(std::istream& is) {
  Dataset data;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrKind::Io, "empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream header(line);
  std::string field;
  while (std::getline(header, field, ',')) data.columns.push_back(field);
  data.domains.resize(data.columns.size());

  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<int32_t> row;
    size_t col = 0;
    while (std::getline(ss, field, ',')) {
      if (col >= data.columns.size())
        throw Error(ErrKind::Io, "CSV row has more fields than the header");
      const Value v = parse_csv_value(field);
      auto& dom = data.domains[col];
      int32_t idx = -1;
      for (size_t i = 0; i < dom.size(); ++i)
        if (dom[i] == v) idx = static_cast<int32_t>(i);
      if (idx < 0) {
        dom.push_back(v);
        idx = static_cast<int32_t>(dom.size() - 1);
      }
      row.push_back(idx);
      ++col;
    }
    if (col != data.columns.size())
      throw Error(ErrKind::Io, "CSV row has fewer fields than the header");
    data.rows.push_back(std::move(row));
  }
  return data;
}

} // namespace doeng
