// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

#include "doeng/dsl.hpp"
#include "doeng/identities.hpp"
#include "doeng/inference.hpp"
#include "fixtures.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace doeng;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& label, const std::function<bool()>& body) {
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  std::string note;
  try {
    ok = body();
  } catch (const std::exception& e) {
    note = std::string(" — ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("[%s] criterion %2d: %s (%.1fs)%s\n", ok ? "PASS" : "FAIL", number,
              label.c_str(), secs, note.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

bool expect(bool cond, const char* what) {
  if (!cond) std::printf("       failed: %s\n", what);
  return cond;
}

Collection coll(std::vector<std::pair<int, int>> rows) {
  Collection c;
  for (const auto& [u, w] : rows) c.entries.push_back({{Value::rat(u)}, {Value::rat(w)}});
  return c;
}

} // namespace

int main() {
  const Scm m1 = fixtures::m1();
  const Scm m1b = fixtures::m1b();
  const Scm m2 = fixtures::m2();
  const Scm m3 = fixtures::m3();

  criterion(1, "unconfounded cause-intervention identity (m1 + 200 random fig1a)", [&] {
    bool ok = expect(check_unconfounded(m1, "m1").pass, "m1 unconfounded");
    for (std::uint64_t seed = 0; seed < 200; ++seed)
      ok = ok && check_unconfounded(random_scm(seed, Shape::Fig1a),
                                    "fig1a seed=" + std::to_string(seed))
                     .pass;
    return expect(ok, "every fig1a instance equal");
  });

  criterion(2, "type (i) per-stratum and aggregate identities, two selectors "
               "(m2 + 200 random fig2a)",
            [&] {
              bool ok = true;
              for (int x0 = 0; x0 <= 1; ++x0)
                ok = ok && check_type_i(m2, Value::rat(x0), "m2").pass;
              for (std::uint64_t seed = 0; seed < 200; ++seed) {
                const Scm scm = random_scm(seed, Shape::Fig2a);
                for (int x0 = 0; x0 <= 1; ++x0)
                  ok = ok &&
                       check_type_i(scm, Value::rat(x0), "seed=" + std::to_string(seed))
                           .pass;
              }
              return expect(ok, "every type (i) equality");
            });

  criterion(3, "type (ii) per-stratum identity; m2 aggregate 13/16 vs do(X=1) 5/8",
            [&] {
              bool ok = true;
              for (const Selector& sel : {select_first(), select_last()}) {
                for (int x0 = 0; x0 <= 1; ++x0)
                  ok = ok && check_type_ii(m2, Value::rat(x0), "m2", sel).pass;
                for (std::uint64_t seed = 0; seed < 200; ++seed) {
                  const Scm scm = random_scm(seed, Shape::Fig2a);
                  for (int x0 = 0; x0 <= 1; ++x0)
                    ok = ok && check_type_ii(scm, Value::rat(x0),
                                             "seed=" + std::to_string(seed), sel)
                                   .pass;
                }
              }
              const IdentityReport agg = check_type_ii(m2, Value::rat(1), "m2");
              ok = expect(ok, "every per-stratum equality") &&
                   expect(agg.notes.size() == 1, "aggregate reported") &&
                   expect(agg.notes[0].lhs == Rat(13, 16), "aggregate equals 13/16") &&
                   expect(agg.notes[0].rhs == Rat(5, 8), "do(X=1) equals 5/8");
              return ok;
            });

  criterion(4, "effect decomposition: m2 gives (9/16, 9/16, 0); total always splits",
            [&] {
              const DecompositionResult d =
                  decompose_effect(m2, coll({{0, 1}, {1, 0}}), coll({{0, 0}, {1, 1}}));
              bool ok = expect(d.total == Rat(9, 16), "total 9/16") &&
                        expect(d.indirect == Rat(9, 16), "indirect 9/16") &&
                        expect(d.direct == 0, "direct 0") &&
                        expect(d.total == d.indirect + d.direct, "m2 split");
              for (std::uint64_t seed = 0; seed < 200 && ok; ++seed) {
                const Scm scm = random_scm(seed, Shape::Fig2a);
                const ShapeRoles roles = infer_roles(scm, Shape::Fig2a);
                for (const Selector& sel : {select_first(), select_last()}) {
                  const Collection w1 =
                      collection_for(scm, "X", Value::rat(1), roles.u, {"W"}, sel);
                  const Collection w0 =
                      collection_for(scm, "X", Value::rat(0), roles.u, {"W"}, sel);
                  const DecompositionResult r = decompose_effect(scm, w1, w0);
                  ok = ok && r.total == r.indirect + r.direct;
                }
              }
              return expect(ok, "total = indirect + direct on every instance");
            });

  criterion(5, "linear outcomes: indirect = ACE = beta without interaction; "
               "interaction witness differs",
            [&] {
              bool ok = true;
              const Collection w1 = coll({{0, 1}, {1, 0}});
              const Collection w0 = coll({{0, 0}, {1, 1}});
              for (const long long beta : {0LL, 2LL, -1LL}) {
                LinearModelSpec lin(m2);
                lin.x = "X";
                lin.w = {"W"};
                lin.alpha = {Rat(1)};
                lin.beta = Rat(beta);
                lin.xi = {{Rat(0), Rat(3, 4)}, {Rat(1), Rat(1, 4)}};
                ok = ok && check_linear(lin, w1, w0, "beta=" + std::to_string(beta)).pass &&
                     linear_indirect(lin, w1) == Rat(beta) && linear_ace(lin) == Rat(beta);
              }
              ok = expect(ok, "no-interaction cases equal beta");
              LinearModelSpec witness(m2);
              witness.x = "X";
              witness.w = {"W"};
              witness.alpha = {Rat(1)};
              witness.beta = Rat(2);
              witness.gamma = {Rat(3)};
              witness.xi = {{Rat(0), Rat(1)}};
              return ok && expect(linear_indirect(witness, w1) != linear_ace(witness),
                                  "interaction witness separates indirect from ACE");
            });

  criterion(6, "back-door adjustment equals ACE (m2, m3, 200 fig2a, 200 fig2b); "
               "m2 naive contrast 9/16 differs from ACE 3/8",
            [&] {
              bool ok =
                  expect(adjustment_ace(m2, "X", "Y", {"W"}).exact == ace(m2, "X", "Y").exact,
                         "m2 adjusted = ace") &&
                  expect(adjustment_ace(m3, "X", "Y", {"W", "Z"}).exact ==
                             ace(m3, "X", "Y").exact,
                         "m3 adjusted = ace") &&
                  expect(ace(m2, "X", "Y").exact == Rat(3, 8), "m2 ace 3/8") &&
                  expect(adjustment_ace(m2, "X", "Y", {}).exact == Rat(9, 16),
                         "m2 naive 9/16");
              for (std::uint64_t seed = 0; seed < 200 && ok; ++seed) {
                const Scm a = random_scm(seed, Shape::Fig2a);
                ok = ok && adjustment_ace(a, "X", "Y", {"W"}).exact == ace(a, "X", "Y").exact;
                const Scm b = random_scm(seed, Shape::Fig2b);
                ok = ok &&
                     adjustment_ace(b, "X", "Y", {"W", "Z"}).exact == ace(b, "X", "Y").exact;
              }
              return expect(ok, "adjustment identity on every instance");
            });

  criterion(7, "ignorability diagnostics: exact (conditional) independence on "
               "fig1a/fig2a shapes (fixtures + 200 seeds each)",
            [&] {
              bool ok = check_ignorability(m1, "m1").pass &&
                        check_ignorability(m1b, "m1b").pass &&
                        check_ignorability(m2, "m2").pass;
              for (std::uint64_t seed = 0; seed < 200 && ok; ++seed) {
                ok = ok && check_ignorability(random_scm(seed, Shape::Fig1a), "fig1a").pass;
                ok = ok && check_ignorability(random_scm(seed, Shape::Fig2a), "fig2a").pass;
              }
              return expect(ok, "zero deviation everywhere");
            });

  criterion(8, "Monte Carlo cross-check: 50 (fixture, query, seed) triples at n=10^6 "
               "within 5 stderr; reruns bit-identical",
            [&] {
              struct Probe {
                const Scm* scm;
                const char* query;
              };
              const std::vector<Probe> probes = {
                  {&m1, "P(Y=1 | do(X=0))"},
                  {&m1, "P(Y=1 | do(X=1))"},
                  {&m1b, "P(Y=1)"},
                  {&m1b, "P(Y=1 | do(X=0))"},
                  {&m2, "P(Y=1 | do(X=1))"},
                  {&m2, "P(Y=1 | obs, given X=1)"},
                  {&m2, "P(Y=1 | do(U = solve(X=1; W)))"},
                  {&m3, "P(Y=1 | do(X=1))"},
                  {&m3, "P(Y=1 | obs, given X=0)"},
                  {&m3, "P(Y=1 | do(W=1), given Z=1)"},
              };
              bool ok = true;
              int count = 0;
              for (const Probe& probe : probes) {
                const auto ast = parse_query(probe.query);
                const auto& q = std::get<ProbQuery>(ast.node);
                const WorldSpec world = resolve_regime(*probe.scm, q.regime);
                Event ev;
                ev.atoms = q.event;
                std::optional<Event> given;
                if (q.given) {
                  given = Event{};
                  given->atoms = *q.given;
                }
                const Rat exact = exact_query(*probe.scm, ev, world, given).exact;
                for (std::uint64_t seed = 11; seed <= 15; ++seed) {
                  const QueryResult mc =
                      monte_carlo(*probe.scm, ev, world, given, 1000000, seed);
                  const double diff = std::abs(mc.value - rat_to_double(exact));
                  if (mc.stderr_ == 0.0 ? diff != 0.0 : diff > 5 * mc.stderr_) {
                    std::printf("       outlier: %s seed=%llu diff=%g stderr=%g\n",
                                probe.query, static_cast<unsigned long long>(seed), diff,
                                mc.stderr_);
                    ok = false;
                  }
                  ++count;
                }
              }
              ok = expect(count == 50, "exactly 50 triples") && ok;
              // determinism: rerun three triples, require bit-identical results
              for (const Probe& probe : {probes[0], probes[5], probes[9]}) {
                const auto ast = parse_query(probe.query);
                const auto& q = std::get<ProbQuery>(ast.node);
                const WorldSpec world = resolve_regime(*probe.scm, q.regime);
                Event ev;
                ev.atoms = q.event;
                std::optional<Event> given;
                if (q.given) {
                  given = Event{};
                  given->atoms = *q.given;
                }
                const QueryResult a = monte_carlo(*probe.scm, ev, world, given, 1000000, 11);
                const QueryResult b = monte_carlo(*probe.scm, ev, world, given, 1000000, 11);
                ok = ok && a.value == b.value && a.stderr_ == b.stderr_;
              }
              return expect(ok, "all within 5 stderr and bit-stable");
            });

  criterion(9, "plug-in adjustment on a 100000-row m2 dataset (seed 1) within "
               "5 bootstrap stderr of 3/8",
            [&] {
              const Dataset data = sample_dataset(m2, 100000, 1);
              const PlugInAdjustment est = plug_in_adjustment(data, "X", "Y", {"W"}, 200, 1);
              std::printf("       adjusted=%.6f naive=%.6f se=%.6f\n", est.adjusted,
                          est.naive, est.bootstrap_se);
              return expect(est.bootstrap_se > 0, "bootstrap stderr positive") &&
                     expect(std::abs(est.adjusted - 0.375) <= 5 * est.bootstrap_se,
                            "adjusted estimate within 5 bootstrap stderr of 3/8");
            });

  criterion(10, "DSL round-trip identity on fixtures + 200 random models; "
                "malformed inputs fail with positions",
            [&] {
              bool ok = true;
              for (const char* name : {"m1.scm", "m1b.scm", "m2.scm", "m3.scm",
                                       "version_gap.scm", "version_nogap.scm"}) {
                const Scm scm = fixtures::load(name);
                const std::string text = format_model(scm);
                ok = ok && parse_model(text) == scm && format_model(parse_model(text)) == text;
              }
              ok = expect(ok, "fixture round-trips");
              for (std::uint64_t seed = 0; seed < 50 && ok; ++seed) {
                for (Shape shape :
                     {Shape::Fig1a, Shape::Fig1b, Shape::Fig2a, Shape::Fig2b}) {
                  const Scm scm = random_scm(seed, shape);
                  ok = ok && parse_model(format_model(scm)) == scm;
                }
              }
              ok = expect(ok, "200 random round-trips");
              const char* malformed[] = {
                  "var X in {0,1} 0",        // missing :=
                  "exo U ~ {0: 1/2",         // unterminated table
                  "var in {0,1} := 0",       // missing name
                  "exo U ~ {0: 1/2, 1: }",   // missing probability
                  "\xC2\xA7",                // illegal character
                  "var X in {} := 0",        // empty domain braces
              };
              for (const char* text : malformed) {
                try {
                  (void)parse_model(text);
                  std::printf("       accepted malformed input: %s\n", text);
                  ok = false;
                } catch (const ParseError& e) {
                  ok = ok && e.line() >= 1 && e.col() >= 1;
                } catch (const ValidationError&) {
                  std::printf("       expected ParseError, got ValidationError: %s\n", text);
                  ok = false;
                }
              }
              return expect(ok, "malformed inputs yield positioned errors");
            });

  if (g_failures == 0) {
    std::printf("acceptance: all 10 criteria pass\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return 1;
}
