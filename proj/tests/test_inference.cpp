#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "doeng/identities.hpp"
#include "doeng/inference.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

#include <cmath>
#include <sstream>

using namespace doeng;

namespace {

// Hand-written m2 structural equations for the oracle; `fx` lets each test
// install the intervention semantics directly.
std::vector<oracle::ExoVar> m2_exo() {
  return {oracle::coin("eta", Rat(1, 2)), oracle::coin("U", Rat(1, 4)),
          oracle::coin("xi", Rat(1, 4))};
}

std::function<void(oracle::Assign&)> m2_mech(std::function<int(oracle::Assign&)> fx) {
  return [fx](oracle::Assign& a) {
    a["W"] = a["eta"];
    a["X"] = fx(a);
    a["Y"] = ((a["X"] & a["W"]) | a["xi"]);
  };
}

} // namespace

TEST_CASE("exact_distribution matches the oracle on interventional m1/m2") {
  const Scm m1 = fixtures::m1();

  const auto d1 = exact_distribution(m1, {"Y"}, WorldSpec::do_static({{"X", Value::rat(1)}}));
  CHECK(d1.mass({{"Y", Value::rat(1)}}) == 1);
  CHECK(d1.probs.size() == 1);

  const auto d0 = exact_distribution(m1, {"Y"}, WorldSpec::do_static({{"X", Value::rat(0)}}));
  // oracle: Y = or(0, xi)
  const Rat want = oracle::probability(
      {oracle::coin("U", Rat(1, 2)), oracle::coin("xi", Rat(1, 4))},
      [](oracle::Assign& a) {
        a["X"] = 0;
        a["Y"] = (a["X"] | a["xi"]);
      },
      [](const oracle::Assign& a) { return a.at("Y") == 1; });
  CHECK(want == Rat(1, 4));
  CHECK(d0.mass({{"Y", Value::rat(1)}}) == Rat(1, 4));
  CHECK(d0.mass({{"Y", Value::rat(0)}}) == Rat(3, 4));

  const Scm m2 = fixtures::m2();
  const auto d2 = exact_distribution(m2, {"Y"}, WorldSpec::do_static({{"X", Value::rat(1)}}));
  const Rat want2 = oracle::probability(
      m2_exo(), m2_mech([](oracle::Assign&) { return 1; }),
      [](const oracle::Assign& a) { return a.at("Y") == 1; });
  CHECK(want2 == Rat(5, 8));
  CHECK(d2.mass({{"Y", Value::rat(1)}}) == Rat(5, 8));
}

TEST_CASE("exact_query conditions inside the chosen world") {
  const Scm m2 = fixtures::m2();
  const Event y1{{{"Y", Value::rat(1)}}};

  const Rat obs_x1 = exact_query(m2, y1, WorldSpec::observational(),
                                 Event{{{"X", Value::rat(1)}}})
                         .exact;
  const Rat oracle_obs_x1 = oracle::conditional(
      m2_exo(), m2_mech([](oracle::Assign& a) { return a["U"] ^ a["W"]; }),
      [](const oracle::Assign& a) { return a.at("Y") == 1; },
      [](const oracle::Assign& a) { return a.at("X") == 1; });
  CHECK(oracle_obs_x1 == Rat(13, 16));
  CHECK(obs_x1 == Rat(13, 16));

  const Rat obs_x0 = exact_query(m2, y1, WorldSpec::observational(),
                                 Event{{{"X", Value::rat(0)}}})
                         .exact;
  CHECK(obs_x0 == Rat(1, 4));

  // Conditioning on the intervened value is vacuous post-intervention.
  const Scm m1 = fixtures::m1();
  const Rat vac = exact_query(m1, y1, WorldSpec::do_static({{"X", Value::rat(0)}}),
                              Event{{{"X", Value::rat(0)}}})
                      .exact;
  CHECK(vac == Rat(1, 4));
}

TEST_CASE("exact_query rejects zero-probability conditioning") {
  const Scm m1 = fixtures::m1();
  try {
    (void)exact_query(m1, Event{{{"Y", Value::rat(1)}}},
                      WorldSpec::do_static({{"X", Value::rat(0)}}),
                      Event{{{"X", Value::rat(1)}}});
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::ZeroConditioningEvent);
  }
}

TEST_CASE("ace on the fixtures") {
  CHECK(ace(fixtures::m1(), "X", "Y").exact == Rat(3, 4));
  CHECK(ace(fixtures::m2(), "X", "Y").exact == Rat(3, 8));

  const Scm ignoring = parse_model(
      "exo U ~ {0: 1/2, 1: 1/2}\nexo xi ~ {0: 3/4, 1: 1/4}\n"
      "var X in {0,1} := U\nvar Y in {0,1} := xi");
  CHECK(ace(ignoring, "X", "Y").exact == 0);

  const Scm ternary = parse_model(
      "exo U ~ {0: 1/3, 1: 1/3, 2: 1/3}\nvar X in {0,1,2} := U\nvar Y in {0,1} := eq(X, 1)");
  try {
    (void)ace(ternary, "X", "Y");
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::NonBinaryVariable);
  }
}

TEST_CASE("adjustment_ace: back-door set recovers the ace, empty set does not") {
  const Scm m2 = fixtures::m2();
  CHECK(adjustment_ace(m2, "X", "Y", {"W"}).exact == Rat(3, 8));
  CHECK(adjustment_ace(m2, "X", "Y", {}).exact == Rat(9, 16));

  const Scm m1b = fixtures::m1b();
  try {
    (void)adjustment_ace(m1b, "X", "Y", {"theta"});
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::PositivityViolation);
    CHECK(std::string(e.what()).find("theta=0") != std::string::npos);
  }
}

TEST_CASE("counterfactual_joint evaluates worlds on a shared configuration") {
  const Scm m1 = fixtures::m1();
  const auto joint = counterfactual_joint(
      m1, {{"Y", WorldSpec::do_static({{"X", Value::rat(1)}})},
           {"X", WorldSpec::observational()}});
  const auto [ind, dev] = cond_indep(joint, {"Y"}, {"X"}, {});
  CHECK(ind);
  CHECK(dev == 0);
  // product law: P(Y^1=1, X=1) = 1 * 1/2
  CHECK(joint.mass({{"Y", Value::rat(1)}, {"X", Value::rat(1)}}) == Rat(1, 2));

  const Scm m2 = fixtures::m2();
  const auto joint2 = counterfactual_joint(
      m2, {{"Y", WorldSpec::do_static({{"X", Value::rat(1)}})},
           {"X", WorldSpec::observational()},
           {"W", WorldSpec::observational()}});
  const auto [ind2, dev2] = cond_indep(joint2, {"Y"}, {"X"}, {"W"});
  CHECK(ind2);
  CHECK(dev2 == 0);

  const auto forced = counterfactual_joint(m1, {{"X", WorldSpec::do_static({{"X", Value::rat(1)}})}});
  REQUIRE(forced.probs.size() == 1);
  CHECK(forced.mass({{"X", Value::rat(1)}}) == 1);
}

TEST_CASE("counterfactual_joint labels repeated variables") {
  const Scm m1 = fixtures::m1();
  const auto joint = counterfactual_joint(
      m1, {{"Y", WorldSpec::do_static({{"X", Value::rat(1)}})},
           {"Y", WorldSpec::do_static({{"X", Value::rat(0)}})}});
  CHECK(joint.labels == std::vector<std::string>{"Y#0", "Y#1"});
}

TEST_CASE("cond_indep flags the confounded pair and degenerate conditioning") {
  const Scm m2 = fixtures::m2();
  const auto joint = exact_distribution(m2, {"X", "W"}, WorldSpec::observational());
  const auto [ind, dev] = cond_indep(joint, {"X"}, {"W"}, {});
  CHECK_FALSE(ind);
  CHECK(dev > 0);
  // P(X=1|W=1) - P(X=1)P(W=1)... max deviation is |3/8 - 1/2*1/2| = 1/8
  CHECK(dev == Rat(1, 8));

  const auto all = exact_distribution(m2, {"X", "W", "Y"}, WorldSpec::observational());
  const auto [ind3, dev3] = cond_indep(all, {"X"}, {"Y"}, {"W"});
  (void)ind3;
  const auto [degenerate, dev4] = cond_indep(all, {}, {}, {"X", "W", "Y"});
  CHECK(degenerate);
  CHECK(dev4 == 0);
}

TEST_CASE("positivity report per stratum") {
  const Scm m2 = fixtures::m2();
  const auto rep = positivity(m2, "X", {"W"});
  CHECK(rep.pass);
  REQUIRE(rep.strata.size() == 2);
  CHECK(rep.strata[0].p_x1 == Rat(1, 4)); // W=0: X = xor(U,0) = U
  CHECK(rep.strata[1].p_x1 == Rat(3, 4)); // W=1: X = 1-U

  const auto bad = positivity(fixtures::m1b(), "X", {"theta"});
  CHECK_FALSE(bad.pass);
  CHECK(bad.strata[0].p_x1 == 0);

  const auto marginal = positivity(m2, "X", {});
  REQUIRE(marginal.strata.size() == 1);
  CHECK(marginal.strata[0].p_x1 == Rat(1, 2));
}

TEST_CASE("monte_carlo lands within five stderr of the exact value") {
  const Scm m2 = fixtures::m2();
  const Event y1{{{"Y", Value::rat(1)}}};
  const WorldSpec dox1 = WorldSpec::do_static({{"X", Value::rat(1)}});
  const QueryResult mc = monte_carlo(m2, y1, dox1, std::nullopt, 1000000, 1);
  const double exact = rat_to_double(exact_query(m2, y1, dox1).exact);
  CHECK(std::abs(mc.value - exact) <= 5 * mc.stderr_);
  CHECK(mc.n == 1000000);
  CHECK(mc.seed == 1);
}

TEST_CASE("monte_carlo is exact on a degenerate outcome and bit-stable") {
  const Scm m1 = fixtures::m1();
  const Event y1{{{"Y", Value::rat(1)}}};
  const WorldSpec dox1 = WorldSpec::do_static({{"X", Value::rat(1)}});
  const QueryResult a = monte_carlo(m1, y1, dox1, std::nullopt, 4321, 99);
  CHECK(a.value == 1.0);
  CHECK(a.stderr_ == 0.0);

  const Scm m2 = fixtures::m2();
  const QueryResult r1 = monte_carlo(m2, y1, WorldSpec::observational(),
                                     Event{{{"X", Value::rat(1)}}}, 200000, 7);
  const QueryResult r2 = monte_carlo(m2, y1, WorldSpec::observational(),
                                     Event{{{"X", Value::rat(1)}}}, 200000, 7);
  CHECK(r1.value == r2.value);
  CHECK(r1.stderr_ == r2.stderr_);
}

TEST_CASE("monte_carlo conditioning can fail with ZeroConditioningEvent") {
  const Scm m1 = fixtures::m1();
  try {
    (void)monte_carlo(m1, Event{{{"Y", Value::rat(1)}}},
                      WorldSpec::do_static({{"X", Value::rat(0)}}),
                      Event{{{"X", Value::rat(1)}}}, 1000, 5);
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::ZeroConditioningEvent);
  }
}

TEST_CASE("sample_dataset exports observed columns only, deterministically") {
  const Scm m2 = fixtures::m2();
  const Dataset d = sample_dataset(m2, 10000, 1);
  CHECK(d.columns == std::vector<std::string>{"W", "X", "Y"});
  CHECK(d.rows.size() == 10000);

  // empirical P(X=1) within 5 sigma of the exact 1/2
  int x1 = 0;
  const size_t cx = *d.column("X");
  for (const auto& row : d.rows)
    if (d.domains[cx][row[cx]] == Value::rat(1)) ++x1;
  const double phat = x1 / 10000.0;
  CHECK(std::abs(phat - 0.5) <= 5 * std::sqrt(0.25 / 10000.0));

  const Dataset d2 = sample_dataset(m2, 10000, 1);
  CHECK(d.rows == d2.rows);
  CHECK_THROWS_AS((void)sample_dataset(m2, 0, 1), Error);
}

TEST_CASE("csv round-trips through write and read") {
  const Scm m2 = fixtures::m2();
  const Dataset d = sample_dataset(m2, 500, 3);
  std::ostringstream os;
  write_csv(d, os);
  const std::string text = os.str();
  CHECK(text.substr(0, 6) == "W,X,Y\n");
  CHECK(text.find('\r') == std::string::npos);

  std::istringstream is(text);
  const Dataset back = read_csv(is);
  CHECK(back.columns == d.columns);
  REQUIRE(back.rows.size() == d.rows.size());
  for (size_t r = 0; r < d.rows.size(); ++r)
    for (size_t c = 0; c < d.columns.size(); ++c)
      CHECK(back.at(r, c) == d.at(r, c));
}

TEST_CASE("plug_in_adjustment recovers the adjusted contrast from data") {
  const Scm m2 = fixtures::m2();
  const Dataset d = sample_dataset(m2, 100000, 1);
  const PlugInAdjustment est = plug_in_adjustment(d, "X", "Y", {"W"}, 200, 1);
  CHECK(std::abs(est.adjusted - 0.375) <= 5 * est.bootstrap_se);
  CHECK(est.naive > est.adjusted); // the confounded contrast sits well above
  CHECK(est.bootstrap_se > 0);

  const PlugInAdjustment rerun = plug_in_adjustment(d, "X", "Y", {"W"}, 200, 1);
  CHECK(est.adjusted == rerun.adjusted);
  CHECK(est.bootstrap_se == rerun.bootstrap_se);
}

TEST_CASE("plug_in_adjustment flags positivity violations and empty strata") {
  std::istringstream one_arm("W,X,Y\n0,1,1\n0,1,0\n1,1,1\n1,0,0\n");
  const Dataset d = read_csv(one_arm);
  try {
    (void)plug_in_adjustment(d, "X", "Y", {"W"}, 0, 1);
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::PositivityViolation);
    CHECK(std::string(e.what()).find("W=0") != std::string::npos);
  }

  std::istringstream sparse("W,X,Y\n0,1,1\n0,0,0\n2,1,1\n2,0,1\n");
  const Dataset d2 = read_csv(sparse);
  const PlugInAdjustment est = plug_in_adjustment(d2, "X", "Y", {"W"}, 0, 1);
  CHECK(est.warnings.empty()); // only two observed W levels, both populated
  std::istringstream holes("W,Q,X,Y\n0,0,1,1\n0,0,0,0\n1,1,1,1\n1,1,0,1\n");
  const Dataset d3 = read_csv(holes);
  const PlugInAdjustment est3 = plug_in_adjustment(d3, "X", "Y", {"W", "Q"}, 0, 1);
  CHECK(est3.warnings.size() == 2); // (W=0,Q=1) and (W=1,Q=0) never observed
}

TEST_CASE("distributions always sum to one exactly") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scm scm = random_scm(seed, Shape::Fig2a);
    CHECK(exact_distribution(scm, {"X", "Y"}, WorldSpec::observational()).total() == 1);
    CHECK(exact_distribution(scm, {"W", "Y"},
                             WorldSpec::do_static({{"X", Value::rat(1)}}))
              .total() == 1);
  }
}

TEST_CASE("query result json carries the declared fields") {
  const QueryResult ex = QueryResult::exact_result("P(Y=1)", Rat(5, 8));
  const auto j = ex.to_json();
  CHECK(j.at("method") == "exact");
  CHECK(j.at("num") == 5);
  CHECK(j.at("den") == 8);
  CHECK(j.at("query") == "P(Y=1)");
  CHECK(ex.to_text() == "5/8 = 0.625");

  const QueryResult mc = QueryResult::mc_result("q", 0.5, 0.001, 1000, 7);
  const auto jm = mc.to_json();
  CHECK(jm.at("method") == "mc");
  CHECK(jm.at("value") == 0.5);
  CHECK(jm.at("n") == 1000);
  CHECK(jm.at("seed") == 7);
  CHECK(jm.contains("stderr"));
}
