#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "doeng/dsl.hpp"
#include "doeng/identities.hpp"
#include "fixtures.hpp"

#include <algorithm>
#include <sstream>

using namespace doeng;

TEST_CASE("tokenize drops comments and whitespace, keeps positions") {
  const auto toks = tokenize("exo U ~ {0:3/4, 1:1/4}");
  REQUIRE(toks.size() == 12);
  CHECK(toks[0].kind == Token::Kind::Keyword);
  CHECK(toks[0].lexeme == "exo");
  CHECK(toks[1].kind == Token::Kind::Identifier);
  CHECK(toks[6].kind == Token::Kind::Rational);
  CHECK(toks[6].lexeme == "3/4");
  CHECK(toks.back().lexeme == "}");
  CHECK(toks[0].line == 1);
  CHECK(toks[0].col == 1);

  const auto q = tokenize("P(Y=1 | do(X=1))");
  REQUIRE(q.size() == 13);
  const char* want[] = {"P", "(", "Y", "=", "1", "|", "do", "(", "X", "=", "1", ")", ")"};
  for (size_t i = 0; i < q.size(); ++i) CHECK(q[i].lexeme == want[i]);

  const auto commented = tokenize("# a comment line\nvar X");
  REQUIRE(commented.size() == 2);
  CHECK(commented[0].line == 2);
}

TEST_CASE("tokenize reports an illegal character at its position") {
  try {
    (void)tokenize("\xC2\xA7"); // section sign
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.col() == 1);
  }
  try {
    (void)tokenize("exo U ~\n  @");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.col() == 3);
  }
}

TEST_CASE("parse_model accepts every fixture file") {
  for (const char* name : {"m1.scm", "m1b.scm", "m2.scm", "m3.scm", "version_gap.scm",
                           "version_nogap.scm"}) {
    const Scm scm = fixtures::load(name);
    CHECK(scm.var_count() >= 4);
  }
  CHECK(fixtures::m1().var_count() == 4);
}

TEST_CASE("parse_model flags a missing := with the expected token") {
  try {
    (void)parse_model("var X in {0,1} 0");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":=") != std::string::npos);
    CHECK(e.line() == 1);
    REQUIRE(!e.expected().empty());
    CHECK(e.expected()[0] == ":=");
  }
}

TEST_CASE("duplicate declarations carry the second declaration's position") {
  try {
    (void)parse_model("exo U ~ {0: 1/2, 1: 1/2}\nexo U ~ {0: 1}\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    REQUIRE(!e.violations().empty());
    CHECK(e.violations()[0].kind == ErrKind::DuplicateDeclaration);
    CHECK(e.violations()[0].line == 2);
  }
}

TEST_CASE("parse_query maps each query form") {
  const QueryAst a = parse_query("P(Y=1 | do(X=1))");
  const auto& pa = std::get<ProbQuery>(a.node);
  REQUIRE(pa.event.size() == 1);
  CHECK(pa.event[0].first == "Y");
  CHECK(pa.event[0].second == Value::rat(1));
  CHECK_FALSE(pa.regime.observational);
  REQUIRE(pa.regime.items.size() == 1);
  CHECK(pa.regime.items[0].kind == RegimeAst::Item::Kind::Static);
  CHECK(pa.regime.items[0].targets == std::vector<std::string>{"X"});
  CHECK_FALSE(pa.given.has_value());

  const QueryAst b = parse_query("P(Y=1 | do(U = solve(X=1; W)))");
  const auto& pb = std::get<ProbQuery>(b.node);
  REQUIRE(pb.regime.items.size() == 1);
  CHECK(pb.regime.items[0].kind == RegimeAst::Item::Kind::Solve);
  CHECK(pb.regime.items[0].targets == std::vector<std::string>{"U"});
  CHECK(pb.regime.items[0].solve_target == "X");
  CHECK(pb.regime.items[0].solve_index == std::vector<std::string>{"W"});

  const QueryAst c = parse_query("ace X -> Y adjust {W}");
  const auto& pc = std::get<AceQuery>(c.node);
  CHECK(pc.x == "X");
  CHECK(pc.y == "Y");
  CHECK(pc.adjusted);
  CHECK(pc.adjust == std::vector<std::string>{"W"});

  const QueryAst d = parse_query("P(Y=1 | do(X=0), given X=0)");
  const auto& pd = std::get<ProbQuery>(d.node);
  REQUIRE(pd.given.has_value());
  CHECK((*pd.given)[0].first == "X");

  const QueryAst e = parse_query("P(Y=1 | do((V, W) = solve(X=1; theta, Z)))");
  const auto& pe = std::get<ProbQuery>(e.node);
  CHECK(pe.regime.items[0].targets == std::vector<std::string>{"V", "W"});
  CHECK(pe.regime.items[0].solve_index == std::vector<std::string>{"theta", "Z"});

  const QueryAst f = parse_query("P(Y=1 | do(W=1, X=cf(X | do(W=0))))");
  const auto& pf = std::get<ProbQuery>(f.node);
  REQUIRE(pf.regime.items.size() == 2);
  CHECK(pf.regime.items[1].kind == RegimeAst::Item::Kind::Cf);
  CHECK(pf.regime.items[1].cf_var == "X");
}

TEST_CASE("malformed queries fail with a position inside the source") {
  for (const char* bad : {"P(Y=1", "P(Y=1 | do(X=))", "ace X Y", "E(Y | do())",
                          "check", "P(Y==1)", "decompose X -> Y"}) {
    try {
      (void)parse_query(bad);
      FAIL("expected ParseError for: ", bad);
    } catch (const ParseError& e) {
      // reported position is reachable in the source text
      const std::string text(bad);
      const long lines = 1 + std::count(text.begin(), text.end(), '\n');
      CHECK(e.line() >= 1);
      CHECK(e.line() <= lines);
      CHECK(e.col() >= 1);
      CHECK(e.col() <= static_cast<int>(text.size()) + 1);
    }
  }
}

TEST_CASE("resolve_regime builds the dynamic table via solve") {
  const Scm m2 = fixtures::m2();
  const auto ast = parse_query("P(Y=1 | do(U = solve(X=1; W)))");
  const auto& q = std::get<ProbQuery>(ast.node);
  const WorldSpec world = resolve_regime(m2, q.regime);
  REQUIRE(world.dynamics.size() == 1);
  CHECK(world.dynamics[0].targets == std::vector<std::string>{"U"});
  CHECK(world.dynamics[0].table.size() == 2);

  Event ev;
  ev.atoms = q.event;
  CHECK(exact_query(m2, ev, world).exact == Rat(5, 8));
}

TEST_CASE("format_model round-trips every fixture") {
  for (const char* name : {"m1.scm", "m1b.scm", "m2.scm", "m3.scm", "version_gap.scm",
                           "version_nogap.scm"}) {
    const Scm scm = fixtures::load(name);
    const std::string text = format_model(scm);
    const Scm back = parse_model(text);
    CHECK(back == scm);
    CHECK(format_model(back) == text); // idempotent
  }
}

TEST_CASE("format_model canonicalizes messy sources") {
  const std::string messy =
      "exo  U   ~ {0: 1/2 , 1: 1/2}  # noise\n\n\nvar   X in {0 ,1}:=U\n"
      "var Y in {0,1} := or( X , xi )\nexo xi ~ {0: 3/4, 1: 1/4}\n";
  // same model as m1 up to declaration order of xi
  const Scm a = parse_model(messy);
  const std::string canon = format_model(a);
  CHECK(canon == format_model(parse_model(canon)));
  CHECK(canon.find("var X in {0, 1} := U") != std::string::npos);
}

TEST_CASE("round-trip holds for random models of every shape") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    for (Shape shape : {Shape::Fig1a, Shape::Fig1b, Shape::Fig2a, Shape::Fig2b}) {
      const Scm scm = random_scm(seed, shape);
      const Scm back = parse_model(format_model(scm));
      CHECK(back == scm);
    }
  }
}

TEST_CASE("flags survive the round trip") {
  const Scm m3 = fixtures::m3();
  const Scm back = parse_model(format_model(m3));
  CHECK(back.decl(back.index_of("Z")).observed);
  CHECK_FALSE(back.decl(back.index_of("Z")).modifiable);
  CHECK(back.decl(back.index_of("V")).modifiable);
  CHECK_FALSE(back.decl(back.index_of("V")).observed);
}

TEST_CASE("symbolic label domains work end to end") {
  const Scm scm = parse_model(
      "exo mood ~ {calm: 2/3, tense: 1/3}\n"
      "exo xi ~ {0: 3/4, 1: 1/4}\n"
      "var F in {lo, hi} := table(mood) { calm: lo, tense: hi }\n"
      "var Y in {0, 1} := or(table(F) { lo: 0, hi: 1 }, xi)\n");
  CHECK(scm.decl(scm.index_of("mood")).domain[0] == Value::label("calm"));
  CHECK(exact_query(scm, Event{{{"F", Value::label("hi")}}}, WorldSpec::observational())
            .exact == Rat(1, 3));
  CHECK(exact_query(scm, Event{{{"Y", Value::rat(1)}}}, WorldSpec::observational())
            .exact == Rat(1, 2));
  CHECK(parse_model(format_model(scm)) == scm);

  try {
    (void)expectation(scm, "F", WorldSpec::observational());
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::NonNumericVariable);
  }

  const Dataset d = sample_dataset(scm, 200, 5);
  CHECK(d.columns == std::vector<std::string>{"F", "Y"});
  std::ostringstream os;
  write_csv(d, os);
  CHECK(os.str().find("hi") != std::string::npos);

  // a bare label name in expression position is a variable reference
  try {
    (void)parse_model(
        "exo m ~ {a: 1/2, b: 1/2}\nvar F in {a, b} := m\nvar Y in {0,1} := eq(F, b)\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.has(ErrKind::UnknownVariable));
  }
}

TEST_CASE("identifiers are ascii; anything else is rejected with a position") {
  const auto toks = tokenize("exo theta_1 ~ {0: 1}");
  REQUIRE(toks.size() >= 2);
  CHECK(toks[1].kind == Token::Kind::Identifier);
  CHECK(toks[1].lexeme == "theta_1");
  try {
    (void)tokenize("exo \xCF\x91 ~ {0: 1}"); // U+03D1 theta symbol
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.col() == 5);
  }
}
