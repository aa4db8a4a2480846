#include "doeng/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace doeng {

namespace {

const std::set<std::string>& keywords() {
  static const std::set<std::string> kw = {
      "exo",   "var",        "given",      "in",     "observed", "latent",
      "modifiable", "nonmodifiable", "table", "and",  "or",       "xor",
      "not",   "eq",         "if",         "do",     "solve",    "cf",
      "obs",   "ace",        "adjust",     "decompose", "check"};
  return kw;
}

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool ident_cont(unsigned char c) { return ident_start(c) || std::isdigit(c); }

} // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n = 1) {
    for (size_t k = 0; k < n; ++k) {
      if (i < text.size() && text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };

  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance();
      continue;
    }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance();
      continue;
    }
    const int tline = line, tcol = col;
    if (std::isdigit(c) || (c == '-' && i + 1 < text.size() &&
                            std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::string lex;
      if (c == '-') {
        lex += '-';
        advance();
      }
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        lex += text[i];
        advance();
      }
      if (i < text.size() && text[i] == '/' && i + 1 < text.size() &&
          std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
        lex += '/';
        advance();
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
          lex += text[i];
          advance();
        }
      }
      out.push_back({Token::Kind::Rational, lex, tline, tcol});
      continue;
    }
    if (ident_start(c)) {
      std::string lex;
      while (i < text.size() && ident_cont(static_cast<unsigned char>(text[i]))) {
        lex += text[i];
        advance();
      }
      const auto kind =
          keywords().count(lex) ? Token::Kind::Keyword : Token::Kind::Identifier;
      out.push_back({kind, lex, tline, tcol});
      continue;
    }
    // punctuation, longest match first
    if (c == ':' && i + 1 < text.size() && text[i + 1] == '=') {
      out.push_back({Token::Kind::Punct, ":=", tline, tcol});
      advance(2);
      continue;
    }
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
      out.push_back({Token::Kind::Punct, "->", tline, tcol});
      advance(2);
      continue;
    }
    static const std::string singles = "(){},:;=|~";
    if (singles.find(static_cast<char>(c)) != std::string::npos) {
      out.push_back({Token::Kind::Punct, std::string(1, static_cast<char>(c)), tline, tcol});
      advance();
      continue;
    }
    throw ParseError(tline, tcol, "illegal character");
  }
  return out;
}

namespace {

Rat parse_rat_lexeme(const std::string& lex) {
  const auto slash = lex.find('/');
  if (slash == std::string::npos) return Rat(BigInt(lex));
  return Rat(BigInt(lex.substr(0, slash)), BigInt(lex.substr(slash + 1)));
}

class Parser {
public:
  explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

  RawModel model() {
    RawModel raw;
    while (!at_end()) {
      if (accept_kw("exo"))
        exo_decl(raw);
      else if (accept_kw("var"))
        var_decl(raw);
      else
        fail("expected 'exo' or 'var'", {"exo", "var"});
    }
    return raw;
  }

  QueryAst query() {
    QueryAst ast;
    if (peek_lexeme("P")) {
      next();
      ast.node = prob_query();
    } else if (peek_lexeme("E")) {
      next();
      ast.node = expect_query();
    } else if (accept_kw("ace")) {
      ast.node = ace_query();
    } else if (accept_kw("decompose")) {
      ast.node = decompose_query();
    } else if (accept_kw("check")) {
      ast.node = check_query();
    } else {
      fail("expected a query ('P', 'E', 'ace', 'decompose' or 'check')",
           {"P", "E", "ace", "decompose", "check"});
    }
    if (!at_end()) fail("trailing input after query", {});
    return ast;
  }

private:
  std::vector<Token> toks_;
  size_t pos_ = 0;

  bool at_end() const { return pos_ >= toks_.size(); }
  const Token& peek() const {
    if (at_end()) {
      static Token eof{Token::Kind::Punct, "<end>", 0, 0};
      return eof;
    }
    return toks_[pos_];
  }
  Token next() {
    if (at_end()) fail("unexpected end of input", {});
    return toks_[pos_++];
  }

  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) const {
    int line = 1, col = 1;
    if (!at_end()) {
      line = toks_[pos_].line;
      col = toks_[pos_].col;
    } else if (!toks_.empty()) {
      line = toks_.back().line;
      col = toks_.back().col + static_cast<int>(toks_.back().lexeme.size());
    }
    std::string m = msg;
    if (!at_end()) m += " (got '" + toks_[pos_].lexeme + "')";
    throw ParseError(line, col, m, std::move(expected));
  }

  bool peek_punct(const std::string& p) const {
    return !at_end() && peek().kind == Token::Kind::Punct && peek().lexeme == p;
  }
  bool peek_kw(const std::string& k) const {
    return !at_end() && peek().kind == Token::Kind::Keyword && peek().lexeme == k;
  }
  bool peek_lexeme(const std::string& s) const { return !at_end() && peek().lexeme == s; }

  bool accept_punct(const std::string& p) {
    if (!peek_punct(p)) return false;
    ++pos_;
    return true;
  }
  bool accept_kw(const std::string& k) {
    if (!peek_kw(k)) return false;
    ++pos_;
    return true;
  }
  void expect_punct(const std::string& p) {
    if (!accept_punct(p)) fail("expected '" + p + "'", {p});
  }
  void expect_kw(const std::string& k) {
    if (!accept_kw(k)) fail("expected '" + k + "'", {k});
  }

  std::string identifier(const char* what) {
    if (at_end() || peek().kind != Token::Kind::Identifier)
      fail(std::string("expected ") + what, {"identifier"});
    return next().lexeme;
  }

  Value value() {
    if (peek().kind == Token::Kind::Rational) return Value(parse_rat_lexeme(next().lexeme));
    if (peek().kind == Token::Kind::Identifier) return Value::label(next().lexeme);
    fail("expected a value", {"rational", "identifier"});
  }

  Rat rational() {
    if (peek().kind != Token::Kind::Rational) fail("expected a rational", {"rational"});
    return parse_rat_lexeme(next().lexeme);
  }

  Domain domain() {
    expect_punct("{");
    Domain d;
    d.push_back(value());
    while (accept_punct(",")) d.push_back(value());
    expect_punct("}");
    return d;
  }

  // value ":" prob pairs until "}"
  std::vector<std::pair<Value, Rat>> prob_entries() {
    std::vector<std::pair<Value, Rat>> entries;
    do {
      Value v = value();
      expect_punct(":");
      entries.emplace_back(std::move(v), rational());
    } while (accept_punct(","));
    return entries;
  }

  void flags(bool& observed, bool& modifiable) {
    while (true) {
      if (accept_kw("observed"))
        observed = true;
      else if (accept_kw("latent"))
        observed = false;
      else if (accept_kw("modifiable"))
        modifiable = true;
      else if (accept_kw("nonmodifiable"))
        modifiable = false;
      else
        break;
    }
  }

  void exo_decl(RawModel& raw) {
    const Token& name_tok = peek();
    VariableDecl decl;
    decl.kind = VarKind::Exogenous;
    decl.observed = false;
    decl.modifiable = false;
    decl.line = name_tok.line;
    decl.col = name_tok.col;
    decl.name = identifier("variable name");

    std::optional<Domain> declared;
    if (accept_kw("in")) declared = domain();

    RawExoTable table;
    table.variable = decl.name;
    table.line = decl.line;
    table.col = decl.col;
    if (accept_kw("given")) {
      table.conditioners.push_back(identifier("conditioner name"));
      while (accept_punct(",")) table.conditioners.push_back(identifier("conditioner name"));
    }
    expect_punct("~");
    expect_punct("{");
    if (table.conditioners.empty()) {
      RawTableRow row;
      row.probs = prob_entries();
      table.rows.push_back(std::move(row));
    } else {
      do {
        RawTableRow row;
        expect_punct("(");
        row.given.push_back(value());
        while (accept_punct(",")) row.given.push_back(value());
        expect_punct(")");
        expect_punct(":");
        expect_punct("{");
        row.probs = prob_entries();
        expect_punct("}");
        table.rows.push_back(std::move(row));
      } while (accept_punct(","));
    }
    expect_punct("}");
    flags(decl.observed, decl.modifiable);

    if (declared) {
      decl.domain = *declared;
    } else {
      // Infer the domain from the first row's keys, in order.
      for (const auto& [v, p] : table.rows.front().probs) decl.domain.push_back(v);
    }
    raw.decls.push_back(std::move(decl));
    raw.tables.push_back(std::move(table));
  }

  void var_decl(RawModel& raw) {
    const Token& name_tok = peek();
    VariableDecl decl;
    decl.kind = VarKind::Endogenous;
    decl.line = name_tok.line;
    decl.col = name_tok.col;
    decl.name = identifier("variable name");
    expect_kw("in");
    decl.domain = domain();

    if (!accept_punct(":=")) fail("expected ':='", {":="});
    RawEquation eq;
    eq.target = decl.name;
    eq.line = decl.line;
    eq.col = decl.col;
    eq.body = expr();
    flags(decl.observed, decl.modifiable);
    raw.decls.push_back(std::move(decl));
    raw.equations.push_back(std::move(eq));
  }

  ExprPtr expr() {
    if (peek().kind == Token::Kind::Rational) return Expr::lit(Value(parse_rat_lexeme(next().lexeme)));
    if (peek_kw("table")) {
      next();
      expect_punct("(");
      std::vector<std::string> vars;
      vars.push_back(identifier("table argument"));
      while (accept_punct(",")) vars.push_back(identifier("table argument"));
      expect_punct(")");
      expect_punct("{");
      std::vector<std::pair<std::vector<Value>, Value>> rows;
      do {
        std::vector<Value> key;
        if (accept_punct("(")) {
          key.push_back(value());
          while (accept_punct(",")) key.push_back(value());
          expect_punct(")");
        } else {
          key.push_back(value());
        }
        expect_punct(":");
        rows.emplace_back(std::move(key), value());
      } while (accept_punct(","));
      expect_punct("}");
      return Expr::table(std::move(vars), std::move(rows));
    }
    if (!at_end() && peek().kind == Token::Kind::Keyword) {
      static const std::vector<std::pair<std::string, Expr::Op>> ops = {
          {"and", Expr::Op::And}, {"or", Expr::Op::Or},   {"xor", Expr::Op::Xor},
          {"not", Expr::Op::Not}, {"eq", Expr::Op::Eq},   {"if", Expr::Op::If}};
      for (const auto& [kw, op] : ops) {
        if (!peek_kw(kw)) continue;
        next();
        expect_punct("(");
        std::vector<ExprPtr> args;
        args.push_back(expr());
        while (accept_punct(",")) args.push_back(expr());
        expect_punct(")");
        const size_t need_min = (op == Expr::Op::Not)  ? 1
                                : (op == Expr::Op::Eq) ? 2
                                : (op == Expr::Op::If) ? 3
                                                       : 2;
        const size_t need_max = (op == Expr::Op::Not)  ? 1
                                : (op == Expr::Op::Eq) ? 2
                                : (op == Expr::Op::If) ? 3
                                                       : args.size();
        if (args.size() < need_min || args.size() > need_max)
          fail("wrong argument count for '" + kw + "'", {});
        return Expr::make(op, std::move(args));
      }
      fail("unexpected keyword in expression", {});
    }
    if (peek().kind == Token::Kind::Identifier) return Expr::ref(next().lexeme);
    fail("expected an expression", {"expression"});
  }

  // ---- queries ----

  EventAtoms event_atoms() {
    EventAtoms atoms;
    do {
      std::string name = identifier("variable name");
      expect_punct("=");
      atoms.emplace_back(std::move(name), value());
    } while (accept_punct(","));
    return atoms;
  }

  bool next_is_kw(const std::string& k) const {
    return pos_ + 1 < toks_.size() && toks_[pos_ + 1].kind == Token::Kind::Keyword &&
           toks_[pos_ + 1].lexeme == k;
  }

  void do_clause(RegimeAst& r) {
    expect_punct("(");
    do {
      RegimeAst::Item item;
      if (accept_punct("(")) {
        item.targets.push_back(identifier("target name"));
        while (accept_punct(",")) item.targets.push_back(identifier("target name"));
        expect_punct(")");
      } else {
        item.targets.push_back(identifier("target name"));
      }
      expect_punct("=");
      if (accept_kw("solve")) {
        item.kind = RegimeAst::Item::Kind::Solve;
        expect_punct("(");
        item.solve_target = identifier("solve target");
        expect_punct("=");
        item.solve_value = value();
        expect_punct(";");
        item.solve_index.push_back(identifier("index name"));
        while (accept_punct(",")) item.solve_index.push_back(identifier("index name"));
        expect_punct(")");
      } else if (accept_kw("cf")) {
        item.kind = RegimeAst::Item::Kind::Cf;
        expect_punct("(");
        item.cf_var = identifier("counterfactual variable");
        expect_punct("|");
        item.cf_regime = std::make_shared<RegimeAst>(regime());
        expect_punct(")");
      } else {
        item.kind = RegimeAst::Item::Kind::Static;
        if (item.targets.size() != 1)
          fail("tuple targets need a solve(...) right-hand side", {});
        item.value = value();
      }
      r.items.push_back(std::move(item));
    } while (accept_punct(","));
    expect_punct(")");
  }

  RegimeAst regime() {
    RegimeAst r;
    if (accept_kw("obs")) {
      r.observational = true;
      return r;
    }
    r.observational = false;
    expect_kw("do");
    do_clause(r);
    while (peek_punct(",") && next_is_kw("do")) {
      accept_punct(",");
      expect_kw("do");
      do_clause(r);
    }
    return r;
  }

  ProbQuery prob_query() {
    ProbQuery q;
    expect_punct("(");
    q.event = event_atoms();
    if (accept_punct("|")) {
      if (accept_kw("given")) {
        q.given = event_atoms();
      } else {
        q.regime = regime();
        if (accept_punct(",")) {
          expect_kw("given");
          q.given = event_atoms();
        }
      }
    }
    expect_punct(")");
    return q;
  }

  ExpectQuery expect_query() {
    ExpectQuery q;
    expect_punct("(");
    q.var = identifier("variable name");
    if (accept_punct("|")) q.regime = regime();
    expect_punct(")");
    return q;
  }

  AceQuery ace_query() {
    AceQuery q;
    q.x = identifier("treatment name");
    expect_punct("->");
    q.y = identifier("outcome name");
    if (accept_kw("adjust")) {
      q.adjusted = true;
      expect_punct("{");
      if (!peek_punct("}")) {
        q.adjust.push_back(identifier("adjustment variable"));
        while (accept_punct(",")) q.adjust.push_back(identifier("adjustment variable"));
      }
      expect_punct("}");
    }
    return q;
  }

  DecomposeQuery decompose_query() {
    DecomposeQuery q;
    q.x = identifier("treatment name");
    expect_punct("->");
    q.y = identifier("outcome name");
    if (!accept_lexeme("via")) fail("expected 'via'", {"via"});
    q.w = identifier("confounder name");
    if (!accept_lexeme("index")) fail("expected 'index'", {"index"});
    q.index.push_back(identifier("index variable"));
    while (accept_punct(",")) q.index.push_back(identifier("index variable"));
    if (accept_lexeme("w1")) {
      q.w1 = collection_rows();
      if (!accept_lexeme("w0")) fail("expected 'w0'", {"w0"});
      q.w0 = collection_rows();
    }
    return q;
  }

  std::vector<std::pair<std::vector<Value>, Value>> collection_rows() {
    expect_punct("{");
    std::vector<std::pair<std::vector<Value>, Value>> rows;
    do {
      std::vector<Value> key;
      if (accept_punct("(")) {
        key.push_back(value());
        while (accept_punct(",")) key.push_back(value());
        expect_punct(")");
      } else {
        key.push_back(value());
      }
      expect_punct(":");
      rows.emplace_back(std::move(key), value());
    } while (accept_punct(","));
    expect_punct("}");
    return rows;
  }

  CheckQuery check_query() {
    CheckQuery q;
    q.name = identifier("check name");
    while (!at_end()) {
      std::string arg = identifier("argument name");
      expect_punct("=");
      q.args.emplace_back(std::move(arg), value());
    }
    return q;
  }

  bool accept_lexeme(const std::string& s) {
    if (!peek_lexeme(s)) return false;
    ++pos_;
    return true;
  }
};

} // namespace

RawModel parse_raw_model(std::string_view text) { return Parser(text).model(); }

Scm parse_model(std::string_view text) { return Scm::validate(parse_raw_model(text)); }

QueryAst parse_query(std::string_view text) { return Parser(text).query(); }

namespace {

void format_flags(std::string& out, const VariableDecl& d) {
  const bool def_obs = d.kind == VarKind::Endogenous;
  const bool def_mod = d.kind == VarKind::Endogenous;
  if (d.observed != def_obs) out += d.observed ? " observed" : " latent";
  if (d.modifiable != def_mod) out += d.modifiable ? " modifiable" : " nonmodifiable";
}

} // namespace

std::string format_model(const Scm& scm) {
  const RawModel& raw = scm.raw();
  std::string out;
  for (const auto& d : raw.decls) {
    if (d.kind == VarKind::Exogenous) {
      const RawExoTable* table = nullptr;
      for (const auto& t : raw.tables)
        if (t.variable == d.name) table = &t;
      out += "exo " + d.name + " in {";
      for (size_t i = 0; i < d.domain.size(); ++i)
        out += (i ? ", " : "") + d.domain[i].str();
      out += "}";
      if (!table->conditioners.empty()) {
        out += " given ";
        for (size_t i = 0; i < table->conditioners.size(); ++i)
          out += (i ? ", " : "") + table->conditioners[i];
      }
      out += " ~ {";
      if (table->conditioners.empty()) {
        const auto& row = table->rows.front();
        for (size_t i = 0; i < row.probs.size(); ++i) {
          if (i) out += ", ";
          out += row.probs[i].first.str() + ": " + rat_to_string(row.probs[i].second);
        }
      } else {
        for (size_t r = 0; r < table->rows.size(); ++r) {
          const auto& row = table->rows[r];
          if (r) out += ",";
          out += " (";
          for (size_t i = 0; i < row.given.size(); ++i)
            out += (i ? ", " : "") + row.given[i].str();
          out += "): {";
          for (size_t i = 0; i < row.probs.size(); ++i) {
            if (i) out += ", ";
            out += row.probs[i].first.str() + ": " + rat_to_string(row.probs[i].second);
          }
          out += "}";
        }
        out += " ";
      }
      out += "}";
      format_flags(out, d);
      out += "\n";
    } else {
      const RawEquation* eq = nullptr;
      for (const auto& e : raw.equations)
        if (e.target == d.name) eq = &e;
      out += "var " + d.name + " in {";
      for (size_t i = 0; i < d.domain.size(); ++i)
        out += (i ? ", " : "") + d.domain[i].str();
      out += "} := " + expr_to_string(*eq->body);
      format_flags(out, d);
      out += "\n";
    }
  }
  return out;
}

WorldSpec resolve_regime(const Scm& scm, const RegimeAst& regime) {
  WorldSpec world;
  for (const auto& item : regime.items) {
    switch (item.kind) {
      case RegimeAst::Item::Kind::Static: {
        const int var = scm.index_of(item.targets[0]);
        (void)scm.value_index(var, item.value); // name/domain check up front
        world.set(item.targets[0], item.value);
        break;
      }
      case RegimeAst::Item::Kind::Solve: {
        world.add_dynamic(make_dynamic_intervention(scm, item.solve_target, item.solve_value,
                                                    item.solve_index, item.targets));
        break;
      }
      case RegimeAst::Item::Kind::Cf: {
        if (item.targets.size() != 1 || item.targets[0] != item.cf_var)
          throw Error(ErrKind::BadArgument,
                      "cf() imports a variable into itself; write X = cf(X | ...)");
        WorldSpec donor = resolve_regime(scm, *item.cf_regime);
        world.add_import(item.cf_var, std::move(donor));
        break;
      }
    }
  }
  return world;
}

} // namespace doeng
