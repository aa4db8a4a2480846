#ifndef DOENG_DSL_HPP
#define DOENG_DSL_HPP

#include "doeng/inference.hpp"
#include "doeng/scm.hpp"
#include "doeng/worlds.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace doeng {

struct Token {
  enum class Kind { Keyword, Identifier, Rational, Punct };
  Kind kind;
  std::string lexeme;
  int line = 1; // 1-based
  int col = 1;
};

// Drops whitespace and # comments. Throws ParseError on an illegal character.
std::vector<Token> tokenize(std::string_view text);

// Parse without validation (exposed for tooling/tests).
RawModel parse_raw_model(std::string_view text);

// Parse + validate; validation errors carry the declaration's position.
Scm parse_model(std::string_view text);

// Canonical text form; parse_model(format_model(m)) is structurally equal to m
// and format is byte-stable.
std::string format_model(const Scm& scm);

// ---- queries ----

// Textual regime; resolved against a model before evaluation.
struct RegimeAst {
  struct Item {
    enum class Kind { Static, Solve, Cf } kind = Kind::Static;
    std::vector<std::string> targets; // one target unless a solve tuple
    Value value;                      // Static
    std::string solve_target;         // Solve: attain solve_target=solve_value
    Value solve_value;
    std::vector<std::string> solve_index;
    std::string cf_var; // Cf: import this variable's value from the donor
    std::shared_ptr<RegimeAst> cf_regime;
  };
  bool observational = true; // no items
  std::vector<Item> items;
};

using EventAtoms = std::vector<std::pair<std::string, Value>>;

struct ProbQuery {
  EventAtoms event;
  RegimeAst regime;
  std::optional<EventAtoms> given;
};
struct ExpectQuery {
  std::string var;
  RegimeAst regime;
};
struct AceQuery {
  std::string x, y;
  bool adjusted = false; // "adjust {...}" present
  std::vector<std::string> adjust;
};
struct DecomposeQuery {
  std::string x, y, w;
  std::vector<std::string> index; // the u variables
  // Optional explicit collections (u-tuple -> w value); default selector
  // collections when absent.
  std::vector<std::pair<std::vector<Value>, Value>> w1, w0;
};
struct CheckQuery {
  std::string name;
  std::vector<std::pair<std::string, Value>> args;
};

struct QueryAst {
  std::variant<ProbQuery, ExpectQuery, AceQuery, DecomposeQuery, CheckQuery> node;
};

QueryAst parse_query(std::string_view text);

// Resolve a textual regime into a concrete world: names checked, solve()
// turned into a stratum table via make_dynamic_intervention, cf() into an
// import of the donor world.
WorldSpec resolve_regime(const Scm& scm, const RegimeAst& regime);

} // namespace doeng

#endif
