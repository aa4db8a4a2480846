#ifndef DOENG_SCM_HPP
#define DOENG_SCM_HPP

#include "doeng/errors.hpp"
#include "doeng/expr.hpp"
#include "doeng/value.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace doeng {

enum class VarKind { Exogenous, Endogenous };

struct VariableDecl {
  std::string name;
  Domain domain;
  VarKind kind = VarKind::Endogenous;
  bool observed = true;
  bool modifiable = true;
  int line = 0, col = 0; // source position when parsed from text; 0 otherwise
};

// One conditional distribution row: P(variable = value | conditioners = given).
// Domain values absent from `probs` carry probability zero.
struct RawTableRow {
  std::vector<Value> given; // empty when the table is unconditional
  std::vector<std::pair<Value, Rat>> probs;
};

struct RawExoTable {
  std::string variable;
  std::vector<std::string> conditioners;
  std::vector<RawTableRow> rows;
  int line = 0, col = 0;
};

struct RawEquation {
  std::string target;
  ExprPtr body;
  int line = 0, col = 0;
};

// Pre-validation model description, as built by the parser or by hand.
struct RawModel {
  std::vector<VariableDecl> decls;
  std::vector<RawExoTable> tables;
  std::vector<RawEquation> equations;
};

// Full-width assignment buffer: value index per variable, -1 = unset.
// An exogenous configuration leaves endogenous slots at -1.
using IdxAssign = std::vector<int32_t>;

inline constexpr std::int64_t kDefaultSupportCap = std::int64_t(1) << 24;

// A validated causal model. Immutable; safe to share across threads.
class Scm {
public:
  // Collects all violations (cycles, missing/duplicate definitions, mis-summing
  // tables, non-total equation bodies) and throws ValidationError if any.
  static Scm validate(const RawModel& raw);

  int var_count() const { return static_cast<int>(decls_.size()); }
  const VariableDecl& decl(int var) const { return decls_[var]; }
  const std::vector<VariableDecl>& decls() const { return decls_; }

  int index_of(const std::string& name) const; // throws UnknownVariable
  std::optional<int> find(const std::string& name) const;
  bool is_exogenous(int var) const { return decls_[var].kind == VarKind::Exogenous; }

  // Value <-> domain-index mapping. value_index throws ValueNotInDomain.
  int value_index(int var, const Value& v) const;
  const Value& value_at(int var, int32_t idx) const { return decls_[var].domain[idx]; }

  // Equation parents (free-variable order) for endogenous variables,
  // table conditioners for exogenous ones.
  const std::vector<int>& parents(int var) const;

  // Compiled structural equation: flat lookup over parent value indices.
  struct CompiledEq {
    std::vector<int> parents;
    std::vector<std::int64_t> strides;
    std::vector<int32_t> fn;
    ExprPtr body;
    int32_t eval(const IdxAssign& a) const {
      std::int64_t idx = 0;
      for (size_t i = 0; i < parents.size(); ++i) idx += a[parents[i]] * strides[i];
      return fn[idx];
    }
  };

  struct CompiledTable {
    std::vector<int> conditioners;
    // key: conditioner value indices -> probability per domain value
    std::map<std::vector<int32_t>, std::vector<Rat>> rows;
    std::map<std::vector<int32_t>, std::vector<double>> cdfs; // sampling path
  };

  const CompiledEq& equation(int var) const;    // endogenous only
  const CompiledTable& table(int var) const;    // exogenous only

  const std::vector<int>& topo_order() const { return topo_; }
  const std::vector<int>& exogenous_vars() const { return exo_vars_; }
  std::vector<int> observed_vars() const;

  const RawModel& raw() const { return raw_; }

  bool operator==(const Scm& o) const;
  bool operator!=(const Scm& o) const { return !(*this == o); }

private:
  Scm() = default;

  RawModel raw_;
  std::vector<VariableDecl> decls_;
  std::map<std::string, int> name_to_id_;
  std::vector<CompiledEq> eqs_;       // indexed by var id (empty for exogenous)
  std::vector<CompiledTable> tables_; // indexed by var id (empty for endogenous)
  std::vector<int> topo_;
  std::vector<int> exo_vars_; // declaration order
};

// Every variable after all its parents/conditioners, stable by declaration
// order among ties.
std::vector<std::string> topological_order(const Scm& scm);

// Every exogenous configuration with positive probability, exactly once, in
// declaration/domain order; probabilities multiply the conditional tables and
// sum exactly to 1. Throws Error(SupportTooLarge) past the cap.
std::vector<std::pair<IdxAssign, Rat>> exogenous_support(
    const Scm& scm, std::int64_t cap = kDefaultSupportCap);

// Convenience for tests and tools.
Value config_value(const Scm& scm, const IdxAssign& config, const std::string& name);

} // namespace doeng

#endif
