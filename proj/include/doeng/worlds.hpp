#ifndef DOENG_WORLDS_HPP
#define DOENG_WORLDS_HPP

#include "doeng/scm.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace doeng {

// Named partial assignment, e.g. one element of a preimage set.
using Assignment = std::vector<std::pair<std::string, Value>>;

struct StaticIntervention {
  Assignment assignments;
};

// Stratum-indexed assignment: for individuals whose index variables realize a
// given tuple, set the target variables to the tabled values.
struct DynamicIntervention {
  std::vector<std::string> targets;
  std::vector<std::string> index;
  std::vector<std::pair<std::vector<Value>, std::vector<Value>>> table;
};

// A regime to evaluate under. Observational is the empty regime; static, dynamic
// and imported mechanisms may be combined as long as each variable is set by
// at most one of them.
struct WorldSpec {
  StaticIntervention statics;
  std::vector<DynamicIntervention> dynamics;

  struct Import {
    std::string variable;
    std::shared_ptr<const WorldSpec> donor; // evaluated on the same configuration
  };
  std::vector<Import> imports;

  static WorldSpec observational() { return {}; }
  static WorldSpec do_static(Assignment a) {
    WorldSpec w;
    w.statics.assignments = std::move(a);
    return w;
  }
  WorldSpec& set(std::string var, Value v) {
    statics.assignments.emplace_back(std::move(var), std::move(v));
    return *this;
  }
  WorldSpec& add_dynamic(DynamicIntervention d) {
    dynamics.push_back(std::move(d));
    return *this;
  }
  WorldSpec& add_import(std::string var, WorldSpec donor) {
    imports.push_back({std::move(var), std::make_shared<WorldSpec>(std::move(donor))});
    return *this;
  }
};

// Parent tuples the structural equation maps to `value`, in row-major parent
// domain order.
std::vector<Assignment> preimage(const Scm& scm, const std::string& target,
                                 const Value& value);

// Completions over the non-fixed parents; may be empty.
std::vector<Assignment> conditional_preimage(const Scm& scm, const std::string& target,
                                             const Value& value, const Assignment& fixed);

struct AttainabilityReport {
  std::string target;
  Value value;
  std::vector<std::string> index;
  std::vector<std::string> control;

  struct Stratum {
    std::vector<Value> index_values;
    Rat probability; // observational joint probability of the stratum
    std::vector<Assignment> preimage;
    bool attainable = false;
  };
  std::vector<Stratum> strata;

  bool all_attainable() const {
    for (const auto& s : strata)
      if (!s.attainable) return false;
    return true;
  }
  // The attainable-strata set.
  std::vector<std::vector<Value>> attainable_set() const {
    std::vector<std::vector<Value>> out;
    for (const auto& s : strata)
      if (s.attainable) out.push_back(s.index_values);
    return out;
  }
};

// For each positive-probability stratum of the index variables, the
// conditional preimage over the control variables. Requires every parent of
// the target to be either an index variable or a control variable.
AttainabilityReport attainability(const Scm& scm, const std::string& target,
                                  const Value& value,
                                  const std::vector<std::string>& index,
                                  const std::vector<std::string>& control);

// Picks one element from a nonempty preimage list.
using Selector = std::function<size_t(const std::vector<Assignment>&)>;
Selector select_first();
Selector select_last();

// Builds the stratum table by selecting one preimage element per stratum.
// Throws Error(UnattainableStratum) naming the first empty stratum.
DynamicIntervention make_dynamic_intervention(const Scm& scm, const std::string& target,
                                              const Value& value,
                                              const std::vector<std::string>& index,
                                              const std::vector<std::string>& control,
                                              const Selector& selector = select_first());

// A world compiled against one model: mechanism per variable, evaluation order
// resolved, donor worlds flattened. Immutable once built.
class CompiledWorld {
public:
  static CompiledWorld compile(const Scm& scm, const WorldSpec& world);

  // Evaluates every sub-world on the given exogenous configuration and returns
  // the root world's full assignment. `scratch` carries the per-world buffers
  // so concurrent callers can realize independently.
  struct Scratch {
    std::vector<IdxAssign> bufs;
  };
  const IdxAssign& realize(const Scm& scm, const IdxAssign& config, Scratch& scratch) const;

private:
  struct Step {
    enum class Kind { Config, Static, Dynamic, Import, Equation } kind;
    int var = -1;
    int32_t value = -1; // Static
    int dyn = -1;       // Dynamic: index into its world's dynamics
    int slot = -1;      // Dynamic: position among the intervention's targets
    int donor = -1;     // Import: sub-world id
    int donor_var = -1; // Import: variable in the donor world
  };
  struct CompiledDynamic {
    std::vector<int> index_vars;
    std::vector<int> target_vars;
    std::map<std::vector<int32_t>, std::vector<int32_t>> table;
  };
  struct SubWorld {
    std::vector<Step> steps;
    std::vector<CompiledDynamic> dynamics;
  };
  std::vector<SubWorld> worlds_; // donors first; root last
};

// One-shot realization (compiles internally; use CompiledWorld for loops).
Assignment realize_world(const Scm& scm, const IdxAssign& config, const WorldSpec& world);

} // namespace doeng

#endif
