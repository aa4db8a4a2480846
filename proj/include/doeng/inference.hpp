#ifndef DOENG_INFERENCE_HPP
#define DOENG_INFERENCE_HPP

#include "doeng/scm.hpp"
#include "doeng/worlds.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace doeng {

// Conjunction of equality atoms.
struct Event {
  std::vector<std::pair<std::string, Value>> atoms;
  std::string str() const;
};

// Exact joint law over a named variable list.
struct Distribution {
  std::vector<std::string> labels;
  std::vector<Domain> domains; // per column
  std::map<std::vector<int32_t>, Rat> probs;

  // Total mass of keys matching every given label=value constraint.
  Rat mass(const std::vector<std::pair<std::string, Value>>& constraints) const;
  Rat total() const;
  nlohmann::json to_json() const;
};

struct QueryResult {
  enum class Method { Exact, MonteCarlo };
  Method method = Method::Exact;
  std::string query;

  Rat exact;          // exact path
  double value = 0.0; // mc path
  double stderr_ = 0.0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;

  static QueryResult exact_result(std::string query, Rat value);
  static QueryResult mc_result(std::string query, double value, double stderr_,
                               std::int64_t n, std::uint64_t seed);
  nlohmann::json to_json() const;
  std::string to_text() const; // "5/8 = 0.625" / "0.6251 ± 0.0005 (n=..., seed=...)"
};

// Observational draws of the observed variables.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<Domain> domains;
  std::vector<std::vector<int32_t>> rows;
  std::uint64_t seed = 0;

  const Value& at(size_t row, size_t col) const { return domains[col][rows[row][col]]; }
  std::optional<size_t> column(const std::string& name) const;
};

// ---- exact path ----

Distribution exact_distribution(const Scm& scm, const std::vector<std::string>& vars,
                                const WorldSpec& world,
                                std::int64_t cap = kDefaultSupportCap);

// P(event | given) inside the world's joint law (conditioning is
// post-intervention). Throws Error(ZeroConditioningEvent) when P(given)=0.
QueryResult exact_query(const Scm& scm, const Event& event, const WorldSpec& world,
                        const std::optional<Event>& given = std::nullopt,
                        std::int64_t cap = kDefaultSupportCap);

// Exact expectation of a numeric variable under a world.
Rat expectation(const Scm& scm, const std::string& var, const WorldSpec& world,
                std::int64_t cap = kDefaultSupportCap);

// P(y=1 | do(x=1)) - P(y=1 | do(x=0)); both variables must be {0,1}-valued.
QueryResult ace(const Scm& scm, const std::string& x, const std::string& y,
                std::int64_t cap = kDefaultSupportCap);

// Back-door adjustment sum over the given strata. Exact; throws
// Error(PositivityViolation) naming the first stratum with P(x=1|w) in {0,1}.
QueryResult adjustment_ace(const Scm& scm, const std::string& x, const std::string& y,
                           const std::vector<std::string>& adjust,
                           std::int64_t cap = kDefaultSupportCap);

// Joint law of counterfactual variables evaluated on the same exogenous
// configuration. Labels repeat as "name#k" when a variable appears twice.
Distribution counterfactual_joint(const Scm& scm,
                                  const std::vector<std::pair<std::string, WorldSpec>>& pairs,
                                  std::int64_t cap = kDefaultSupportCap);

// Exact conditional-independence test a ⫫ b | c within a joint law.
// Returns (holds, max absolute deviation of P(a,b|c) from P(a|c)P(b|c)).
std::pair<bool, Rat> cond_indep(const Distribution& joint,
                                const std::vector<std::string>& a,
                                const std::vector<std::string>& b,
                                const std::vector<std::string>& c);

struct PositivityReport {
  std::string x;
  std::vector<std::string> adjust;
  struct Stratum {
    std::vector<Value> values;
    Rat weight;  // P(W=w)
    Rat p_x1;    // P(x=1 | W=w)
    bool ok = false;
  };
  std::vector<Stratum> strata;
  bool pass = true;
};

PositivityReport positivity(const Scm& scm, const std::string& x,
                            const std::vector<std::string>& adjust,
                            std::int64_t cap = kDefaultSupportCap);

// ---- stochastic path ----

// Seeded, chunked sampling: results are a pure function of (seed, n) no matter
// how chunks are scheduled.
QueryResult monte_carlo(const Scm& scm, const Event& event, const WorldSpec& world,
                        const std::optional<Event>& given, std::int64_t n,
                        std::uint64_t seed);

Dataset sample_dataset(const Scm& scm, std::int64_t n, std::uint64_t seed);

// ---- plug-in estimation from data ----

struct PlugInAdjustment {
  double adjusted = 0.0;
  double naive = 0.0;
  double bootstrap_se = 0.0;
  int bootstrap_replicates = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings; // skipped zero-weight strata etc.
};

PlugInAdjustment plug_in_adjustment(const Dataset& data, const std::string& x,
                                    const std::string& y,
                                    const std::vector<std::string>& adjust,
                                    int bootstrap_replicates = 200,
                                    std::uint64_t seed = 1);

// ---- CSV ----

// Header = observed column names; values in DSL literal form; LF endings.
void write_csv(const Dataset& data, std::ostream& os);
Dataset read_csv(std::istream& is);

} // namespace doeng

#endif
