#ifndef DOENG_IDENTITIES_HPP
#define DOENG_IDENTITIES_HPP

#include "doeng/inference.hpp"
#include "doeng/scm.hpp"
#include "doeng/worlds.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace doeng {

// The four graph shapes the identity suite understands.
enum class Shape { Fig1a, Fig1b, Fig2a, Fig2b };

const char* shape_name(Shape s);
std::optional<Shape> shape_from_name(const std::string& name);

// Structural roles resolved against a model. x/y are given; the rest is read
// off the graph (exogenous parents, modifiability flags, the endogenous
// confounder, the observed exogenous covariate).
struct ShapeRoles {
  Shape shape;
  std::string x, y;
  std::string w;                   // Fig2a/2b
  std::string z;                   // Fig2b
  std::vector<std::string> u;      // causes of x acting through x only
  std::vector<std::string> v;      // modifiable split of u (Fig1b/2b)
  std::vector<std::string> theta;  // non-modifiable split of u (Fig1b/2b)
  std::vector<std::string> xi;     // exogenous parents of y
};

// Throws Error(ShapeMismatch) when the graph does not have the layout the
// identity is proved under.
ShapeRoles infer_roles(const Scm& scm, Shape shape, const std::string& x = "X",
                       const std::string& y = "Y");
bool matches_shape(const Scm& scm, Shape shape, const std::string& x = "X",
                   const std::string& y = "Y");

struct IdentityInstance {
  std::string model; // model id plus the stratum/value the instance checks
  Rat lhs, rhs;
  bool equal = false;
};

// A value pair reported for inspection, never asserted equal.
struct IdentityNote {
  std::string model;
  Rat lhs, rhs;
};

struct IdentityReport {
  std::string identity;
  std::vector<IdentityInstance> instances;
  std::vector<IdentityNote> notes;
  bool pass = true;

  void add(std::string model, Rat lhs, Rat rhs);
  void note(std::string model, Rat lhs, Rat rhs);
  nlohmann::json to_json() const;
};

// ---- identity checks ----

// Fig1a: P(y=1 | do(u)) equals P(y=1 | do(x = f_x(u))) for every support u.
IdentityReport check_unconfounded(const Scm& scm, const std::string& model_id,
                                  const std::string& x = "X", const std::string& y = "Y");

// Fig1b: the stratum-indexed intervention on the modifiable causes matches
// do(x=x0) when every stratum is attainable (checked for both selectors);
// otherwise the conditional identity is checked on the unattainable strata.
IdentityReport check_dynamic_unconfounded(const Scm& scm, const Value& x0,
                                          const std::string& model_id,
                                          const std::string& x = "X",
                                          const std::string& y = "Y");

// Fig2a, interventions on the through-x causes only.
IdentityReport check_type_i(const Scm& scm, const Value& x0, const std::string& model_id,
                            const std::string& x = "X", const std::string& y = "Y");

// Fig2a, interventions on the confounder only: per-stratum equality asserted,
// aggregate reported against do(x=x0) without assertion.
IdentityReport check_type_ii(const Scm& scm, const Value& x0, const std::string& model_id,
                             const Selector& selector = select_first(),
                             const std::string& x = "X", const std::string& y = "Y");

// Fig2a, joint interventions on confounder and through-x causes.
IdentityReport check_type_iii(const Scm& scm, const Value& x0, const std::string& model_id,
                              const std::string& x = "X", const std::string& y = "Y");

// Fig2b, joint stratum-indexed interventions on the modifiable causes.
IdentityReport check_modifiable_confounded(const Scm& scm, const Value& x0,
                                           const std::string& model_id,
                                           const Selector& selector = select_first(),
                                           const std::string& x = "X",
                                           const std::string& y = "Y");

// |P(y=1 | do(w=a, x=x0)) - P(y=1 | do(w=b, x=x0))| for two versions a, b
// picked from the same conditional preimage. Throws Error(NeedTwoVersions)
// when the preimage has fewer than two elements.
Rat version_relevance_gap(const Scm& scm, const Assignment& u0, const Value& x0,
                          const Selector& pick_a, const Selector& pick_b,
                          const std::string& x = "X", const std::string& y = "Y");

// ---- effect decomposition ----

// Maps a tuple of u-values to a tuple of w-values.
struct Collection {
  std::vector<std::pair<std::vector<Value>, std::vector<Value>>> entries;
  const std::vector<Value>* find(const std::vector<Value>& key) const;
};

// Per-stratum preimage selection as a Collection over every support stratum.
Collection collection_for(const Scm& scm, const std::string& target, const Value& value,
                          const std::vector<std::string>& index,
                          const std::vector<std::string>& control,
                          const Selector& selector = select_first());

struct DecompositionResult {
  Rat total, indirect, direct;
  Collection w1, w0;
};

// Splits E(y^{w1(U)} - y^{w0(U)}) into the part flowing through x and the
// part bypassing it. Throws Error(InvalidCollection) when a
// collection value is outside the required preimage.
DecompositionResult decompose_effect(const Scm& scm, const Collection& w1,
                                     const Collection& w0, const std::string& x = "X",
                                     const std::string& y = "Y");

// ---- linear outcome special case ----

// Outcome y = alpha . w + beta x + gamma . (w x) + xi over a discrete block
// that provides w and x; xi has finite real (rational) support.
struct LinearModelSpec {
  explicit LinearModelSpec(Scm block_) : block(std::move(block_)) {}
  Scm block;
  std::string x;
  std::vector<std::string> w;
  std::vector<Rat> alpha;
  std::vector<Rat> gamma; // empty = no interaction
  Rat beta;
  std::vector<std::pair<Rat, Rat>> xi; // (value, probability), sums to 1
};

Rat linear_expectation(const LinearModelSpec& lin, const WorldSpec& world);
Rat linear_ace(const LinearModelSpec& lin);
Rat linear_indirect(const LinearModelSpec& lin, const Collection& w1);

// With no interaction, asserts indirect = ACE = beta; with interaction the two
// quantities are reported unasserted.
IdentityReport check_linear(const LinearModelSpec& lin, const Collection& w1,
                            const Collection& w0, const std::string& model_id);

// ---- diagnostics used by the verify command ----

// adjustment_ace over the shape's back-door set equals ace.
IdentityReport check_adjustment(const Scm& scm, const std::string& model_id,
                                const std::string& x = "X", const std::string& y = "Y");

// Counterfactual outcome independent of treatment (given the confounder on
// Fig2a shapes), asserted as zero deviation for both treatment values.
IdentityReport check_ignorability(const Scm& scm, const std::string& model_id,
                                  const std::string& x = "X", const std::string& y = "Y");

struct VerifyOutcome {
  std::vector<IdentityReport> reports;
  std::vector<std::string> skipped; // shape mismatches etc., informational
  bool pass = true;
};

// Runs every check applicable to the model's shape(s).
VerifyOutcome run_applicable_checks(const Scm& scm, const std::string& model_id,
                                    const std::string& x = "X", const std::string& y = "Y");

// ---- random model generation ----

struct RandomScmConfig {
  int max_exog = 4;
  int max_domain = 3;
  int max_denominator = 16;
  bool strictly_positive = true;
  bool all_strata_attainable = true; // Fig1b: reject rows with empty preimages
  bool y_reads_w = true;             // Fig2a: give y a direct w argument
};

// Deterministic per (seed, shape, config); output always validates.
Scm random_scm(std::uint64_t seed, Shape shape, const RandomScmConfig& config = {});

} // namespace doeng

#endif
