#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "causeprobe/causal_graph.hpp"

// Exact representation of finite-domain, acyclic structural causal models:
// observational and interventional (do) queries by enumeration of the
// exogenous product space, and interventional queries answered from a
// graph plus an observational table (truncated factorization).
namespace causeprobe::scm {

using Value = std::int64_t;
// Conjunction of (variable = value) terms.
using Assignment = std::vector<std::pair<std::string, Value>>;

inline constexpr double kProbabilityTolerance = 1e-12;
inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

struct ConstantMechanism {
  Value value = 0;
};
// Lookup table keyed by the parent values in declaration order; must be
// total over the product of the parent domains.
struct TableMechanism {
  std::map<std::vector<Value>, Value> rows;
};
// intercept + sum_k coefficients[k] * parent_k
struct AffineMechanism {
  Value intercept = 0;
  std::vector<Value> coefficients;
};
// Logical AND / OR on {0,1} domains, generalized to min / max.
struct MinMechanism {};
struct MaxMechanism {};
struct CallableMechanism {
  std::function<Value(std::span<const Value>)> fn;
};

using Mechanism = std::variant<ConstantMechanism, TableMechanism, AffineMechanism, MinMechanism,
                               MaxMechanism, CallableMechanism>;

Value evaluate(const Mechanism& mechanism, std::span<const Value> args);

struct ExogenousVariable {
  std::string name;
  std::vector<Value> domain;
  std::vector<double> probabilities;  // aligned with domain
};

struct EndogenousVariable {
  std::string name;
  std::vector<Value> domain;
  // Endogenous and/or exogenous names, in mechanism argument order.
  std::vector<std::string> parents;
  Mechanism mechanism;
  // Set for "meta" variables whose value is an adjacency code (see
  // graph_from_adjacency_code) over these node labels.
  std::vector<std::string> encodes_graph_over;
};

struct ParentRef {
  bool exogenous = false;
  std::size_t index = 0;
};

// Immutable after construction; the constructor enforces every invariant
// (disjoint names, declared parents, acyclicity, normalized exogenous
// tables, total mechanisms with in-domain outputs).
class StructuralCausalModel {
 public:
  StructuralCausalModel(std::vector<ExogenousVariable> exogenous,
                        std::vector<EndogenousVariable> endogenous, std::string name = {});

  const std::string& name() const { return name_; }
  const std::vector<ExogenousVariable>& exogenous() const { return exogenous_; }
  const std::vector<EndogenousVariable>& endogenous() const { return endogenous_; }
  std::vector<std::string> endogenous_names() const;

  std::optional<std::size_t> find_endogenous(std::string_view name) const;
  std::optional<std::size_t> find_exogenous(std::string_view name) const;

  const std::vector<ParentRef>& parent_refs(std::size_t endogenous_index) const {
    return parent_refs_.at(endogenous_index);
  }
  // Endogenous indices, parents before children.
  const std::vector<std::size_t>& evaluation_order() const { return order_; }

  // Unique solution for one exogenous configuration (values aligned with
  // exogenous()); result aligned with endogenous().
  std::vector<Value> solve(std::span<const Value> exogenous_values) const;

  // Product of exogenous domain sizes, saturating at UINT64_MAX.
  std::uint64_t exogenous_configuration_count() const;

 private:
  std::string name_;
  std::vector<ExogenousVariable> exogenous_;
  std::vector<EndogenousVariable> endogenous_;
  std::vector<std::vector<ParentRef>> parent_refs_;
  std::vector<std::size_t> order_;
};

// Exact joint distribution over named variables with finite domains.
// Only configurations with positive probability are stored.
struct JointTable {
  std::vector<std::string> variables;
  std::vector<std::vector<Value>> domains;
  std::map<std::vector<Value>, double> probabilities;

  std::optional<std::size_t> find(std::string_view name) const;
  // Probability of a conjunction; the empty conjunction has probability 1.
  // Throws InputError for unknown variables or out-of-domain values.
  double probability(const Assignment& event) const;
  // Sums to 1, nonnegative, values within domains. Throws ValidationError.
  void validate() const;
  double total() const;
};

// Visits every exogenous configuration with positive weight, in mixed-radix
// order (last exogenous variable varies fastest).
void enumerate_exogenous(
    const StructuralCausalModel& model,
    const std::function<void(std::span<const Value> exogenous, std::span<const Value> endogenous,
                             double weight)>& visit,
    std::uint64_t cap = kDefaultEnumerationCap);

// Exact L1 distribution over the endogenous variables. Throws CapacityError
// if the exogenous product space exceeds `cap`.
JointTable joint_distribution(const StructuralCausalModel& model,
                              std::uint64_t cap = kDefaultEnumerationCap);

// do(assignments): intervened variables get constant mechanisms and no
// parents. Throws InputError for unknown/exogenous variables or values
// outside the domain.
StructuralCausalModel intervene(const StructuralCausalModel& model,
                                const std::map<std::string, Value>& assignments);

struct NonEssentialParent {
  std::string variable;
  std::string parent;
};

// Exhaustive functional-dependence check: a declared parent is
// non-essential when changing only that argument never changes the output.
std::vector<NonEssentialParent> audit_parents(const StructuralCausalModel& model);

struct InducedGraphOptions {
  // Drop declared parents that audit_parents() reports as non-essential.
  bool prune_nonessential = false;
};

// Directed edge i -> j iff i is an endogenous parent of j; symmetric edge iff
// i and j share an exogenous parent. A pair that is both directly linked and
// confounded is reported as the directed edge; see confounded_pairs().
CausalGraph induced_graph(const StructuralCausalModel& model, InducedGraphOptions options = {});

// Endogenous index pairs (i < j) sharing at least one exogenous parent.
std::vector<std::pair<std::size_t, std::size_t>> confounded_pairs(
    const StructuralCausalModel& model, InducedGraphOptions options = {});

enum class QueryLevel { Observational, Interventional };

struct CausalQuery {
  QueryLevel level = QueryLevel::Observational;
  Assignment event;
  Assignment conditions;     // L1 only
  Assignment interventions;  // L2 only

  static CausalQuery observational(Assignment event, Assignment conditions = {}) {
    return {QueryLevel::Observational, std::move(event), std::move(conditions), {}};
  }
  static CausalQuery interventional(Assignment event, Assignment interventions) {
    return {QueryLevel::Interventional, std::move(event), {}, std::move(interventions)};
  }
};

// L1: marginal or conditional of the joint. L2: marginal of the joint of the
// intervened model. Throws UndefinedConditionalError when conditioning on a
// zero-probability event.
double answer_query(const StructuralCausalModel& model, const CausalQuery& query,
                    std::uint64_t cap = kDefaultEnumerationCap);

// Interventional probabilities from a Markovian DAG and an observational
// table via truncated factorization. Throws UnsupportedError for symmetric
// edges, InputError when graph and table variables differ, and
// UndefinedConditionalError when a needed conditional has no support.
double answer_l2_via_meta(const CausalGraph& graph, const JointTable& observational,
                          const CausalQuery& query);

// Model description file (JSON); see docs/scm-format.md.
StructuralCausalModel load_scm(const std::filesystem::path& path);
StructuralCausalModel parse_scm(std::string_view text, const std::string& source_name);

}  // namespace causeprobe::scm
