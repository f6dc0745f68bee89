#include "causeprobe/scm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "causeprobe/error.hpp"

namespace causeprobe::scm {

namespace {

constexpr std::uint64_t kMechanismCheckCap = std::uint64_t{1} << 20;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool in_domain(const std::vector<Value>& domain, Value v) {
  return std::find(domain.begin(), domain.end(), v) != domain.end();
}

std::uint64_t saturating_product(const std::vector<std::size_t>& sizes) {
  std::uint64_t total = 1;
  for (std::size_t s : sizes) {
    if (s == 0) return 0;
    if (total > std::numeric_limits<std::uint64_t>::max() / s) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    total *= s;
  }
  return total;
}

// Calls visit(values) for every element of the product of `domains`, last
// coordinate fastest.
template <typename Fn>
void for_each_configuration(const std::vector<const std::vector<Value>*>& domains, Fn&& visit) {
  const std::size_t k = domains.size();
  std::vector<std::size_t> idx(k, 0);
  std::vector<Value> values(k);
  for (const auto* d : domains) {
    if (d->empty()) return;
  }
  for (std::size_t p = 0; p < k; ++p) values[p] = (*domains[p])[0];
  while (true) {
    visit(std::span<const Value>(values));
    std::size_t p = k;
    while (p > 0) {
      --p;
      if (++idx[p] < domains[p]->size()) {
        values[p] = (*domains[p])[idx[p]];
        break;
      }
      idx[p] = 0;
      values[p] = (*domains[p])[0];
      if (p == 0) return;
    }
    if (k == 0) return;
  }
}

}  // namespace

Value evaluate(const Mechanism& mechanism, std::span<const Value> args) {
  return std::visit(
      overloaded{
          [](const ConstantMechanism& m) { return m.value; },
          [&](const TableMechanism& m) {
            auto it = m.rows.find(std::vector<Value>(args.begin(), args.end()));
            if (it == m.rows.end()) throw InputError("lookup table has no row for these arguments");
            return it->second;
          },
          [&](const AffineMechanism& m) {
            if (m.coefficients.size() != args.size()) {
              throw InputError("affine mechanism arity mismatch");
            }
            Value out = m.intercept;
            for (std::size_t k = 0; k < args.size(); ++k) out += m.coefficients[k] * args[k];
            return out;
          },
          [&](const MinMechanism&) {
            if (args.empty()) throw InputError("min mechanism needs at least one argument");
            return *std::min_element(args.begin(), args.end());
          },
          [&](const MaxMechanism&) {
            if (args.empty()) throw InputError("max mechanism needs at least one argument");
            return *std::max_element(args.begin(), args.end());
          },
          [&](const CallableMechanism& m) {
            if (!m.fn) throw InputError("empty callable mechanism");
            return m.fn(args);
          },
      },
      mechanism);
}

StructuralCausalModel::StructuralCausalModel(std::vector<ExogenousVariable> exogenous,
                                             std::vector<EndogenousVariable> endogenous,
                                             std::string name)
    : name_(std::move(name)), exogenous_(std::move(exogenous)), endogenous_(std::move(endogenous)) {
  std::set<std::string> names;
  auto check_domain = [](const std::string& var, const std::vector<Value>& domain) {
    if (domain.empty()) throw StructuralError("variable '" + var + "' has an empty domain");
    std::set<Value> unique(domain.begin(), domain.end());
    if (unique.size() != domain.size()) {
      throw StructuralError("variable '" + var + "' lists a domain value twice");
    }
  };

  for (const auto& u : exogenous_) {
    if (u.name.empty()) throw StructuralError("exogenous variable with empty name");
    if (!names.insert(u.name).second) {
      throw StructuralError("variable name '" + u.name + "' declared twice");
    }
    check_domain(u.name, u.domain);
    if (u.probabilities.size() != u.domain.size()) {
      throw StructuralError("exogenous '" + u.name + "': probability table size " +
                            std::to_string(u.probabilities.size()) + " != domain size " +
                            std::to_string(u.domain.size()));
    }
    double sum = 0.0;
    for (double p : u.probabilities) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw StructuralError("exogenous '" + u.name + "' has a negative or non-finite probability");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      throw StructuralError("exogenous '" + u.name + "' probabilities sum to " +
                            std::to_string(sum) + ", not 1");
    }
  }
  for (const auto& v : endogenous_) {
    if (v.name.empty()) throw StructuralError("endogenous variable with empty name");
    if (!names.insert(v.name).second) {
      throw StructuralError("variable name '" + v.name +
                            "' declared twice (endogenous and exogenous names must be disjoint)");
    }
    check_domain(v.name, v.domain);
    if (v.encodes_graph_over.size() > 8) {
      throw StructuralError("'" + v.name + "' encodes a graph over more than 8 nodes");
    }
  }

  // Resolve parents.
  parent_refs_.resize(endogenous_.size());
  for (std::size_t i = 0; i < endogenous_.size(); ++i) {
    const auto& v = endogenous_[i];
    std::set<std::string> seen;
    for (const auto& p : v.parents) {
      if (!seen.insert(p).second) {
        throw StructuralError("'" + v.name + "' lists parent '" + p + "' twice");
      }
      if (auto e = find_endogenous(p)) {
        parent_refs_[i].push_back({false, *e});
      } else if (auto u = find_exogenous(p)) {
        parent_refs_[i].push_back({true, *u});
      } else {
        throw StructuralError("'" + v.name + "' has undeclared parent '" + p + "'");
      }
    }
  }

  // Topological order with cycle reporting (0 = unvisited, 1 = on stack, 2 = done).
  std::vector<int> mark(endogenous_.size(), 0);
  std::vector<std::size_t> stack;
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    if (mark[i] == 2) return;
    if (mark[i] == 1) {
      auto from = std::find(stack.begin(), stack.end(), i);
      std::string cycle;
      for (auto it = from; it != stack.end(); ++it) cycle += endogenous_[*it].name + " -> ";
      cycle += endogenous_[i].name;
      throw StructuralError("cyclic structural assignments: " + cycle);
    }
    mark[i] = 1;
    stack.push_back(i);
    for (const auto& ref : parent_refs_[i]) {
      if (!ref.exogenous) visit(ref.index);
    }
    stack.pop_back();
    mark[i] = 2;
    order_.push_back(i);
  };
  for (std::size_t i = 0; i < endogenous_.size(); ++i) visit(i);

  // Mechanisms must be total with in-domain outputs over the parent domains.
  for (std::size_t i = 0; i < endogenous_.size(); ++i) {
    const auto& v = endogenous_[i];
    std::vector<const std::vector<Value>*> domains;
    std::vector<std::size_t> sizes;
    for (const auto& ref : parent_refs_[i]) {
      const auto& d = ref.exogenous ? exogenous_[ref.index].domain : endogenous_[ref.index].domain;
      domains.push_back(&d);
      sizes.push_back(d.size());
    }
    if (const auto* affine = std::get_if<AffineMechanism>(&v.mechanism)) {
      if (affine->coefficients.size() != domains.size()) {
        throw StructuralError("'" + v.name + "': affine mechanism has " +
                              std::to_string(affine->coefficients.size()) +
                              " coefficients for " + std::to_string(domains.size()) + " parents");
      }
    }
    if ((std::holds_alternative<MinMechanism>(v.mechanism) ||
         std::holds_alternative<MaxMechanism>(v.mechanism)) &&
        domains.empty()) {
      throw StructuralError("'" + v.name + "': min/max mechanism needs parents");
    }
    if (saturating_product(sizes) > kMechanismCheckCap) {
      throw CapacityError("'" + v.name + "': parent configuration space too large to verify");
    }
    for_each_configuration(domains, [&](std::span<const Value> args) {
      Value out;
      try {
        out = evaluate(v.mechanism, args);
      } catch (const InputError& e) {
        throw StructuralError("'" + v.name + "': mechanism is not total: " + e.what());
      }
      if (!in_domain(v.domain, out)) {
        std::string where;
        for (Value a : args) where += (where.empty() ? "" : ",") + std::to_string(a);
        throw StructuralError("'" + v.name + "': mechanism yields " + std::to_string(out) +
                              " outside the domain for arguments (" + where + ")");
      }
    });
  }
}

std::vector<std::string> StructuralCausalModel::endogenous_names() const {
  std::vector<std::string> out;
  out.reserve(endogenous_.size());
  for (const auto& v : endogenous_) out.push_back(v.name);
  return out;
}

std::optional<std::size_t> StructuralCausalModel::find_endogenous(std::string_view name) const {
  for (std::size_t i = 0; i < endogenous_.size(); ++i) {
    if (endogenous_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> StructuralCausalModel::find_exogenous(std::string_view name) const {
  for (std::size_t i = 0; i < exogenous_.size(); ++i) {
    if (exogenous_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<Value> StructuralCausalModel::solve(std::span<const Value> exogenous_values) const {
  if (exogenous_values.size() != exogenous_.size()) {
    throw InputError("expected " + std::to_string(exogenous_.size()) + " exogenous values");
  }
  std::vector<Value> values(endogenous_.size(), 0);
  std::vector<Value> args;
  for (std::size_t i : order_) {
    args.clear();
    for (const auto& ref : parent_refs_[i]) {
      args.push_back(ref.exogenous ? exogenous_values[ref.index] : values[ref.index]);
    }
    values[i] = evaluate(endogenous_[i].mechanism, args);
  }
  return values;
}

std::uint64_t StructuralCausalModel::exogenous_configuration_count() const {
  std::vector<std::size_t> sizes;
  for (const auto& u : exogenous_) sizes.push_back(u.domain.size());
  return saturating_product(sizes);
}

// ---------------------------------------------------------------------------
// Joint tables

std::optional<std::size_t> JointTable::find(std::string_view name) const {
  auto it = std::find(variables.begin(), variables.end(), name);
  if (it == variables.end()) return std::nullopt;
  return static_cast<std::size_t>(it - variables.begin());
}

double JointTable::probability(const Assignment& event) const {
  std::vector<std::pair<std::size_t, Value>> terms;
  for (const auto& [name, value] : event) {
    auto idx = find(name);
    if (!idx) throw InputError("unknown variable '" + name + "' in event");
    if (!in_domain(domains[*idx], value)) {
      throw InputError("value " + std::to_string(value) + " outside the domain of '" + name + "'");
    }
    terms.emplace_back(*idx, value);
  }
  double p = 0.0;
  for (const auto& [config, prob] : probabilities) {
    bool match = true;
    for (const auto& [idx, value] : terms) {
      if (config[idx] != value) {
        match = false;
        break;
      }
    }
    if (match) p += prob;
  }
  return p;
}

double JointTable::total() const {
  double sum = 0.0;
  for (const auto& [config, prob] : probabilities) sum += prob;
  return sum;
}

void JointTable::validate() const {
  if (domains.size() != variables.size()) {
    throw ValidationError("joint table: one domain per variable required");
  }
  std::set<std::string> unique(variables.begin(), variables.end());
  if (unique.size() != variables.size()) throw ValidationError("joint table: duplicate variable");
  for (const auto& [config, prob] : probabilities) {
    if (config.size() != variables.size()) {
      throw ValidationError("joint table: configuration arity mismatch");
    }
    for (std::size_t k = 0; k < config.size(); ++k) {
      if (!in_domain(domains[k], config[k])) {
        throw ValidationError("joint table: value outside the domain of '" + variables[k] + "'");
      }
    }
    if (!(prob >= 0.0)) throw ValidationError("joint table: negative probability");
  }
  if (std::abs(total() - 1.0) > kProbabilityTolerance) {
    throw ValidationError("joint table: probabilities sum to " + std::to_string(total()));
  }
}

void enumerate_exogenous(
    const StructuralCausalModel& model,
    const std::function<void(std::span<const Value>, std::span<const Value>, double)>& visit,
    std::uint64_t cap) {
  const std::uint64_t count = model.exogenous_configuration_count();
  if (count > cap) {
    throw CapacityError("exogenous product space has " +
                        (count == std::numeric_limits<std::uint64_t>::max()
                             ? std::string("more than 2^64")
                             : std::to_string(count)) +
                        " configurations, above the enumeration cap of " + std::to_string(cap) +
                        "; exact enumeration is infeasible and sampling is not supported");
  }
  const auto& exo = model.exogenous();
  std::vector<const std::vector<Value>*> domains;
  for (const auto& u : exo) domains.push_back(&u.domain);
  std::vector<std::size_t> position(exo.size(), 0);
  for_each_configuration(domains, [&](std::span<const Value> values) {
    double weight = 1.0;
    for (std::size_t k = 0; k < exo.size(); ++k) {
      const auto& d = exo[k].domain;
      const auto at = static_cast<std::size_t>(std::find(d.begin(), d.end(), values[k]) - d.begin());
      weight *= exo[k].probabilities[at];
    }
    if (weight <= 0.0) return;
    const auto endo = model.solve(values);
    visit(values, endo, weight);
  });
}

JointTable joint_distribution(const StructuralCausalModel& model, std::uint64_t cap) {
  JointTable table;
  for (const auto& v : model.endogenous()) {
    table.variables.push_back(v.name);
    table.domains.push_back(v.domain);
  }
  enumerate_exogenous(
      model,
      [&](std::span<const Value>, std::span<const Value> endo, double weight) {
        table.probabilities[std::vector<Value>(endo.begin(), endo.end())] += weight;
      },
      cap);
  return table;
}

StructuralCausalModel intervene(const StructuralCausalModel& model,
                                const std::map<std::string, Value>& assignments) {
  auto endogenous = model.endogenous();
  for (const auto& [name, value] : assignments) {
    auto idx = model.find_endogenous(name);
    if (!idx) {
      if (model.find_exogenous(name)) {
        throw InputError("cannot intervene on exogenous variable '" + name + "'");
      }
      throw InputError("cannot intervene on unknown variable '" + name + "'");
    }
    auto& v = endogenous[*idx];
    if (!in_domain(v.domain, value)) {
      throw InputError("intervention value " + std::to_string(value) + " outside the domain of '" +
                       name + "'");
    }
    v.parents.clear();
    v.mechanism = ConstantMechanism{value};
  }
  return StructuralCausalModel(model.exogenous(), std::move(endogenous), model.name());
}

// ---------------------------------------------------------------------------
// Graphs

std::vector<NonEssentialParent> audit_parents(const StructuralCausalModel& model) {
  std::vector<NonEssentialParent> out;
  const auto& endo = model.endogenous();
  const auto& exo = model.exogenous();
  for (std::size_t i = 0; i < endo.size(); ++i) {
    const auto& refs = model.parent_refs(i);
    std::vector<const std::vector<Value>*> domains;
    for (const auto& ref : refs) {
      domains.push_back(ref.exogenous ? &exo[ref.index].domain : &endo[ref.index].domain);
    }
    std::vector<bool> essential(refs.size(), false);
    for_each_configuration(domains, [&](std::span<const Value> args) {
      const Value base = evaluate(endo[i].mechanism, args);
      std::vector<Value> varied(args.begin(), args.end());
      for (std::size_t p = 0; p < refs.size(); ++p) {
        if (essential[p]) continue;
        for (Value alt : *domains[p]) {
          if (alt == args[p]) continue;
          varied[p] = alt;
          if (evaluate(endo[i].mechanism, varied) != base) {
            essential[p] = true;
            break;
          }
        }
        varied[p] = args[p];
      }
    });
    for (std::size_t p = 0; p < refs.size(); ++p) {
      if (!essential[p]) out.push_back({endo[i].name, endo[i].parents[p]});
    }
  }
  return out;
}

namespace {

std::vector<std::vector<ParentRef>> effective_parents(const StructuralCausalModel& model,
                                                      InducedGraphOptions options) {
  std::vector<std::vector<ParentRef>> parents;
  for (std::size_t i = 0; i < model.endogenous().size(); ++i) parents.push_back(model.parent_refs(i));
  if (!options.prune_nonessential) return parents;
  for (const auto& ne : audit_parents(model)) {
    const std::size_t i = *model.find_endogenous(ne.variable);
    const auto& names = model.endogenous()[i].parents;
    const auto pos = static_cast<std::size_t>(std::find(names.begin(), names.end(), ne.parent) -
                                              names.begin());
    const ParentRef target = model.parent_refs(i)[pos];
    auto& list = parents[i];
    list.erase(std::remove_if(list.begin(), list.end(),
                              [&](const ParentRef& r) {
                                return r.exogenous == target.exogenous && r.index == target.index;
                              }),
               list.end());
  }
  return parents;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> confounded_pairs(const StructuralCausalModel& model,
                                                                  InducedGraphOptions options) {
  const auto parents = effective_parents(model, options);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    for (std::size_t j = i + 1; j < parents.size(); ++j) {
      bool shared = false;
      for (const auto& a : parents[i]) {
        if (!a.exogenous) continue;
        for (const auto& b : parents[j]) {
          if (b.exogenous && b.index == a.index) shared = true;
        }
      }
      if (shared) out.emplace_back(i, j);
    }
  }
  return out;
}

CausalGraph induced_graph(const StructuralCausalModel& model, InducedGraphOptions options) {
  CausalGraph g(model.endogenous_names());
  for (const auto& [i, j] : confounded_pairs(model, options)) g.add_symmetric(i, j);
  const auto parents = effective_parents(model, options);
  for (std::size_t j = 0; j < parents.size(); ++j) {
    for (const auto& ref : parents[j]) {
      if (!ref.exogenous) g.add_directed(ref.index, j);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Queries

namespace {

std::map<std::string, Value> to_map(const Assignment& assignment, const char* what) {
  std::map<std::string, Value> out;
  for (const auto& [name, value] : assignment) {
    auto [it, inserted] = out.emplace(name, value);
    if (!inserted && it->second != value) {
      throw InputError(std::string(what) + " assigns '" + name + "' two different values");
    }
  }
  return out;
}

Assignment merged(const Assignment& a, const Assignment& b) {
  Assignment out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double observational_answer(const JointTable& joint, const CausalQuery& q) {
  if (q.conditions.empty()) return joint.probability(q.event);
  const double denominator = joint.probability(q.conditions);
  if (denominator <= 0.0) {
    throw UndefinedConditionalError("conditioning event has probability zero");
  }
  return joint.probability(merged(q.event, q.conditions)) / denominator;
}

void check_query_shape(const CausalQuery& q) {
  if (q.level == QueryLevel::Observational && !q.interventions.empty()) {
    throw InputError("observational queries cannot carry interventions");
  }
  if (q.level == QueryLevel::Interventional && !q.conditions.empty()) {
    throw InputError("interventional queries with conditions are not supported");
  }
}

}  // namespace

double answer_query(const StructuralCausalModel& model, const CausalQuery& query, std::uint64_t cap) {
  check_query_shape(query);
  if (query.level == QueryLevel::Observational) {
    return observational_answer(joint_distribution(model, cap), query);
  }
  const auto intervened = intervene(model, to_map(query.interventions, "intervention"));
  return joint_distribution(intervened, cap).probability(query.event);
}

double answer_l2_via_meta(const CausalGraph& graph, const JointTable& observational,
                          const CausalQuery& query) {
  check_query_shape(query);
  observational.validate();
  if (graph.symmetric_count() > 0) {
    throw UnsupportedError(
        "graph has symmetric (confounded) edges; identification beyond truncated factorization "
        "is not supported");
  }
  {
    std::set<std::string> a(graph.nodes().begin(), graph.nodes().end());
    std::set<std::string> b(observational.variables.begin(), observational.variables.end());
    if (a != b) throw InputError("graph variables differ from the observational table's variables");
  }
  const auto topo = graph.topological_order();
  if (!topo) throw InputError("graph is cyclic; truncated factorization needs a DAG");
  if (query.level == QueryLevel::Observational) return observational_answer(observational, query);

  const std::size_t n = graph.size();
  // column[g] = table column of graph node g
  std::vector<std::size_t> column(n);
  for (std::size_t g = 0; g < n; ++g) column[g] = *observational.find(graph.label(g));

  std::vector<std::optional<Value>> pinned(n);
  for (const auto& [name, value] : to_map(query.interventions, "intervention")) {
    const std::size_t g = graph.index_of(name);
    const auto& dom = observational.domains[column[g]];
    if (!in_domain(dom, value)) {
      throw InputError("intervention value outside the domain of '" + name + "'");
    }
    pinned[g] = value;
  }
  std::vector<std::pair<std::size_t, Value>> event;
  for (const auto& [name, value] : query.event) {
    const std::size_t g = graph.index_of(name);
    if (!in_domain(observational.domains[column[g]], value)) {
      throw InputError("event value outside the domain of '" + name + "'");
    }
    event.emplace_back(g, value);
  }

  // Family and parent marginals for every non-intervened node.
  std::vector<std::vector<std::size_t>> parents(n);
  std::vector<std::map<std::vector<Value>, double>> family(n), parent_marginal(n);
  for (std::size_t g = 0; g < n; ++g) {
    if (pinned[g]) continue;
    parents[g] = graph.parents(g);
  }
  for (const auto& [config, prob] : observational.probabilities) {
    for (std::size_t g = 0; g < n; ++g) {
      if (pinned[g]) continue;
      std::vector<Value> key;
      key.reserve(parents[g].size() + 1);
      for (std::size_t p : parents[g]) key.push_back(config[column[p]]);
      parent_marginal[g][key] += prob;
      key.push_back(config[column[g]]);
      family[g][key] += prob;
    }
  }

  std::vector<Value> current(n, 0);
  double result = 0.0;
  std::function<void(std::size_t, double)> descend = [&](std::size_t depth, double weight) {
    if (depth == n) {
      for (const auto& [g, value] : event) {
        if (current[g] != value) return;
      }
      result += weight;
      return;
    }
    const std::size_t g = (*topo)[depth];
    if (pinned[g]) {
      current[g] = *pinned[g];
      descend(depth + 1, weight);
      return;
    }
    std::vector<Value> key;
    for (std::size_t p : parents[g]) key.push_back(current[p]);
    auto pm = parent_marginal[g].find(key);
    if (pm == parent_marginal[g].end() || pm->second <= 0.0) {
      throw UndefinedConditionalError("P(" + graph.label(g) +
                                      " | parents) is undefined: the parent configuration "
                                      "reached under the intervention has no observational support");
    }
    key.push_back(0);
    for (Value v : observational.domains[column[g]]) {
      key.back() = v;
      auto fm = family[g].find(key);
      if (fm == family[g].end() || fm->second <= 0.0) continue;
      current[g] = v;
      descend(depth + 1, weight * (fm->second / pm->second));
    }
  };
  descend(0, 1.0);
  return result;
}

}  // namespace causeprobe::scm
