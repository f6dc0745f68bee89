#include "causeprobe/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <set>

#include "causeprobe/error.hpp"
#include "causeprobe/prompts.hpp"

namespace causeprobe::metrics {

CausalGraph aligned(const CausalGraph& pred, const CausalGraph& truth) {
  if (pred.nodes() == truth.nodes()) return pred;
  if (pred.size() != truth.size()) {
    throw InputError("graphs have different node counts (" + std::to_string(pred.size()) +
                     " vs " + std::to_string(truth.size()) + ")");
  }
  std::vector<std::size_t> order;
  for (const auto& label : truth.nodes()) {
    auto idx = pred.find(label);
    if (!idx) throw InputError("node '" + label + "' missing from the predicted graph");
    order.push_back(*idx);
  }
  return pred.permuted(order);
}

std::size_t shd(const CausalGraph& pred, const CausalGraph& truth) {
  const auto p = aligned(pred, truth);
  std::size_t d = 0;
  truth.for_each_pair([&](std::size_t i, std::size_t j, EdgeState s) {
    if (p.state(i, j) != s) ++d;
  });
  return d;
}

namespace {

// Reachability along directed edges, inclusive of the start node. Works on
// cyclic graphs too.
std::vector<bool> reach(const CausalGraph& g, std::size_t from) {
  std::vector<bool> seen(g.size(), false);
  std::vector<std::size_t> stack{from};
  seen[from] = true;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : g.children(v)) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

std::size_t sid_single(const CausalGraph& pred, const CausalGraph& truth,
                       const std::vector<std::vector<bool>>& truth_reach) {
  const std::size_t n = truth.size();
  std::size_t mistakes = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<bool> pa(n, false);
    for (std::size_t p : pred.parents(i)) pa[p] = true;
    const auto pred_reach = reach(pred, i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (!pred_reach[j]) {
        if (truth_reach[i][j]) ++mistakes;
      } else if (!valid_adjustment(truth, i, j, pa)) {
        ++mistakes;
      }
    }
  }
  return mistakes;
}

}  // namespace

bool d_separated(const CausalGraph& g, std::size_t a, std::size_t b, const std::vector<bool>& z) {
  const std::size_t n = g.size();
  if (z[a] || z[b]) return true;
  // Ancestors of z, inclusive: colliders in this set are open.
  std::vector<bool> anc(n, false);
  std::vector<std::size_t> stack;
  for (std::size_t v = 0; v < n; ++v) {
    if (z[v]) {
      anc[v] = true;
      stack.push_back(v);
    }
  }
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t p : g.parents(v)) {
      if (!anc[p]) {
        anc[p] = true;
        stack.push_back(p);
      }
    }
  }
  // Bayes-ball over (node, arrived-from-child) states.
  std::vector<std::array<bool, 2>> visited(n, {false, false});
  std::deque<std::pair<std::size_t, bool>> queue{{a, true}};
  while (!queue.empty()) {
    const auto [v, up] = queue.front();
    queue.pop_front();
    if (visited[v][up]) continue;
    visited[v][up] = true;
    if (v == b) return false;
    if (up) {
      if (z[v]) continue;
      for (std::size_t p : g.parents(v)) queue.emplace_back(p, true);
      for (std::size_t c : g.children(v)) queue.emplace_back(c, false);
    } else {
      if (!z[v]) {
        for (std::size_t c : g.children(v)) queue.emplace_back(c, false);
      }
      if (anc[v]) {
        for (std::size_t p : g.parents(v)) queue.emplace_back(p, true);
      }
    }
  }
  return true;
}

bool valid_adjustment(const CausalGraph& truth, std::size_t cause, std::size_t effect,
                      const std::vector<bool>& adjustment) {
  const std::size_t n = truth.size();
  if (adjustment[cause] || adjustment[effect]) return false;
  const auto from_cause = reach(truth, cause);
  // Nodes other than `cause` on a directed path cause -> ... -> effect.
  std::vector<bool> on_path(n, false);
  for (std::size_t w = 0; w < n; ++w) {
    if (w != cause && from_cause[w] && reach(truth, w)[effect]) on_path[w] = true;
  }
  for (std::size_t w = 0; w < n; ++w) {
    if (!on_path[w]) continue;
    const auto de = reach(truth, w);
    for (std::size_t v = 0; v < n; ++v) {
      if (de[v] && adjustment[v]) return false;
    }
  }
  CausalGraph backdoor = truth;
  for (std::size_t c : truth.children(cause)) {
    if (on_path[c]) backdoor.remove_edge(cause, c);
  }
  return d_separated(backdoor, cause, effect, adjustment);
}

SidResult sid(const CausalGraph& pred, const CausalGraph& truth, std::size_t max_symmetric) {
  if (!truth.is_dag()) throw InputError("SID needs an acyclic truth without symmetric edges");
  const auto p = aligned(pred, truth);
  SidResult out;
  auto graphs = orientation_extensions(p, max_symmetric);
  if (graphs.empty()) {
    graphs = all_orientations(p, max_symmetric);
    out.cyclic_prediction = true;
  }
  std::vector<std::vector<bool>> truth_reach;
  for (std::size_t i = 0; i < truth.size(); ++i) truth_reach.push_back(reach(truth, i));
  double total = 0.0;
  bool first = true;
  for (const auto& g : graphs) {
    const std::size_t v = sid_single(g, truth, truth_reach);
    out.min = first ? v : std::min(out.min, v);
    out.max = first ? v : std::max(out.max, v);
    first = false;
    total += static_cast<double>(v);
  }
  out.extensions = graphs.size();
  out.mean = total / static_cast<double>(graphs.size());
  return out;
}

F1Result f1(const CausalGraph& pred, const CausalGraph& truth) {
  const auto p = aligned(pred, truth);
  std::size_t tp = 0, predicted = 0, actual = 0;
  truth.for_each_pair([&](std::size_t i, std::size_t j, EdgeState s) {
    const bool in_pred = p.state(i, j) != EdgeState::Absent;
    const bool in_truth = s != EdgeState::Absent;
    predicted += in_pred;
    actual += in_truth;
    tp += in_pred && in_truth;
  });
  F1Result r;
  r.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
  r.recall = actual == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(actual);
  const double sum = r.precision + r.recall;
  r.f1 = sum == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / sum;
  return r;
}

std::size_t half_edge_count(const CausalGraph& g) {
  return g.directed_count() + 2 * g.symmetric_count();
}

double sparsity(std::size_t node_count, const CausalGraph& pred) {
  if (node_count < 2) throw InputError("sparsity needs at least two nodes");
  if (node_count != pred.size()) {
    throw InputError("sparsity: node count " + std::to_string(node_count) +
                     " does not match the graph (" + std::to_string(pred.size()) + ")");
  }
  const double max_half_edges = static_cast<double>(node_count * (node_count - 1));
  return 1.0 - static_cast<double>(half_edge_count(pred)) / max_half_edges;
}

double decisiveness(const CausalGraph& pred) {
  const std::size_t asym = pred.directed_count();
  const std::size_t sym = pred.symmetric_count();
  if (asym + sym == 0) return 0.0;
  return static_cast<double>(asym) / static_cast<double>(asym + sym);
}

double ads_from_groups(const std::vector<double>& symmetric, const std::vector<double>& asymmetric) {
  if (symmetric.empty() || asymmetric.empty()) {
    throw InputError("ADS needs at least one symmetric and one asymmetric template");
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  return mean(asymmetric) - mean(symmetric);
}

double ads(const std::map<int, CausalGraph>& per_template) {
  std::vector<double> sym, asym;
  for (const auto& [id, graph] : per_template) {
    const auto& t = prompts::query_template(id);
    (t.symmetry == prompts::Symmetry::Symmetric ? sym : asym).push_back(decisiveness(graph));
  }
  return ads_from_groups(sym, asym);
}

std::vector<EdgeChange> graph_difference(const CausalGraph& before, const CausalGraph& after) {
  const auto a = aligned(after, before);
  std::vector<EdgeChange> out;
  before.for_each_pair([&](std::size_t i, std::size_t j, EdgeState s) {
    const EdgeState t = a.state(i, j);
    if (s != t) out.push_back({before.label(i), before.label(j), s, t});
  });
  return out;
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw InputError("cannot summarize an empty sample");
  Summary s;
  s.count = values.size();
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.count);
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(s.count));
  return s;
}

}  // namespace causeprobe::metrics
