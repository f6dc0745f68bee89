#include "causeprobe/causal_graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "causeprobe/error.hpp"

namespace causeprobe {

std::string_view to_string(EdgeState state) {
  switch (state) {
    case EdgeState::Absent: return "absent";
    case EdgeState::Forward: return "forward";
    case EdgeState::Backward: return "backward";
    case EdgeState::Symmetric: return "symmetric";
  }
  return "?";
}

EdgeState reversed(EdgeState state) {
  switch (state) {
    case EdgeState::Forward: return EdgeState::Backward;
    case EdgeState::Backward: return EdgeState::Forward;
    default: return state;
  }
}

CausalGraph::CausalGraph(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {
  std::set<std::string_view> seen;
  for (const auto& n : nodes_) {
    if (n.empty()) throw InputError("graph node labels must be nonempty");
    if (!seen.insert(n).second) throw InputError("duplicate graph node label '" + n + "'");
  }
  const std::size_t n = nodes_.size();
  states_.assign(n < 2 ? 0 : n * (n - 1) / 2, EdgeState::Absent);
}

std::optional<std::size_t> CausalGraph::find(std::string_view label) const {
  auto it = std::find(nodes_.begin(), nodes_.end(), label);
  if (it == nodes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::size_t CausalGraph::index_of(std::string_view label) const {
  auto idx = find(label);
  if (!idx) throw InputError("unknown graph node '" + std::string(label) + "'");
  return *idx;
}

void CausalGraph::check_index(std::size_t i) const {
  if (i >= nodes_.size()) {
    throw InputError("node index " + std::to_string(i) + " out of range");
  }
}

std::size_t CausalGraph::pair_index(std::size_t i, std::size_t j) const {
  // i < j; offset of row i in the packed upper triangle.
  const std::size_t n = nodes_.size();
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

EdgeState CausalGraph::state(std::size_t i, std::size_t j) const {
  check_index(i);
  check_index(j);
  if (i == j) throw InputError("self-pairs carry no edge state");
  if (i < j) return states_[pair_index(i, j)];
  return reversed(states_[pair_index(j, i)]);
}

void CausalGraph::set_state(std::size_t i, std::size_t j, EdgeState state) {
  check_index(i);
  check_index(j);
  if (i == j) throw InputError("self-edges are not allowed ('" + nodes_[i] + "')");
  if (i < j) {
    states_[pair_index(i, j)] = state;
  } else {
    states_[pair_index(j, i)] = reversed(state);
  }
}

void CausalGraph::add_directed(std::string_view from, std::string_view to) {
  add_directed(index_of(from), index_of(to));
}

void CausalGraph::add_symmetric(std::string_view a, std::string_view b) {
  add_symmetric(index_of(a), index_of(b));
}

std::vector<std::size_t> CausalGraph::parents(std::size_t node) const {
  check_index(node);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < size(); ++k) {
    if (k != node && state(k, node) == EdgeState::Forward) out.push_back(k);
  }
  return out;
}

std::vector<std::size_t> CausalGraph::children(std::size_t node) const {
  check_index(node);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < size(); ++k) {
    if (k != node && state(node, k) == EdgeState::Forward) out.push_back(k);
  }
  return out;
}

std::size_t CausalGraph::directed_count() const {
  return static_cast<std::size_t>(std::count_if(states_.begin(), states_.end(), [](EdgeState s) {
    return s == EdgeState::Forward || s == EdgeState::Backward;
  }));
}

std::size_t CausalGraph::symmetric_count() const {
  return static_cast<std::size_t>(
      std::count(states_.begin(), states_.end(), EdgeState::Symmetric));
}

std::optional<std::vector<std::size_t>> CausalGraph::topological_order() const {
  const std::size_t n = size();
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t j = 0; j < n; ++j) indegree[j] = parents(j).size();
  std::vector<std::size_t> order;
  order.reserve(n);
  // Smallest ready index first, so the order is deterministic.
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  while (!ready.empty()) {
    const std::size_t v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (std::size_t c : children(v)) {
      if (--indegree[c] == 0) ready.insert(c);
    }
  }
  if (order.size() != n) return std::nullopt;
  return order;
}

bool CausalGraph::directed_part_acyclic() const { return topological_order().has_value(); }

bool CausalGraph::is_dag() const { return symmetric_count() == 0 && directed_part_acyclic(); }

std::vector<bool> CausalGraph::descendants(std::size_t node) const {
  check_index(node);
  std::vector<bool> seen(size(), false);
  std::vector<std::size_t> stack = children(node);
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = true;
    for (std::size_t c : children(v)) {
      if (!seen[c]) stack.push_back(c);
    }
  }
  return seen;
}

CausalGraph CausalGraph::permuted(const std::vector<std::size_t>& order) const {
  if (order.size() != size()) throw InputError("permutation size mismatch");
  std::vector<std::string> labels;
  labels.reserve(size());
  for (std::size_t k : order) labels.push_back(label(k));
  CausalGraph out(std::move(labels));
  for (std::size_t a = 0; a < size(); ++a) {
    for (std::size_t b = a + 1; b < size(); ++b) {
      out.set_state(a, b, state(order[a], order[b]));
    }
  }
  return out;
}

CausalGraph CausalGraph::relabeled(std::vector<std::string> labels) const {
  if (labels.size() != size()) throw InputError("relabel size mismatch");
  CausalGraph out(std::move(labels));
  out.states_ = states_;
  return out;
}

namespace {

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string CausalGraph::to_dot(std::string_view graph_name) const {
  std::ostringstream os;
  os << "digraph " << dot_quote(graph_name) << " {\n";
  for (const auto& n : nodes_) os << "  " << dot_quote(n) << ";\n";
  for_each_pair([&](std::size_t i, std::size_t j, EdgeState s) {
    switch (s) {
      case EdgeState::Absent: break;
      case EdgeState::Forward:
        os << "  " << dot_quote(nodes_[i]) << " -> " << dot_quote(nodes_[j]) << ";\n";
        break;
      case EdgeState::Backward:
        os << "  " << dot_quote(nodes_[j]) << " -> " << dot_quote(nodes_[i]) << ";\n";
        break;
      case EdgeState::Symmetric:
        os << "  " << dot_quote(nodes_[i]) << " -> " << dot_quote(nodes_[j])
           << " [dir=both];\n";
        break;
    }
  });
  os << "}\n";
  return os.str();
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> symmetric_pairs(const CausalGraph& g,
                                                                 std::size_t max_symmetric) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  g.for_each_pair([&](std::size_t i, std::size_t j, EdgeState s) {
    if (s == EdgeState::Symmetric) pairs.emplace_back(i, j);
  });
  if (pairs.size() > max_symmetric) {
    throw CapacityError("graph has " + std::to_string(pairs.size()) +
                        " symmetric edges; orientation enumeration is capped at " +
                        std::to_string(max_symmetric));
  }
  return pairs;
}

std::vector<CausalGraph> enumerate_orientations(const CausalGraph& g, std::size_t max_symmetric,
                                                bool acyclic_only) {
  const auto pairs = symmetric_pairs(g, max_symmetric);
  std::vector<CausalGraph> out;
  const std::uint64_t total = std::uint64_t{1} << pairs.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    CausalGraph h = g;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, j] = pairs[k];
      h.set_state(i, j, (mask >> k) & 1 ? EdgeState::Backward : EdgeState::Forward);
    }
    if (!acyclic_only || h.directed_part_acyclic()) out.push_back(std::move(h));
  }
  return out;
}

}  // namespace

std::vector<CausalGraph> orientation_extensions(const CausalGraph& g, std::size_t max_symmetric) {
  return enumerate_orientations(g, max_symmetric, true);
}

std::vector<CausalGraph> all_orientations(const CausalGraph& g, std::size_t max_symmetric) {
  return enumerate_orientations(g, max_symmetric, false);
}

std::uint64_t adjacency_code(const CausalGraph& g) {
  const std::size_t n = g.size();
  if (n > 8) throw CapacityError("adjacency codes support at most 8 nodes");
  std::uint64_t code = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const EdgeState s = g.state(i, j);
      if (s == EdgeState::Forward || s == EdgeState::Symmetric) {
        code |= std::uint64_t{1} << (i * n + j);
      }
    }
  }
  return code;
}

CausalGraph graph_from_adjacency_code(std::uint64_t code, std::vector<std::string> labels) {
  const std::size_t n = labels.size();
  if (n > 8) throw CapacityError("adjacency codes support at most 8 nodes");
  if (n < 8 && (code >> (n * n)) != 0) {
    throw InputError("adjacency code has bits beyond an " + std::to_string(n) + "x" +
                     std::to_string(n) + " matrix");
  }
  CausalGraph g(std::move(labels));
  for (std::size_t i = 0; i < n; ++i) {
    if ((code >> (i * n + i)) & 1) throw InputError("adjacency code has a self-loop");
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool ij = (code >> (i * n + j)) & 1;
      const bool ji = (code >> (j * n + i)) & 1;
      if (ij && ji) {
        g.add_symmetric(i, j);
      } else if (ij) {
        g.add_directed(i, j);
      } else if (ji) {
        g.add_directed(j, i);
      }
    }
  }
  return g;
}

}  // namespace causeprobe
