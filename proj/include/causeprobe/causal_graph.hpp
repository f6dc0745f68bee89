#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace causeprobe {

// State of an unordered node pair {a, b} with a < b (by node index).
// Forward means a -> b, Backward means b -> a.
enum class EdgeState : std::uint8_t { Absent, Forward, Backward, Symmetric };

std::string_view to_string(EdgeState state);

// Flips Forward/Backward; Absent and Symmetric are orientation-free.
EdgeState reversed(EdgeState state);

// Node-labeled graph in which every unordered pair carries exactly one
// EdgeState. Used for ground truths, predictions and SCM-induced graphs.
class CausalGraph {
 public:
  CausalGraph() = default;
  // Throws InputError on empty or duplicate labels.
  explicit CausalGraph(std::vector<std::string> nodes);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::string& label(std::size_t i) const { return nodes_.at(i); }
  std::optional<std::size_t> find(std::string_view label) const;
  // Like find() but throws InputError for unknown labels.
  std::size_t index_of(std::string_view label) const;

  // State of the pair as seen from (i, j): Forward means i -> j.
  EdgeState state(std::size_t i, std::size_t j) const;
  void set_state(std::size_t i, std::size_t j, EdgeState state);

  void add_directed(std::size_t from, std::size_t to) {
    set_state(from, to, EdgeState::Forward);
  }
  void add_symmetric(std::size_t a, std::size_t b) {
    set_state(a, b, EdgeState::Symmetric);
  }
  void remove_edge(std::size_t a, std::size_t b) {
    set_state(a, b, EdgeState::Absent);
  }

  void add_directed(std::string_view from, std::string_view to);
  void add_symmetric(std::string_view a, std::string_view b);

  bool has_directed(std::size_t from, std::size_t to) const {
    return state(from, to) == EdgeState::Forward;
  }
  bool adjacent(std::size_t a, std::size_t b) const {
    return state(a, b) != EdgeState::Absent;
  }

  // Directed parents/children only; symmetric edges are not included.
  std::vector<std::size_t> parents(std::size_t node) const;
  std::vector<std::size_t> children(std::size_t node) const;

  std::size_t directed_count() const;
  std::size_t symmetric_count() const;
  std::size_t edge_count() const { return directed_count() + symmetric_count(); }

  // Acyclicity of the directed part; symmetric edges are ignored.
  bool directed_part_acyclic() const;
  // No symmetric edges and acyclic.
  bool is_dag() const;
  // Topological order of the directed part; empty optional if cyclic.
  std::optional<std::vector<std::size_t>> topological_order() const;
  // Strict descendants of `node` along directed edges.
  std::vector<bool> descendants(std::size_t node) const;

  // Visits every unordered pair (i < j) in row-major order.
  template <typename Fn>
  void for_each_pair(Fn&& fn) const {
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t j = i + 1; j < size(); ++j) fn(i, j, states_[pair_index(i, j)]);
    }
  }

  // Same graph with nodes listed in `order` (a permutation of node indices).
  CausalGraph permuted(const std::vector<std::size_t>& order) const;
  // Same structure with new labels.
  CausalGraph relabeled(std::vector<std::string> labels) const;

  std::string to_dot(std::string_view graph_name = "G") const;

  friend bool operator==(const CausalGraph&, const CausalGraph&) = default;

 private:
  std::size_t pair_index(std::size_t i, std::size_t j) const;
  void check_index(std::size_t i) const;

  std::vector<std::string> nodes_;
  std::vector<EdgeState> states_;  // upper triangle, row-major
};

// Every graph obtained by orienting each Symmetric edge Forward or Backward,
// keeping only acyclic results. Order: bit k of a counter selects the
// orientation of the k-th symmetric pair (0 = lower index -> higher index).
// Throws CapacityError when there are more than `max_symmetric` symmetric edges.
std::vector<CausalGraph> orientation_extensions(const CausalGraph& g,
                                                std::size_t max_symmetric = 20);

// Same enumeration without the acyclicity filter.
std::vector<CausalGraph> all_orientations(const CausalGraph& g,
                                          std::size_t max_symmetric = 20);

// Adjacency-matrix bit code: bit (i * n + j) set iff i -> j; a Symmetric
// pair sets both bits. At most 8 nodes.
std::uint64_t adjacency_code(const CausalGraph& g);
CausalGraph graph_from_adjacency_code(std::uint64_t code,
                                      std::vector<std::string> labels);

}  // namespace causeprobe
