#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "causeprobe/causal_graph.hpp"

// Graph-comparison metrics. Two-graph metrics require the same node labels;
// a prediction listing them in a different order is aligned to the truth
// first. Mismatched label sets throw InputError.
namespace causeprobe::metrics {

// Per pair: 0 if equal states, otherwise 1 (missing, extra, reversed, or
// directed vs symmetric).
std::size_t shd(const CausalGraph& pred, const CausalGraph& truth);

struct SidResult {
  std::size_t min = 0;
  double mean = 0.0;
  std::size_t max = 0;
  std::size_t extensions = 0;
  // The directed part of the prediction was cyclic, so the bounds range
  // over all orientations instead of the acyclic ones.
  bool cyclic_prediction = false;
};

// Structural intervention distance over the orientation extensions of
// `pred`. `truth` must be a DAG (InputError otherwise).
SidResult sid(const CausalGraph& pred, const CausalGraph& truth, std::size_t max_symmetric = 20);

// Whether `adjustment` is a valid adjustment set for the effect of `cause`
// on `effect` in the DAG `truth` (forbidden-set plus proper back-door check).
bool valid_adjustment(const CausalGraph& truth, std::size_t cause, std::size_t effect,
                      const std::vector<bool>& adjustment);

// d-separation of a and b given z in the directed part of g.
bool d_separated(const CausalGraph& g, std::size_t a, std::size_t b, const std::vector<bool>& z);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// On skeletons. Precision is 0 without predicted edges, recall is 0 without
// true edges, F1 is 0 when both are 0.
F1Result f1(const CausalGraph& pred, const CausalGraph& truth);

// Directed pairs count 1, symmetric pairs count 2.
std::size_t half_edge_count(const CausalGraph& g);

// 1 - half_edges / (2 * C(N, 2)). Requires N >= 2 and N == pred.size().
double sparsity(std::size_t node_count, const CausalGraph& pred);

// directed / (directed + symmetric), 0.0 for an edgeless graph.
double decisiveness(const CausalGraph& pred);

// mean(asymmetric) - mean(symmetric); InputError if a group is empty.
double ads_from_groups(const std::vector<double>& symmetric, const std::vector<double>& asymmetric);

// Keys are template ids; 1-3 form the symmetric group and 4-5 the asymmetric one.
double ads(const std::map<int, CausalGraph>& per_template);

struct EdgeChange {
  std::string a;
  std::string b;
  EdgeState before = EdgeState::Absent;  // oriented a -> b
  EdgeState after = EdgeState::Absent;
};

// Pairs whose state differs, in row-major pair order of `before`.
std::vector<EdgeChange> graph_difference(const CausalGraph& before, const CausalGraph& after);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

// InputError on an empty sample.
Summary summarize(const std::vector<double>& values);

// `pred` reordered to `truth`'s node order; InputError on label mismatch.
CausalGraph aligned(const CausalGraph& pred, const CausalGraph& truth);

}  // namespace causeprobe::metrics
