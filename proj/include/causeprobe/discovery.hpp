#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "causeprobe/causal_graph.hpp"
#include "causeprobe/dataset.hpp"
#include "causeprobe/gateway.hpp"
#include "causeprobe/verdicts.hpp"

// Pairwise probing of a language model over every ordered variable pair, and
// the merge of the two verdicts of each pair into one edge.
namespace causeprobe::discovery {

struct EdgeVerdictTable {
  std::string dataset;
  int template_id = 0;
  std::vector<std::string> variables;
  std::string provider;
  std::string model;
  std::string timestamp;  // supplied by the caller; empty when not recorded
  // One record per ordered pair (i, j), i != j, row-major in variable order.
  std::vector<verdicts::VerdictRecord> entries;

  bool operator==(const EdgeVerdictTable&) const = default;
};

std::string record_id(const std::string& dataset, int template_id, std::size_t i, std::size_t j);

struct ProbeOptions {
  verdicts::ClassifierConfig classifier;
  std::string timestamp;
  // Concurrent requests; the gateway's budget still applies.
  std::size_t workers = 1;
};

// One table per template, in the given order. Failures are rethrown with the
// dataset, template and pair prepended.
std::vector<EdgeVerdictTable> run_pairwise_probe(const BenchmarkDataset& dataset,
                                                 const std::vector<int>& templates,
                                                 gateway::Gateway& gw,
                                                 const ProbeOptions& options = {});

enum class MetaPolicy { AsNo, ExcludePair };

std::string_view to_string(MetaPolicy p);
MetaPolicy meta_policy_from_string(std::string_view s);  // "as-no" | "exclude-pair"

// (Yes,Yes) symmetric, (Yes,not Yes) forward, (not Yes,Yes) backward, else absent.
EdgeState merge_pair(verdicts::Answer forward, verdicts::Answer backward);

struct AssembledGraph {
  CausalGraph graph;
  // (i, j) with i < j, in row-major order.
  std::vector<std::pair<std::size_t, std::size_t>> both_meta;
  // Symmetric wordings answered Yes one way and not the other.
  std::vector<std::pair<std::size_t, std::size_t>> wording_inconsistent;
  // Under ExcludePair, the graph's metrics should not be reported when true.
  bool excluded = false;
};

// InputError when an ordered pair is missing or duplicated, or names an
// unknown variable. Independent of entry order.
AssembledGraph assemble_graph(const EdgeVerdictTable& table, MetaPolicy policy = MetaPolicy::AsNo);

// Missing names map to themselves. InputError when the result is not
// injective, a key is not a variable, or a name is empty.
BenchmarkDataset rename_variables(const BenchmarkDataset& dataset,
                                  const std::map<std::string, std::string>& mapping);

// Tab-separated text with '#'-prefixed header lines; see docs/artifacts.md.
std::string serialize_table(const EdgeVerdictTable& table);
EdgeVerdictTable parse_table(std::string_view text, const std::string& source);

}  // namespace causeprobe::discovery
