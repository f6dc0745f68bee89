#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "causeprobe/causal_graph.hpp"

namespace causeprobe {

enum class Provenance : std::uint8_t { PaperStated, DerivedFromCitedSource, UserSupplied };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

// Natural-language variables plus a ground-truth graph. Variable order is
// the order of truth.nodes().
struct BenchmarkDataset {
  std::string name;
  std::string source;
  CausalGraph truth;
  // Keyed by (lower index, higher index) of each present edge in truth.
  std::map<std::pair<std::size_t, std::size_t>, Provenance> provenance;
  // Ground truths are DAGs unless this is set.
  bool allow_symmetric = false;

  const std::vector<std::string>& variables() const { return truth.nodes(); }
  std::size_t size() const { return truth.size(); }

  // Throws ValidationError on violated invariants.
  void validate() const;

  friend bool operator==(const BenchmarkDataset&, const BenchmarkDataset&) = default;
};

// Dataset file: JSON object with fields name, source, variables[], edges[]
// (each {from, to, kind: directed|symmetric, provenance}) and optional
// allow_symmetric. Unknown fields are rejected.
BenchmarkDataset load_dataset(const std::filesystem::path& path);
BenchmarkDataset parse_dataset(std::string_view text, const std::string& source_name);
std::string serialize_dataset(const BenchmarkDataset& dataset);

// 2 * C(N, 2) * Q: both orderings of every pair under every template.
// Throws InputError when template_count is 0.
std::uint64_t expected_query_count(const BenchmarkDataset& dataset, std::uint64_t template_count);
std::uint64_t expected_query_count(std::size_t variable_count, std::uint64_t template_count);

}  // namespace causeprobe
