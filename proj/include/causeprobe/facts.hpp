#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causeprobe/causal_graph.hpp"
#include "causeprobe/dataset.hpp"
#include "causeprobe/gateway.hpp"

// Knowledge-base causal facts, their templated statements, an embedding
// store and 1-nearest-neighbour edge prediction.
namespace causeprobe::facts {

struct CausalFact {
  std::string cause;
  std::string effect;
  std::string relation;
  std::optional<double> weight;

  bool operator==(const CausalFact&) const = default;
};

struct IngestOptions {
  std::string relation = "/r/Causes/";
  std::string language = "en";
};

struct IngestResult {
  std::vector<CausalFact> facts;  // first-occurrence order
  std::size_t rows = 0;
  std::size_t matched = 0;     // relation and language accepted
  std::size_t malformed = 0;   // skipped
  std::size_t duplicates = 0;  // skipped
  std::size_t self_loops = 0;  // cause == effect after normalization; skipped
  std::vector<std::string> warnings;
};

// "/c/en/lack_of_fuel/n" -> "lack of fuel"; nullopt if not a concept URI in
// `language` or the text is empty.
std::optional<std::string> concept_text(std::string_view uri, std::string_view language);

// Tab-separated assertion dump: [edge URI,] relation URI, start URI, end URI,
// JSON metadata. IoError when unreadable.
IngestResult ingest_knowledge_base(const std::filesystem::path& dump,
                                   const IngestOptions& options = {});
IngestResult ingest_knowledge_base_text(std::string_view text, const IngestOptions& options = {});

enum class Polarity : std::uint8_t { Causal = 0, AntiCausal = 1 };
std::string_view to_string(Polarity p);

struct Statement {
  std::string text;
  Polarity polarity = Polarity::Causal;
  std::uint32_t fact = 0;
  int template_id = 0;

  bool operator==(const Statement&) const = default;
};

// Per fact and template: the declarative statement, then its swap.
// InputError on an empty fact list or unknown template ids.
std::vector<Statement> generate_statements(const std::vector<CausalFact>& facts,
                                           const std::vector<int>& templates);

struct EmbeddingRecord {
  std::uint32_t fact = 0;
  std::uint8_t template_id = 0;
  Polarity polarity = Polarity::Causal;
  std::string statement;
  // Unit norm. Stored as 32-bit floats; held renormalized in double.
  std::vector<double> vector;

  bool operator==(const EmbeddingRecord&) const = default;
};

struct VectorStore {
  std::string model;
  std::size_t dimension = 0;
  std::vector<EmbeddingRecord> records;

  // Binary layout documented in docs/vector-store.md; ends in a SHA-256 of
  // everything before it.
  std::string serialize() const;
  static VectorStore deserialize(std::string_view bytes, const std::string& source);
  void save(const std::filesystem::path& path) const;
  static VectorStore load(const std::filesystem::path& path);
  // Hex SHA-256 trailer of serialize().
  std::string digest() const;

  bool operator==(const VectorStore&) const = default;
};

// Float32 rounding followed by renormalization in double, as stored.
std::vector<double> quantize(const std::vector<double>& unit);

// Embeds every statement through the gateway (and its cache). InputError on
// an empty list; CorruptionError when dimensions drift.
VectorStore build_store(const std::vector<Statement>& statements, gateway::Gateway& gw);

struct Neighbor {
  std::size_t index = 0;
  double similarity = 0.0;
  // Another record reached exactly the same similarity; the lowest index wins.
  bool tie = false;
};

// Exact scan by dot product. InputError on an empty store or a dimension mismatch.
Neighbor nearest(const VectorStore& store, const std::vector<double>& query);

struct KnnPrediction {
  std::size_t cause = 0;
  std::size_t effect = 0;
  int template_id = 0;
  std::string query;
  bool present = false;
  Neighbor neighbor;
  std::string matched_statement;
  Polarity matched_polarity = Polarity::Causal;
};

KnnPrediction knn_predict_edge(const BenchmarkDataset& dataset, std::size_t cause,
                               std::size_t effect, int template_id, const VectorStore& store,
                               gateway::Gateway& gw);

struct KnnGraph {
  CausalGraph graph;
  std::vector<KnnPrediction> predictions;  // ordered pairs, row-major
};

KnnGraph knn_graph(const BenchmarkDataset& dataset, int template_id, const VectorStore& store,
                   gateway::Gateway& gw);

}  // namespace causeprobe::facts
