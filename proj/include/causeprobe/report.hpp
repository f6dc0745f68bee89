#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "causeprobe/causal_graph.hpp"
#include "causeprobe/dataset.hpp"
#include "causeprobe/io.hpp"
#include "causeprobe/metrics.hpp"

// Metric rows for predicted graphs and their aggregation into
// metric x method x dataset tables.
namespace causeprobe::report {

struct MetricRow {
  std::string dataset;
  std::string method;  // provider name for direct probing, "k-NN/<embedder>" for k-NN
  std::string provider;
  std::string model;
  int template_id = 0;
  bool excluded = false;  // metrics withheld under the exclude-pair meta policy
  std::size_t shd = 0;
  double sid_mean = 0.0;
  std::size_t sid_min = 0;
  std::size_t sid_max = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double sparsity = 0.0;
  double decisiveness = 0.0;

  bool operator==(const MetricRow&) const = default;
};

MetricRow score_graph(const CausalGraph& pred, const BenchmarkDataset& dataset, std::string method,
                      std::string provider, std::string model, int template_id,
                      bool excluded = false);

// Tab-separated, one row per graph, doubles printed round-trip exact.
std::string serialize_rows(const std::vector<MetricRow>& rows, const std::string& manifest_digest);
struct RowFile {
  std::string manifest_digest;
  std::vector<MetricRow> rows;
};
RowFile parse_rows(std::string_view text, const std::string& source);

enum class Metric { Sid, Shd, F1, Sparsity, Ads };
std::string_view to_string(Metric m);

struct Cell {
  // Empty when every contributing graph was excluded, or for ADS when a
  // template group is missing.
  std::optional<metrics::Summary> value;
};

struct MetricTable {
  std::vector<std::string> datasets;  // column order
  std::vector<std::string> methods;   // row order within a metric
  std::map<std::tuple<Metric, std::string, std::string>, Cell> cells;  // (metric, method, dataset)
  std::vector<std::string> manifests;

  const Cell& at(Metric m, const std::string& method, const std::string& dataset) const;
};

// Mean and population std over templates per (method, dataset); ADS from
// the per-template decisiveness. Known benchmark datasets come first in a
// fixed order, others follow in order of appearance. InputError when runs
// cover different dataset sets or report the same graph twice.
MetricTable aggregate(const std::vector<RowFile>& runs);

// Aligned text: "mean ± std" cells with two decimals, "-" for empty cells.
std::string render_table(const MetricTable& table);
io::json table_to_json(const MetricTable& table);

io::json graph_to_json(const CausalGraph& g);
CausalGraph graph_from_json(const io::json& j, const std::string& source);

}  // namespace causeprobe::report
