#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "causeprobe/dataset.hpp"
#include "causeprobe/facts.hpp"
#include "causeprobe/gateway.hpp"
#include "causeprobe/manifest.hpp"
#include "causeprobe/verdicts.hpp"

// Command implementations behind the causeprobe executable. Every command
// writes into a run directory; layouts are described in docs/artifacts.md.
namespace causeprobe::app {

struct Context {
  std::filesystem::path data_dir = CAUSEPROBE_DATA_DIR;
  // Exchange log; defaults to .causeprobe/exchanges.jsonl under the working directory.
  std::optional<std::filesystem::path> cache_path;
  std::shared_ptr<gateway::ExchangeCache> cache;  // takes precedence over cache_path
  std::optional<std::string> provider;            // overrides the manifest
  std::optional<gateway::ProviderConfig> provider_config;  // overrides both
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::shared_ptr<gateway::Clock> clock;
  std::ostream* log = nullptr;  // progress and tables; silent when null
  bool verbose = false;
};

BenchmarkDataset resolve_dataset(const std::string& ref, const Context& ctx,
                                 const std::filesystem::path& base = {});
gateway::ProviderConfig resolve_provider(const std::string& ref, const Context& ctx,
                                         const std::filesystem::path& base = {});
// Bundled dataset names, sorted.
std::vector<std::string> list_datasets(const Context& ctx);

// --provider and --seed applied on top of the manifest.
Manifest effective_manifest(Manifest m, const Context& ctx);
// --out, else the manifest's out; InputError when neither is set.
std::filesystem::path output_dir(const Manifest& m, const Context& ctx);

struct RunResult {
  std::filesystem::path dir;
  std::string digest;
  std::size_t pending = 0;  // records waiting for a manual label
};

// Dispatches on the manifest kind (scm-demo excluded).
RunResult run_manifest(const Manifest& m, const Context& ctx);

RunResult cmd_probe(const Manifest& m, const Context& ctx);
RunResult cmd_rename_probe(const Manifest& m, const Context& ctx);
RunResult cmd_chains(const Manifest& m, const Context& ctx);
RunResult cmd_word_chains(const Manifest& m, const Context& ctx);
RunResult cmd_bank(const Manifest& m, const Context& ctx);
RunResult cmd_knn_graphs(const Manifest& m, const Context& ctx);

// Builds (or rebuilds from cache) the store named by the manifest, or
// <out>/store.cpvs. Returns the store path.
std::filesystem::path cmd_knn_build(const Manifest& m, const Context& ctx);

// Prints the audit record of one pair.
facts::KnnPrediction cmd_knn_predict(const std::filesystem::path& store, const Manifest& m,
                                     const std::string& dataset, const std::string& cause,
                                     const std::string& effect, int template_id,
                                     const Context& ctx);

// Prints P(Y=1), P(Y_{X<-1}=1) and the value derived from the meta model,
// all expected to be 1/4; verbose adds the joint table over (Z, X, Y).
// Returns 0 when all three match, 1 otherwise.
int cmd_scm_demo(const Context& ctx);

// Writes the queue of a run directory to `out`; returns the record count.
std::size_t cmd_labels_export(const std::filesystem::path& run_dir,
                              const std::filesystem::path& out);
// Applies a label file and re-renders the run's derived artifacts.
std::size_t cmd_labels_import(const std::filesystem::path& run_dir,
                              const std::filesystem::path& labels, const Context& ctx);

// Merges the metric rows of run directories; writes report.txt and
// report.json into `out` when given. Returns the text table.
std::string cmd_report(const std::vector<std::filesystem::path>& runs,
                       const std::optional<std::filesystem::path>& out, const Context& ctx);

}  // namespace causeprobe::app
