#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causeprobe/discovery.hpp"
#include "causeprobe/io.hpp"
#include "causeprobe/prompts.hpp"

// Experiment manifests: one JSON file describing a run. Schema in
// docs/manifests.md.
namespace causeprobe {

enum class ExperimentKind {
  PairwiseProbe,
  Chains,
  WordChains,
  QuestionBank,
  KnnGraphs,
  ScmDemo,
  RenameProbe
};

std::string_view to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(std::string_view s);

struct CotSetting {
  prompts::CotTask task = prompts::CotTask::CausalChains;
  std::size_t k = 0;

  bool operator==(const CotSetting&) const = default;
};

struct Manifest {
  ExperimentKind kind = ExperimentKind::PairwiseProbe;
  std::vector<std::string> datasets;  // names or paths
  std::string provider;               // name or path
  std::vector<int> templates{1, 2, 3, 4, 5};
  std::optional<CotSetting> cot;
  discovery::MetaPolicy meta_policy = discovery::MetaPolicy::AsNo;
  bool score_abstentions = false;
  std::optional<std::uint64_t> seed;
  std::string timestamp;  // copied into artifacts verbatim
  std::size_t workers = 1;

  // Inputs, by name or path; empty selects the bundled default.
  std::string chains;
  std::string word_chains;
  std::string bank;
  std::string knowledge_base;
  std::string relation = "/r/Causes/";
  std::string language = "en";
  std::string store;
  // dataset -> (old name -> new name)
  std::map<std::string, std::map<std::string, std::string>> rename;

  std::string out;
  // Directory the manifest was read from; relative inputs resolve against it.
  std::filesystem::path base_dir;

  bool operator==(const Manifest&) const = default;
};

// Structural checks only; whether referenced files exist is checked when a
// command resolves them. ValidationError names the source and field.
Manifest parse_manifest(std::string_view text, const std::string& source);
Manifest load_manifest(const std::filesystem::path& path);

// Canonical form. `out` and base_dir are left out, so two runs of one
// experiment into different directories share a digest.
io::json manifest_to_json(const Manifest& m);
std::string manifest_digest(const Manifest& m);

}  // namespace causeprobe
