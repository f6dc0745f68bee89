#include "causeprobe/manifest.hpp"

#include <set>

#include "causeprobe/digest.hpp"
#include "causeprobe/error.hpp"

namespace causeprobe {

namespace {

struct KindName {
  ExperimentKind kind;
  std::string_view name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::PairwiseProbe, "pairwise-probe"}, {ExperimentKind::Chains, "chains"},
    {ExperimentKind::WordChains, "word-chains"},       {ExperimentKind::QuestionBank, "question-bank"},
    {ExperimentKind::KnnGraphs, "knn-graphs"},         {ExperimentKind::ScmDemo, "scm-demo"},
    {ExperimentKind::RenameProbe, "rename-probe"},
};

bool needs_datasets(ExperimentKind k) {
  return k == ExperimentKind::PairwiseProbe || k == ExperimentKind::KnnGraphs ||
         k == ExperimentKind::RenameProbe;
}

bool needs_provider(ExperimentKind k) { return k != ExperimentKind::ScmDemo; }

template <typename T>
T get_as(const io::json& obj, std::string_view key, const std::string& ctx) {
  const auto& v = io::require(obj, key, ctx);
  try {
    return v.get<T>();
  } catch (const io::json::exception&) {
    throw ValidationError(ctx + ": field '" + std::string(key) + "' has the wrong type");
  }
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kKinds) {
    if (name == s) return kind;
  }
  std::string all;
  for (const auto& [kind, name] : kKinds) all += (all.empty() ? "" : ", ") + std::string(name);
  throw ValidationError("unknown experiment kind '" + std::string(s) + "' (expected one of " + all +
                        ")");
}

Manifest parse_manifest(std::string_view text, const std::string& source) {
  const auto j = io::parse_json(text, source);
  const std::string ctx = source;
  if (!j.is_object()) throw ValidationError(ctx + ": a manifest is a JSON object");
  io::reject_unknown_fields(j,
                            {"kind", "description", "datasets", "provider", "templates", "cot",
                             "meta_policy", "score_abstentions", "seed", "timestamp", "workers",
                             "chains", "word_chains", "bank", "knowledge_base", "relation",
                             "language", "store", "rename", "out"},
                            ctx);
  Manifest m;
  m.kind = experiment_kind_from_string(io::require_string(j, "kind", ctx));
  if (j.contains("datasets")) m.datasets = get_as<std::vector<std::string>>(j, "datasets", ctx);
  if (j.contains("provider")) m.provider = io::require_string(j, "provider", ctx);
  if (j.contains("templates")) m.templates = get_as<std::vector<int>>(j, "templates", ctx);
  if (j.contains("cot")) {
    const auto& c = j["cot"];
    const std::string cctx = ctx + ": cot";
    if (!c.is_object()) throw ValidationError(cctx + " must be an object");
    io::reject_unknown_fields(c, {"task", "k"}, cctx);
    CotSetting s;
    try {
      s.task = prompts::cot_task_from_string(io::require_string(c, "task", cctx));
    } catch (const InputError& e) {
      throw ValidationError(cctx + ": " + e.what());
    }
    s.k = get_as<std::size_t>(c, "k", cctx);
    m.cot = s;
  }
  if (j.contains("meta_policy")) {
    try {
      m.meta_policy = discovery::meta_policy_from_string(io::require_string(j, "meta_policy", ctx));
    } catch (const InputError& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
  }
  if (j.contains("score_abstentions")) m.score_abstentions = get_as<bool>(j, "score_abstentions", ctx);
  if (j.contains("seed")) m.seed = get_as<std::uint64_t>(j, "seed", ctx);
  if (j.contains("timestamp")) m.timestamp = io::require_string(j, "timestamp", ctx);
  if (j.contains("workers")) m.workers = get_as<std::size_t>(j, "workers", ctx);
  for (auto [key, field] : {std::pair{"chains", &m.chains}, {"word_chains", &m.word_chains},
                            {"bank", &m.bank}, {"knowledge_base", &m.knowledge_base},
                            {"relation", &m.relation}, {"language", &m.language},
                            {"store", &m.store}, {"out", &m.out}}) {
    if (j.contains(key)) *field = io::require_string(j, key, ctx);
  }
  if (j.contains("rename")) {
    m.rename = get_as<std::map<std::string, std::map<std::string, std::string>>>(j, "rename", ctx);
  }

  if (needs_datasets(m.kind) && m.datasets.empty()) {
    throw ValidationError(ctx + ": kind " + std::string(to_string(m.kind)) + " needs datasets");
  }
  std::set<std::string> seen;
  for (const auto& d : m.datasets) {
    if (!seen.insert(d).second) throw ValidationError(ctx + ": dataset '" + d + "' listed twice");
  }
  if (needs_provider(m.kind) && m.provider.empty()) {
    throw ValidationError(ctx + ": kind " + std::string(to_string(m.kind)) + " needs a provider");
  }
  if (m.templates.empty()) throw ValidationError(ctx + ": templates must not be empty");
  std::set<int> tseen;
  for (int t : m.templates) {
    if (t < 1 || t > 5) throw ValidationError(ctx + ": template " + std::to_string(t) + " is not 1..5");
    if (!tseen.insert(t).second) throw ValidationError(ctx + ": template " + std::to_string(t) + " listed twice");
  }
  if (m.workers == 0) throw ValidationError(ctx + ": workers must be at least 1");
  if (m.kind == ExperimentKind::RenameProbe && m.rename.empty()) {
    throw ValidationError(ctx + ": rename-probe needs a rename mapping");
  }
  for (const auto& [dataset, mapping] : m.rename) {
    if (!seen.count(dataset)) {
      throw ValidationError(ctx + ": rename names dataset '" + dataset + "' which is not listed");
    }
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  auto m = parse_manifest(io::read_file(path), path.string());
  m.base_dir = path.parent_path();
  return m;
}

io::json manifest_to_json(const Manifest& m) {
  io::json j;
  j["kind"] = to_string(m.kind);
  j["datasets"] = m.datasets;
  j["provider"] = m.provider;
  j["templates"] = m.templates;
  if (m.cot) j["cot"] = {{"task", prompts::to_string(m.cot->task)}, {"k", m.cot->k}};
  j["meta_policy"] = discovery::to_string(m.meta_policy);
  j["score_abstentions"] = m.score_abstentions;
  if (m.seed) j["seed"] = *m.seed;
  j["timestamp"] = m.timestamp;
  j["workers"] = m.workers;
  for (auto [key, field] : {std::pair{"chains", &m.chains}, {"word_chains", &m.word_chains},
                            {"bank", &m.bank}, {"knowledge_base", &m.knowledge_base},
                            {"store", &m.store}}) {
    if (!field->empty()) j[key] = *field;
  }
  j["relation"] = m.relation;
  j["language"] = m.language;
  if (!m.rename.empty()) j["rename"] = m.rename;
  return j;
}

std::string manifest_digest(const Manifest& m) { return sha256_hex(manifest_to_json(m).dump()); }

}  // namespace causeprobe
