#include "causeprobe/app.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "causeprobe/discovery.hpp"
#include "causeprobe/error.hpp"
#include "causeprobe/facts.hpp"
#include "causeprobe/io.hpp"
#include "causeprobe/metrics.hpp"
#include "causeprobe/prompts.hpp"
#include "causeprobe/report.hpp"
#include "causeprobe/scm.hpp"

namespace causeprobe::app {

namespace fs = std::filesystem;
using io::json;
using verdicts::Answer;

namespace {

void say(const Context& ctx, const std::string& text) {
  if (ctx.log) *ctx.log << text << std::flush;
}

std::optional<fs::path> existing_file(const fs::path& p) {
  std::error_code ec;
  if (!p.empty() && fs::is_regular_file(p, ec)) return p;
  return std::nullopt;
}

// A reference is a path (absolute, relative to the manifest, or relative to
// the working directory) or a bundled name under data/<subdir>.
fs::path find_input(const std::string& ref, const std::string& subdir, const std::string& ext,
                    const Context& ctx, const fs::path& base) {
  if (ref.empty()) throw InputError("empty " + subdir + " reference");
  const fs::path p(ref);
  std::vector<fs::path> candidates;
  if (p.is_absolute()) {
    candidates.push_back(p);
  } else {
    if (!base.empty()) candidates.push_back(base / p);
    candidates.push_back(p);
    candidates.push_back(ctx.data_dir / subdir / p);
    candidates.push_back(ctx.data_dir / subdir / (ref + ext));
  }
  for (const auto& c : candidates) {
    if (auto hit = existing_file(c)) return *hit;
  }
  throw IoError("cannot find " + subdir + " '" + ref + "' (tried " +
                std::to_string(candidates.size()) + " locations, last " +
                candidates.back().string() + ")");
}

std::shared_ptr<gateway::ExchangeCache> open_cache(const Context& ctx) {
  if (ctx.cache) return ctx.cache;
  return std::make_shared<gateway::ExchangeCache>(
      ctx.cache_path.value_or(fs::path(".causeprobe") / "exchanges.jsonl"));
}

gateway::ProviderConfig provider_for(const Manifest& m, const Context& ctx) {
  if (ctx.provider_config) return *ctx.provider_config;
  return resolve_provider(m.provider, ctx, m.base_dir);
}

void write_text(const fs::path& path, std::string_view text) { io::write_file(path, text); }

std::string template_suffix(int t) { return "_t" + std::to_string(t); }

std::string two_decimals(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Run index. Each group is one subdirectory holding a dataset copy plus
// per-template verdict tables (probe) or k-NN audits (knn).

struct Group {
  std::string dir;
  std::string dataset;
  std::string method;
  std::string kind;  // "probe" | "knn"
  std::vector<int> templates;
};

struct RunIndex {
  std::string kind;
  std::string digest;
  discovery::MetaPolicy meta_policy = discovery::MetaPolicy::AsNo;
  bool score_abstentions = false;
  std::string method;  // item runs
  std::vector<Group> groups;
  // rename-probe: (original dir, renamed dir)
  std::vector<std::pair<std::string, std::string>> rename_pairs;
};

json index_to_json(const RunIndex& r) {
  json groups = json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"dir", g.dir},
                      {"dataset", g.dataset},
                      {"method", g.method},
                      {"kind", g.kind},
                      {"templates", g.templates}});
  }
  json pairs = json::array();
  for (const auto& [a, b] : r.rename_pairs) pairs.push_back({a, b});
  return {{"kind", r.kind},
          {"manifest", r.digest},
          {"meta_policy", discovery::to_string(r.meta_policy)},
          {"score_abstentions", r.score_abstentions},
          {"method", r.method},
          {"groups", groups},
          {"rename_pairs", pairs}};
}

RunIndex load_index(const fs::path& run_dir) {
  const fs::path path = run_dir / "run.json";
  if (!existing_file(path)) throw InputError(run_dir.string() + " is not a run directory (no run.json)");
  const auto j = io::load_json(path);
  try {
    RunIndex r;
    r.kind = j.at("kind").get<std::string>();
    r.digest = j.at("manifest").get<std::string>();
    r.meta_policy = discovery::meta_policy_from_string(j.at("meta_policy").get<std::string>());
    r.score_abstentions = j.at("score_abstentions").get<bool>();
    r.method = j.at("method").get<std::string>();
    for (const auto& g : j.at("groups")) {
      r.groups.push_back({g.at("dir").get<std::string>(), g.at("dataset").get<std::string>(),
                          g.at("method").get<std::string>(), g.at("kind").get<std::string>(),
                          g.at("templates").get<std::vector<int>>()});
    }
    for (const auto& p : j.at("rename_pairs")) {
      r.rename_pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_manifest_copy(const fs::path& dir, const Manifest& m, const std::string& digest) {
  auto j = manifest_to_json(m);
  j["digest"] = digest;
  write_text(dir / "manifest.json", io::dump_pretty(j));
}

// ---------------------------------------------------------------------------
// Graph-producing runs.

struct RenderedGroup {
  std::vector<report::MetricRow> rows;
  std::map<int, CausalGraph> graphs;
};

void write_graph(const fs::path& dir, const std::string& stem, const CausalGraph& g,
                 const BenchmarkDataset& ds, int t, const std::string& method,
                 const std::string& digest, const json& extra) {
  std::string name;
  for (char c : ds.name + "_t" + std::to_string(t)) name += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  write_text(dir / (stem + ".dot"), "// manifest " + digest + "\n" + g.to_dot(name));
  json j{{"dataset", ds.name}, {"template", t}, {"method", method}, {"manifest", digest}};
  j.update(report::graph_to_json(g));
  j.update(extra);
  write_text(dir / (stem + ".json"), io::dump_pretty(j));
}

json pair_list(const CausalGraph& g, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  json out = json::array();
  for (const auto& [i, j] : pairs) out.push_back({g.label(i), g.label(j)});
  return out;
}

RenderedGroup render_probe_group(const fs::path& run_dir, const Group& group,
                                 const RunIndex& index) {
  RenderedGroup out;
  const fs::path dir = run_dir / group.dir;
  const auto ds = load_dataset(dir / "dataset.json");
  for (int t : group.templates) {
    const auto stem = "verdicts" + template_suffix(t);
    const auto table = discovery::parse_table(io::read_file(dir / (stem + ".tsv")),
                                              (dir / (stem + ".tsv")).string());
    const auto a = discovery::assemble_graph(table, index.meta_policy);
    json extra{{"meta_policy", discovery::to_string(index.meta_policy)},
               {"excluded", a.excluded},
               {"both_meta", pair_list(a.graph, a.both_meta)},
               {"wording_inconsistent", pair_list(a.graph, a.wording_inconsistent)}};
    write_graph(dir, "graph" + template_suffix(t), a.graph, ds, t, group.method, index.digest, extra);
    out.rows.push_back(report::score_graph(a.graph, ds, group.method, table.provider, table.model, t,
                                           a.excluded));
    out.graphs.emplace(t, a.graph);
  }
  return out;
}

const std::string kAuditColumns =
    "cause\teffect\tquery\tprediction\tsimilarity\ttie\tneighbor\tpolarity\tstatement";

std::string serialize_audit(const BenchmarkDataset& ds, const facts::KnnGraph& g,
                            const std::string& digest, const std::string& store_digest) {
  std::ostringstream out;
  out << "# manifest\t" << digest << "\n# store\t" << store_digest << '\n' << kAuditColumns << '\n';
  for (const auto& p : g.predictions) {
    char sim[64];
    std::snprintf(sim, sizeof sim, "%.17g", p.neighbor.similarity);
    out << io::escape_field(ds.variables()[p.cause]) << '\t'
        << io::escape_field(ds.variables()[p.effect]) << '\t' << io::escape_field(p.query) << '\t'
        << (p.present ? "present" : "absent") << '\t' << sim << '\t'
        << (p.neighbor.tie ? "yes" : "no") << '\t' << p.neighbor.index << '\t'
        << facts::to_string(p.matched_polarity) << '\t' << io::escape_field(p.matched_statement)
        << '\n';
  }
  return out.str();
}

// Present/absent per ordered pair, read back from an audit file.
CausalGraph graph_from_audit(const fs::path& path, const BenchmarkDataset& ds) {
  const auto text = io::read_file(path);
  std::istringstream in(text);
  std::string line;
  const std::size_t n = ds.size();
  std::vector<int> present(n * n, -1);
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == kAuditColumns) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      f.push_back(io::unescape_field(line.substr(start, tab == std::string::npos ? tab : tab - start)));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 9) throw ValidationError(where + ": expected 9 columns");
    const auto i = ds.truth.find(f[0]);
    const auto j = ds.truth.find(f[1]);
    if (!i || !j || *i == *j) throw ValidationError(where + ": unknown variable pair");
    if (f[3] != "present" && f[3] != "absent") throw ValidationError(where + ": bad prediction");
    present[*i * n + *j] = f[3] == "present";
  }
  CausalGraph g(ds.variables());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (present[i * n + j] < 0 || present[j * n + i] < 0) {
        throw ValidationError(path.string() + ": missing pair (" + ds.variables()[i] + ", " +
                              ds.variables()[j] + ")");
      }
      g.set_state(i, j, discovery::merge_pair(present[i * n + j] ? Answer::Yes : Answer::No,
                                              present[j * n + i] ? Answer::Yes : Answer::No));
    }
  }
  return g;
}

RenderedGroup render_knn_group(const fs::path& run_dir, const Group& group, const RunIndex& index) {
  RenderedGroup out;
  const fs::path dir = run_dir / group.dir;
  const auto ds = load_dataset(dir / "dataset.json");
  for (int t : group.templates) {
    const auto g = graph_from_audit(dir / ("knn" + template_suffix(t) + ".tsv"), ds);
    write_graph(dir, "graph" + template_suffix(t), g, ds, t, group.method, index.digest, json::object());
    out.rows.push_back(report::score_graph(g, ds, group.method, group.method, "", t));
    out.graphs.emplace(t, g);
  }
  return out;
}

// Renders every group of a graph run and the run-level metric rows and report.
std::string render_graph_run(const fs::path& run_dir, const RunIndex& index) {
  std::vector<report::MetricRow> rows;
  std::map<std::string, RenderedGroup> rendered;
  for (const auto& g : index.groups) {
    auto r = g.kind == "knn" ? render_knn_group(run_dir, g, index) : render_probe_group(run_dir, g, index);
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
    rendered.emplace(g.dir, std::move(r));
  }
  for (const auto& [before_dir, after_dir] : index.rename_pairs) {
    const auto& before = rendered.at(before_dir).graphs;
    const auto& after = rendered.at(after_dir).graphs;
    const auto original = load_dataset(run_dir / before_dir / "dataset.json");
    std::ostringstream diff;
    diff << "# manifest " << index.digest << '\n';
    for (const auto& [t, g] : before) {
      const auto changes =
          metrics::graph_difference(g, after.at(t).relabeled(original.variables()));
      diff << "template " << t << ": " << changes.size() << " changed pair"
           << (changes.size() == 1 ? "" : "s") << '\n';
      for (const auto& c : changes) {
        diff << "  " << c.a << " / " << c.b << ": " << to_string(c.before) << " -> "
             << to_string(c.after) << '\n';
      }
    }
    write_text(run_dir / before_dir / "rename_diff.txt", diff.str());
  }
  write_text(run_dir / "metrics.tsv", report::serialize_rows(rows, index.digest));
  const auto table = report::aggregate({{index.digest, rows}});
  const auto text = report::render_table(table);
  write_text(run_dir / "report.txt", "# manifest " + index.digest + "\n" + text);
  write_text(run_dir / "report.json", io::dump_pretty(report::table_to_json(table)));
  return text;
}

std::vector<verdicts::VerdictRecord> probe_records(const fs::path& run_dir, const RunIndex& index,
                                                   std::vector<std::pair<fs::path, discovery::EdgeVerdictTable>>* tables) {
  std::vector<verdicts::VerdictRecord> out;
  for (const auto& g : index.groups) {
    if (g.kind != "probe") continue;
    for (int t : g.templates) {
      const fs::path p = run_dir / g.dir / ("verdicts" + template_suffix(t) + ".tsv");
      auto table = discovery::parse_table(io::read_file(p), p.string());
      out.insert(out.end(), table.entries.begin(), table.entries.end());
      if (tables) tables->emplace_back(p, std::move(table));
    }
  }
  return out;
}

std::size_t refresh_label_queue(const fs::path& run_dir,
                                const std::vector<verdicts::VerdictRecord>& records) {
  const std::size_t pending = static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(),
      [](const auto& r) { return r.verdict.value == Answer::Unclassified; }));
  const fs::path queue = run_dir / "labels.tsv";
  if (pending > 0) {
    verdicts::export_label_queue(records, queue);
  } else {
    std::error_code ec;
    fs::remove(queue, ec);
  }
  return pending;
}

void prepare_dir(const fs::path& out) {
  std::error_code ec;
  if (fs::exists(out, ec) && !fs::is_directory(out, ec)) {
    throw IoError(out.string() + " exists and is not a directory");
  }
  fs::create_directories(out);
}

std::string probe_dir_name(const BenchmarkDataset& ds) { return ds.name; }

// ---------------------------------------------------------------------------
// Item runs (chains, word chains, question banks).

struct Item {
  std::string id;
  std::string category;
  bool manual = false;
  std::optional<bool> gold;
  std::string prompt;
  verdicts::Verdict verdict;
};

const std::string kItemColumns = "id\tcategory\tgrading\tgold\tprompt\tverdict\tsource\trule\tresponse";

std::string serialize_items(const std::vector<Item>& items, const std::string& digest) {
  std::ostringstream out;
  out << "# manifest\t" << digest << '\n' << kItemColumns << '\n';
  for (const auto& it : items) {
    out << io::escape_field(it.id) << '\t' << io::escape_field(it.category) << '\t'
        << (it.manual ? "manual" : "auto") << '\t'
        << (it.gold ? (*it.gold ? "yes" : "no") : "-") << '\t' << io::escape_field(it.prompt)
        << '\t' << verdicts::to_string(it.verdict.value) << '\t'
        << verdicts::to_string(it.verdict.source) << '\t' << io::escape_field(it.verdict.rule)
        << '\t' << io::escape_field(it.verdict.raw) << '\n';
  }
  return out.str();
}

std::vector<Item> parse_items(const fs::path& path) {
  const auto text = io::read_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<Item> items;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == kItemColumns) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      f.push_back(io::unescape_field(line.substr(start, tab == std::string::npos ? tab : tab - start)));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() != 9) throw ValidationError(where + ": expected 9 columns");
    Item it;
    it.id = f[0];
    it.category = f[1];
    it.manual = f[2] == "manual";
    if (f[3] == "yes" || f[3] == "no") it.gold = f[3] == "yes";
    it.prompt = f[4];
    const auto v = verdicts::answer_from_string(f[5]);
    const auto s = verdicts::source_from_string(f[6]);
    if (!v || !s) throw ValidationError(where + ": bad verdict or source");
    it.verdict = {*v, *s, f[8], f[7]};
    items.push_back(std::move(it));
  }
  return items;
}

verdicts::Grade grade_item(const Item& it, bool score_abstentions) {
  using verdicts::Grade;
  if (it.manual) {
    switch (it.verdict.value) {
      case Answer::Yes: return Grade::Correct;
      case Answer::No: return Grade::Incorrect;
      case Answer::Meta: return score_abstentions ? Grade::Abstained : Grade::Incorrect;
      case Answer::Unclassified: return Grade::Pending;
    }
  }
  return verdicts::grade(it.verdict, it.gold.value_or(false), score_abstentions);
}

std::vector<verdicts::VerdictRecord> item_records(const std::vector<Item>& items,
                                                  const std::string& kind) {
  std::vector<verdicts::VerdictRecord> out;
  for (const auto& it : items) {
    verdicts::VerdictRecord r;
    r.id = it.id;
    r.dataset = kind;
    r.prompt = it.prompt;
    r.verdict = it.verdict;
    out.push_back(std::move(r));
  }
  return out;
}

// Per-category correct counts and overall accuracy, one row per run.
std::string render_items(const fs::path& run_dir, const RunIndex& index,
                         const std::vector<Item>& items) {
  struct Tally {
    std::size_t size = 0, correct = 0, pending = 0, abstained = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Tally> tally;
  Tally total;
  std::ostringstream tsv;
  tsv << "# manifest\t" << index.digest << "\nid\tcategory\tgrade\n";
  for (const auto& it : items) {
    if (!tally.count(it.category)) order.push_back(it.category);
    auto& t = tally[it.category];
    const auto g = grade_item(it, index.score_abstentions);
    tsv << io::escape_field(it.id) << '\t' << io::escape_field(it.category) << '\t'
        << verdicts::to_string(g) << '\n';
    for (Tally* x : {&t, &total}) {
      ++x->size;
      x->correct += g == verdicts::Grade::Correct;
      x->pending += g == verdicts::Grade::Pending;
      x->abstained += g == verdicts::Grade::Abstained;
    }
  }
  const std::size_t scored = total.size - total.abstained;
  const double accuracy = scored == 0 ? 0.0 : 100.0 * static_cast<double>(total.correct) / scored;

  std::vector<std::string> header{"Method"}, row{index.method};
  json categories = json::array();
  for (const auto& c : order) {
    const auto& t = tally[c];
    header.push_back(c + " (" + std::to_string(t.size) + ")");
    row.push_back(std::to_string(t.correct));
    categories.push_back({{"category", c},
                          {"size", t.size},
                          {"correct", t.correct},
                          {"pending", t.pending},
                          {"abstained", t.abstained}});
  }
  header.push_back("Accuracy");
  row.push_back(two_decimals(accuracy) + "%");
  std::ostringstream text;
  text << "# manifest " << index.digest << '\n'
       << "# items " << total.size << ", pending " << total.pending << ", abstained "
       << total.abstained << '\n';
  for (const auto* r : {&header, &row}) {
    for (std::size_t k = 0; k < r->size(); ++k) {
      const std::size_t w = std::max(header[k].size(), row[k].size());
      text << (*r)[k];
      if (k + 1 < r->size()) text << std::string(w - (*r)[k].size() + 2, ' ');
    }
    text << '\n';
  }
  write_text(run_dir / "grades.tsv", tsv.str());
  write_text(run_dir / "report.txt", text.str());
  write_text(run_dir / "report.json",
             io::dump_pretty({{"manifest", index.digest},
                              {"method", index.method},
                              {"items", total.size},
                              {"correct", total.correct},
                              {"pending", total.pending},
                              {"abstained", total.abstained},
                              {"accuracy", accuracy},
                              {"categories", categories}}));
  return text.str();
}

std::string method_label(const gateway::ProviderConfig& cfg, const Manifest& m) {
  std::string label = cfg.name;
  if (m.cot) label += " (CoT " + std::to_string(m.cot->k) + ")";
  return label;
}

RunResult run_items(const Manifest& m, const Context& ctx, std::vector<Item> items,
                    const std::string& digest) {
  const fs::path dir = output_dir(m, ctx);
  prepare_dir(dir);
  const auto cfg = provider_for(m, ctx);
  gateway::Gateway gw(cfg, open_cache(ctx), ctx.clock);
  for (auto& it : items) {
    const auto response = gw.complete(it.prompt);
    if (it.manual) {
      it.verdict = {Answer::Unclassified, verdicts::Source::Auto, response, ""};
    } else {
      it.verdict = verdicts::classify(response);
    }
  }
  RunIndex index;
  index.kind = std::string(to_string(m.kind));
  index.digest = digest;
  index.score_abstentions = m.score_abstentions;
  index.method = method_label(cfg, m);
  write_manifest_copy(dir, m, digest);
  write_text(dir / "run.json", io::dump_pretty(index_to_json(index)));
  write_text(dir / "items.tsv", serialize_items(items, digest));
  const auto text = render_items(dir, index, items);
  const auto pending = refresh_label_queue(dir, item_records(items, index.kind));
  say(ctx, text);
  return {dir, digest, pending};
}

std::string cot_for(const Manifest& m) {
  return m.cot ? prompts::cot_prefix(m.cot->task, m.cot->k) : "";
}

}  // namespace

// ---------------------------------------------------------------------------

BenchmarkDataset resolve_dataset(const std::string& ref, const Context& ctx, const fs::path& base) {
  return load_dataset(find_input(ref, "datasets", ".json", ctx, base));
}

gateway::ProviderConfig resolve_provider(const std::string& ref, const Context& ctx,
                                         const fs::path& base) {
  std::string underscored = ref;
  std::replace(underscored.begin(), underscored.end(), '-', '_');
  for (const auto& candidate : {ref, underscored}) {
    try {
      return gateway::load_provider_config(find_input(candidate, "providers", ".json", ctx, base));
    } catch (const IoError&) {
    }
  }
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(ctx.data_dir / "providers", ec)) {
    if (entry.path().extension() != ".json") continue;
    auto cfg = gateway::load_provider_config(entry.path());
    if (cfg.name == ref) return cfg;
  }
  throw IoError("unknown provider '" + ref + "' (not a file and not a bundled provider name)");
}

std::vector<std::string> list_datasets(const Context& ctx) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(ctx.data_dir / "datasets", ec)) {
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

Manifest effective_manifest(Manifest m, const Context& ctx) {
  if (ctx.provider) m.provider = *ctx.provider;
  if (ctx.provider_config) m.provider = ctx.provider_config->name;
  if (ctx.seed) m.seed = *ctx.seed;
  return m;
}

fs::path output_dir(const Manifest& m, const Context& ctx) {
  if (ctx.out) return *ctx.out;
  if (!m.out.empty()) return m.out;
  throw InputError("no output directory: pass --out or set out in the manifest");
}

RunResult run_manifest(const Manifest& m, const Context& ctx) {
  switch (m.kind) {
    case ExperimentKind::PairwiseProbe: return cmd_probe(m, ctx);
    case ExperimentKind::RenameProbe: return cmd_rename_probe(m, ctx);
    case ExperimentKind::Chains: return cmd_chains(m, ctx);
    case ExperimentKind::WordChains: return cmd_word_chains(m, ctx);
    case ExperimentKind::QuestionBank: return cmd_bank(m, ctx);
    case ExperimentKind::KnnGraphs: return cmd_knn_graphs(m, ctx);
    case ExperimentKind::ScmDemo: break;
  }
  throw InputError("scm-demo manifests run through 'scm demo'");
}

namespace {

RunResult probe_impl(const Manifest& raw, const Context& ctx, bool with_rename) {
  const Manifest m = effective_manifest(raw, ctx);
  const std::string digest = manifest_digest(m);
  std::vector<BenchmarkDataset> datasets;
  for (const auto& ref : m.datasets) datasets.push_back(resolve_dataset(ref, ctx, m.base_dir));
  const auto cfg = provider_for(m, ctx);
  const fs::path dir = output_dir(m, ctx);
  prepare_dir(dir);

  gateway::Gateway gw(cfg, open_cache(ctx), ctx.clock);
  discovery::ProbeOptions options;
  options.timestamp = m.timestamp;
  options.workers = m.workers;

  RunIndex index;
  index.kind = std::string(to_string(m.kind));
  index.digest = digest;
  index.meta_policy = m.meta_policy;
  index.score_abstentions = m.score_abstentions;

  auto probe_into = [&](const BenchmarkDataset& ds, const std::string& sub, const std::string& method) {
    const auto tables = discovery::run_pairwise_probe(ds, m.templates, gw, options);
    write_text(dir / sub / "dataset.json", serialize_dataset(ds));
    for (const auto& t : tables) {
      write_text(dir / sub / ("verdicts" + template_suffix(t.template_id) + ".tsv"),
                 discovery::serialize_table(t));
    }
    index.groups.push_back({sub, ds.name, method, "probe", m.templates});
  };

  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const auto& ds = datasets[k];
    say(ctx, "probing " + ds.name + " with " + cfg.name + ": " +
                 std::to_string(expected_query_count(ds, m.templates.size())) + " queries\n");
    probe_into(ds, probe_dir_name(ds), cfg.name);
    if (with_rename) {
      auto it = m.rename.find(m.datasets[k]);
      if (it == m.rename.end()) continue;
      const auto renamed = discovery::rename_variables(ds, it->second);
      const std::string sub = probe_dir_name(ds) + "-renamed";
      probe_into(renamed, sub, cfg.name + " renamed");
      index.rename_pairs.emplace_back(probe_dir_name(ds), sub);
    }
  }
  write_manifest_copy(dir, m, digest);
  write_text(dir / "run.json", io::dump_pretty(index_to_json(index)));
  const auto text = render_graph_run(dir, index);
  const auto pending = refresh_label_queue(dir, probe_records(dir, index, nullptr));
  say(ctx, text);
  if (pending > 0) {
    say(ctx, std::to_string(pending) + (pending == 1 ? " answer needs" : " answers need") +
                 " a manual label; see " +
                 (dir / "labels.tsv").string() + "\n");
  }
  return {dir, digest, pending};
}

}  // namespace

RunResult cmd_probe(const Manifest& m, const Context& ctx) { return probe_impl(m, ctx, false); }

RunResult cmd_rename_probe(const Manifest& m, const Context& ctx) {
  return probe_impl(m, ctx, true);
}

RunResult cmd_chains(const Manifest& raw, const Context& ctx) {
  const Manifest m = effective_manifest(raw, ctx);
  if (!m.seed) throw ValidationError("chains runs need a seed (manifest seed or --seed)");
  const auto suite = m.chains.empty()
                         ? prompts::default_chain_suite(*m.seed)
                         : prompts::load_chain_suite(find_input(m.chains, "chains", ".json", ctx, m.base_dir));
  const std::string prefix = cot_for(m);
  std::vector<Item> items;
  for (const auto& ci : suite) {
    const auto p = prompts::chain_prompt(ci.spec);
    items.push_back({ci.id, ci.category, false, p.gold, prefix + p.text, {}});
  }
  return run_items(m, ctx, std::move(items), manifest_digest(m));
}

RunResult cmd_word_chains(const Manifest& raw, const Context& ctx) {
  const Manifest m = effective_manifest(raw, ctx);
  const auto path = find_input(m.word_chains.empty() ? "word_chains_sample" : m.word_chains,
                               "chains", ".json", ctx, m.base_dir);
  const std::string prefix = cot_for(m);
  std::vector<Item> items;
  for (const auto& w : prompts::load_word_chains(path)) {
    items.push_back({w.id, w.category, false, prompts::word_chain_gold(w),
                     prefix + prompts::word_chain_prompt(w), {}});
  }
  return run_items(m, ctx, std::move(items), manifest_digest(m));
}

RunResult cmd_bank(const Manifest& raw, const Context& ctx) {
  const Manifest m = effective_manifest(raw, ctx);
  const auto path = find_input(m.bank.empty() ? "intuitive_physics_sample" : m.bank, "banks",
                               ".json", ctx, m.base_dir);
  const auto bank = prompts::load_question_bank(path);
  if (bank.empty()) throw InputError(path.string() + ": the question bank is empty");
  std::vector<Item> items;
  for (const auto& b : bank) {
    items.push_back({b.id, b.category, b.grading == prompts::Grading::Manual, b.gold, b.prompt, {}});
  }
  return run_items(m, ctx, std::move(items), manifest_digest(m));
}

// ---------------------------------------------------------------------------
// k-NN

namespace {

fs::path store_path(const Manifest& m, const Context& ctx) {
  if (!m.store.empty()) {
    const fs::path p(m.store);
    return p.is_absolute() || m.base_dir.empty() ? p : m.base_dir / p;
  }
  return output_dir(m, ctx) / "store.cpvs";
}

facts::VectorStore build_or_load_store(const Manifest& m, const Context& ctx, gateway::Gateway& gw,
                                       fs::path* where) {
  const fs::path path = store_path(m, ctx);
  if (where) *where = path;
  if (m.knowledge_base.empty()) {
    if (existing_file(path)) return facts::VectorStore::load(path);
    throw InputError("no knowledge_base to build a store from, and no store at " + path.string());
  }
  const auto kb_path = find_input(m.knowledge_base, "conceptnet", ".csv", ctx, m.base_dir);
  const auto kb = facts::ingest_knowledge_base(kb_path, {m.relation, m.language});
  for (const auto& w : kb.warnings) say(ctx, "warning: " + w + "\n");
  say(ctx, kb_path.filename().string() + ": " + std::to_string(kb.rows) + " rows, " +
               std::to_string(kb.facts.size()) + " facts (" + std::to_string(kb.duplicates) +
               " duplicate, " + std::to_string(kb.malformed) + " malformed, " +
               std::to_string(kb.self_loops) + " self-loop)\n");
  if (kb.facts.empty()) throw InputError(kb_path.string() + ": no facts match " + m.relation);
  const auto statements = facts::generate_statements(kb.facts, m.templates);
  auto store = facts::build_store(statements, gw);
  store.save(path);
  say(ctx, "store " + path.string() + ": " + std::to_string(store.records.size()) +
               " records, dimension " + std::to_string(store.dimension) + "\n");
  return store;
}

}  // namespace

fs::path cmd_knn_build(const Manifest& raw, const Context& ctx) {
  const Manifest m = effective_manifest(raw, ctx);
  if (m.knowledge_base.empty()) throw InputError("knn build needs knowledge_base in the manifest");
  gateway::Gateway gw(provider_for(m, ctx), open_cache(ctx), ctx.clock);
  fs::path where;
  build_or_load_store(m, ctx, gw, &where);
  return where;
}

facts::KnnPrediction cmd_knn_predict(const fs::path& store_file, const Manifest& raw,
                                     const std::string& dataset, const std::string& cause,
                                     const std::string& effect, int template_id,
                                     const Context& ctx) {
  const Manifest m = effective_manifest(raw, ctx);
  const auto ds = resolve_dataset(dataset, ctx, m.base_dir);
  const auto store = facts::VectorStore::load(store_file);
  gateway::Gateway gw(provider_for(m, ctx), open_cache(ctx), ctx.clock);
  const auto p = facts::knn_predict_edge(ds, ds.truth.index_of(cause), ds.truth.index_of(effect),
                                         template_id, store, gw);
  std::ostringstream out;
  out << "query:      " << p.query << '\n'
      << "prediction: " << (p.present ? "present" : "absent") << '\n'
      << "neighbor:   #" << p.neighbor.index << " " << facts::to_string(p.matched_polarity)
      << " \"" << p.matched_statement << "\"\n"
      << "similarity: " << std::setprecision(6) << std::fixed << p.neighbor.similarity
      << (p.neighbor.tie ? " (tied; lowest index kept)" : "") << '\n';
  say(ctx, out.str());
  return p;
}

RunResult cmd_knn_graphs(const Manifest& raw, const Context& ctx) {
  const Manifest m = effective_manifest(raw, ctx);
  const std::string digest = manifest_digest(m);
  std::vector<BenchmarkDataset> datasets;
  for (const auto& ref : m.datasets) datasets.push_back(resolve_dataset(ref, ctx, m.base_dir));
  const auto cfg = provider_for(m, ctx);
  const fs::path dir = output_dir(m, ctx);
  prepare_dir(dir);
  gateway::Gateway gw(cfg, open_cache(ctx), ctx.clock);
  const auto store = build_or_load_store(m, ctx, gw, nullptr);
  const std::string store_digest = store.digest();

  RunIndex index;
  index.kind = std::string(to_string(m.kind));
  index.digest = digest;
  const std::string method = "k-NN/" + cfg.name;
  for (const auto& ds : datasets) {
    say(ctx, "k-NN graphs for " + ds.name + "\n");
    write_text(dir / ds.name / "dataset.json", serialize_dataset(ds));
    for (int t : m.templates) {
      const auto g = facts::knn_graph(ds, t, store, gw);
      write_text(dir / ds.name / ("knn" + template_suffix(t) + ".tsv"),
                 serialize_audit(ds, g, digest, store_digest));
    }
    index.groups.push_back({ds.name, ds.name, method, "knn", m.templates});
  }
  write_manifest_copy(dir, m, digest);
  write_text(dir / "run.json", io::dump_pretty(index_to_json(index)));
  say(ctx, render_graph_run(dir, index));
  return {dir, digest, 0};
}

// ---------------------------------------------------------------------------

int cmd_scm_demo(const Context& ctx) {
  const fs::path dir = ctx.data_dir / "scm";
  const auto m1 = scm::load_scm(dir / "ex2_m1.json");
  const auto meta = scm::load_scm(dir / "ex2_m2.json");
  const auto observed_model = scm::load_scm(dir / "ex2_m1_with_z.json");

  const double p_y = scm::answer_query(m1, scm::CausalQuery::observational({{"Y", 1}}));
  const auto do_query = scm::CausalQuery::interventional({{"Y", 1}}, {{"X", 1}});
  const double p_do = scm::answer_query(m1, do_query);

  const auto meta_joint = scm::joint_distribution(meta);
  if (meta_joint.probabilities.size() != 1 || meta.endogenous().size() != 1 ||
      meta.endogenous()[0].encodes_graph_over.empty()) {
    throw ValidationError((dir / "ex2_m2.json").string() +
                          ": the meta model must have one deterministic graph-valued variable");
  }
  const auto code = meta_joint.probabilities.begin()->first[0];
  const auto w = graph_from_adjacency_code(static_cast<std::uint64_t>(code),
                                           meta.endogenous()[0].encodes_graph_over);
  const auto observed = scm::joint_distribution(observed_model);
  const double p_meta = scm::answer_l2_via_meta(w, observed, do_query);

  std::ostringstream out;
  out << std::setprecision(17);
  out << "P(Y=1)                  = " << p_y << '\n'
      << "P(Y_{X<-1}=1)           = " << p_do << '\n'
      << "via meta graph W        = " << p_meta << "   (W: ";
  bool first = true;
  w.for_each_pair([&](std::size_t i, std::size_t j, EdgeState s) {
    if (s == EdgeState::Absent) return;
    out << (first ? "" : ", ") << (s == EdgeState::Backward ? w.label(j) : w.label(i)) << " -> "
        << (s == EdgeState::Backward ? w.label(i) : w.label(j));
    first = false;
  });
  out << ")\n";
  if (ctx.verbose) {
    out << "\njoint distribution of " << observed_model.name() << ":\n";
    std::vector<std::string> names = observed.variables;
    for (const auto& n : names) out << std::setw(3) << n;
    out << "   P\n";
    std::vector<scm::Value> cursor(names.size(), 0);
    std::vector<std::size_t> digit(names.size(), 0);
    for (;;) {
      scm::Assignment event;
      for (std::size_t k = 0; k < names.size(); ++k) {
        cursor[k] = observed.domains[k][digit[k]];
        event.emplace_back(names[k], cursor[k]);
      }
      for (auto v : cursor) out << std::setw(3) << v;
      out << "   " << observed.probability(event) << '\n';
      std::size_t k = names.size();
      while (k > 0 && ++digit[k - 1] == observed.domains[k - 1].size()) digit[--k] = 0;
      if (k == 0) break;
    }
  }
  const bool ok = std::abs(p_y - 0.25) <= scm::kProbabilityTolerance &&
                  std::abs(p_do - 0.25) <= scm::kProbabilityTolerance &&
                  std::abs(p_meta - 0.25) <= scm::kProbabilityTolerance;
  out << (ok ? "all three equal 1/4\n" : "MISMATCH: expected all three to equal 1/4\n");
  say(ctx, out.str());
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

std::size_t cmd_labels_export(const fs::path& run_dir, const fs::path& out) {
  const auto index = load_index(run_dir);
  std::vector<verdicts::VerdictRecord> records;
  if (fs::exists(run_dir / "items.tsv")) {
    records = item_records(parse_items(run_dir / "items.tsv"), index.kind);
  } else {
    records = probe_records(run_dir, index, nullptr);
  }
  return verdicts::export_label_queue(records, out);
}

std::size_t cmd_labels_import(const fs::path& run_dir, const fs::path& labels, const Context& ctx) {
  const auto index = load_index(run_dir);
  if (fs::exists(run_dir / "items.tsv")) {
    auto items = parse_items(run_dir / "items.tsv");
    auto records = item_records(items, index.kind);
    const auto changed = verdicts::import_labels(labels, records);
    for (std::size_t k = 0; k < items.size(); ++k) items[k].verdict = records[k].verdict;
    write_text(run_dir / "items.tsv", serialize_items(items, index.digest));
    say(ctx, render_items(run_dir, index, items));
    refresh_label_queue(run_dir, records);
    return changed;
  }
  std::vector<std::pair<fs::path, discovery::EdgeVerdictTable>> tables;
  auto records = probe_records(run_dir, index, &tables);
  const auto changed = verdicts::import_labels(labels, records);
  std::size_t k = 0;
  for (auto& [path, table] : tables) {
    for (auto& e : table.entries) e = records[k++];
    write_text(path, discovery::serialize_table(table));
  }
  say(ctx, render_graph_run(run_dir, index));
  refresh_label_queue(run_dir, records);
  return changed;
}

std::string cmd_report(const std::vector<fs::path>& runs, const std::optional<fs::path>& out,
                       const Context& ctx) {
  if (runs.empty()) throw InputError("report needs at least one run directory");
  std::vector<report::RowFile> files;
  for (const auto& r : runs) {
    const fs::path rows = r / "metrics.tsv";
    if (!existing_file(rows)) {
      throw InputError(r.string() + " has no metrics.tsv (not a graph run, or empty)");
    }
    files.push_back(report::parse_rows(io::read_file(rows), rows.string()));
  }
  const auto table = report::aggregate(files);
  std::string header;
  for (const auto& d : table.manifests) header += "# manifest " + d + "\n";
  const auto text = header + report::render_table(table);
  if (out) {
    fs::create_directories(*out);
    write_text(*out / "report.txt", text);
    write_text(*out / "report.json", io::dump_pretty(report::table_to_json(table)));
  }
  say(ctx, text);
  return text;
}

}  // namespace causeprobe::app
