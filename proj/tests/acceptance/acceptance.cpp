// Acceptance suite: one PASS/FAIL line per criterion, exit 0 iff all pass.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "causeprobe/app.hpp"
#include "causeprobe/error.hpp"
#include "causeprobe/facts.hpp"
#include "causeprobe/io.hpp"
#include "causeprobe/metrics.hpp"
#include "causeprobe/prompts.hpp"
#include "causeprobe/report.hpp"
#include "causeprobe/scm.hpp"
#include "support.hpp"

using namespace causeprobe;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CAUSEPROBE_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few mismatches of a criterion.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    if (failures_++ < 3) notes_ << (notes_.tellp() > 0 ? "; " : "") << what;
  }
  Outcome finish(const std::string& summary) const {
    if (failures_ == 0) return {true, summary + ", " + std::to_string(checks_) + " checks"};
    return {false, std::to_string(failures_) + " of " + std::to_string(checks_) + " checks failed: " + notes_.str()};
  }

 private:
  std::size_t checks_ = 0, failures_ = 0;
  std::ostringstream notes_;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("causeprobe_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return files;
}

BenchmarkDataset bundled(const std::string& name) {
  return load_dataset(kData / "datasets" / (name + ".json"));
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome meta_scm_example() {
  Checker c;
  app::Context ctx;
  std::ostringstream log;
  ctx.log = &log;
  c.expect(app::cmd_scm_demo(ctx) == 0, "scm demo reported a mismatch");
  std::istringstream lines(log.str());
  std::string line;
  std::vector<double> values;
  while (std::getline(lines, line)) {
    const auto eq = line.find("= ");
    if (line.rfind("P(", 0) == 0 || line.rfind("via meta", 0) == 0) values.push_back(std::stod(line.substr(eq + 2)));
  }
  c.expect(values.size() == 3, "expected three printed values");
  for (double v : values) c.expect(std::abs(v - 0.25) <= 1e-12, "value " + fmt(v));

  // The same three numbers straight from the library.
  const auto m1 = scm::load_scm(kData / "scm" / "ex2_m1.json");
  const auto with_z = scm::load_scm(kData / "scm" / "ex2_m1_with_z.json");
  const auto q = scm::CausalQuery::interventional({{"Y", 1}}, {{"X", 1}});
  CausalGraph w({"Z", "X", "Y"});
  w.add_directed(0, 1);
  w.add_directed(0, 2);
  const double direct[] = {scm::answer_query(m1, scm::CausalQuery::observational({{"Y", 1}})),
                           scm::answer_query(m1, q),
                           scm::answer_l2_via_meta(w, scm::joint_distribution(with_z), q)};
  for (double v : direct) c.expect(std::abs(v - 0.25) <= 1e-12, "library value " + fmt(v));
  return c.finish("P(Y=1) = P(Y_{X<-1}=1) = meta answer = 0.25");
}

Outcome query_accounting() {
  Checker c;
  const std::pair<const char*, std::uint64_t> expected[] = {
      {"altitude", 10}, {"cancer", 100}, {"health", 60}, {"driving", 30}, {"earthquake", 100}, {"recovery", 30}};
  std::string seen;
  for (const auto& [name, count] : expected) {
    const auto got = expected_query_count(bundled(name), 5);
    c.expect(got == count, std::string(name) + " gives " + std::to_string(got));
    seen += (seen.empty() ? "" : "/") + std::to_string(got);
  }
  return c.finish(seen + " queries at 5 templates");
}

Outcome truncated_factorization() {
  Checker c;
  std::mt19937_64 rng(20240101);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = support::random_markovian_scm(rng, 1 + trial % 4);
    const auto g = scm::induced_graph(m);
    const auto joint = scm::joint_distribution(m);
    for (const auto& target : m.endogenous_names()) {
      for (const auto& event : m.endogenous_names()) {
        for (scm::Value x : {0, 1}) {
          for (scm::Value y : {0, 1}) {
            const auto q = scm::CausalQuery::interventional({{event, y}}, {{target, x}});
            const double diff = std::abs(scm::answer_l2_via_meta(g, joint, q) - scm::answer_query(m, q));
            worst = std::max(worst, diff);
            c.expect(diff <= 1e-12, "trial " + std::to_string(trial) + " do(" + target + ") differs by " + fmt(diff));
          }
        }
      }
    }
  }
  return c.finish("200 models, max deviation " + fmt(worst));
}

Outcome metric_oracles() {
  Checker c;
  const auto dags = support::all_dags(3);
  c.expect(dags.size() == 25, "3-node DAG count " + std::to_string(dags.size()));
  for (const auto& truth : dags) {
    for (const auto& pred : dags) {
      c.expect(metrics::shd(pred, truth) == support::shd_oracle(pred, truth), "3-node shd");
      const auto s = metrics::sid(pred, truth);
      c.expect(s.min == s.max && s.max == support::sid_oracle(pred, truth), "3-node sid");
    }
  }
  std::mt19937_64 rng(404);
  for (int t = 0; t < 200; ++t) {
    const auto truth = support::random_graph(rng, 4, true);
    const auto pred = support::random_graph(rng, 4, true);
    c.expect(metrics::shd(pred, truth) == support::shd_oracle(pred, truth), "4-node shd");
    c.expect(metrics::sid(pred, truth).max == support::sid_oracle(pred, truth), "4-node sid");
  }
  return c.finish("625 + 200 DAG pairs");
}

Outcome decisiveness_conformance() {
  Checker c;
  for (std::size_t n = 1; n <= 6; ++n) {
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < n; ++k) labels.push_back("V" + std::to_string(k));
    c.expect(metrics::decisiveness(CausalGraph(labels)) == 0.0, "edgeless graph");
  }
  std::mt19937_64 rng(55);
  for (int t = 0; t < 1000; ++t) {
    const auto g = support::random_graph(rng, 2 + t % 6, false);
    std::size_t asym = 0, sym = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = i + 1; j < g.size(); ++j) {
        const auto s = g.state(i, j);
        asym += s == EdgeState::Forward || s == EdgeState::Backward;
        sym += s == EdgeState::Symmetric;
      }
    }
    const double expect = asym + sym == 0 ? 0.0 : static_cast<double>(asym) / static_cast<double>(asym + sym);
    c.expect(std::abs(metrics::decisiveness(g) - expect) <= 1e-12, "graph " + std::to_string(t));
  }
  return c.finish("1000 random graphs");
}

Outcome sparsity_conformance() {
  Checker c;
  std::mt19937_64 rng(66);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + t % 6;
    const auto g = support::random_graph(rng, n, false);
    std::size_t half_edges = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto s = g.state(i, j);
        // i -> j is a half-edge when the pair points forward or both ways.
        half_edges += s == EdgeState::Forward || s == EdgeState::Symmetric;
      }
    }
    const double expect = 1.0 - static_cast<double>(half_edges) / static_cast<double>(n * (n - 1));
    c.expect(std::abs(metrics::sparsity(n, g) - expect) <= 1e-12, "graph " + std::to_string(t));
  }
  CausalGraph one_sym({"A", "B", "C"});
  one_sym.add_symmetric(0, 1);
  CausalGraph one_dir({"A", "B", "C"});
  one_dir.add_directed(0, 1);
  c.expect(metrics::sparsity(3, one_sym) == 1.0 - 2.0 / 6.0, "a symmetric edge counts twice");
  c.expect(metrics::sparsity(3, one_dir) == 1.0 - 1.0 / 6.0, "a directed edge counts once");
  return c.finish("1000 random graphs");
}

Outcome ads_identity() {
  Checker c;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> d(5);
    for (double& x : d) x = unit(rng);
    const std::vector<double> sym(d.begin(), d.begin() + 3), asym(d.begin() + 3, d.end());
    const double expect = (d[3] + d[4]) / 2.0 - (d[0] + d[1] + d[2]) / 3.0;
    const double got = metrics::ads_from_groups(sym, asym);
    c.expect(std::abs(got - expect) <= 1e-12, "identity at trial " + std::to_string(t));
    c.expect(std::abs(metrics::ads_from_groups(asym, sym) + got) <= 1e-12, "antisymmetry at trial " + std::to_string(t));
  }
  return c.finish("1000 random template vectors");
}

Outcome probe_determinism() {
  Checker c;
  const fs::path root = scratch("probe");
  const auto manifest = load_manifest(kData / "manifests" / "probe_mock.json");
  auto run = [&](const std::string& out, const fs::path& cache) {
    app::Context ctx;
    ctx.cache_path = cache;
    ctx.out = root / out;
    return app::cmd_probe(manifest, ctx);
  };
  const auto first = run("first", root / "cache_a.jsonl");
  const auto second = run("second", root / "cache_b.jsonl");
  const auto warm = run("warm", root / "cache_a.jsonl");
  const auto a = snapshot(root / "first");
  c.expect(a == snapshot(root / "second"), "two cold runs differ");
  c.expect(a == snapshot(root / "warm"), "cold and warm runs differ");
  c.expect(first.digest == warm.digest && second.digest == first.digest, "digests differ");
  for (const char* ds : {"altitude", "driving"}) {
    for (int t = 1; t <= 5; ++t) {
      for (const char* kind : {"verdicts_t", "graph_t"}) {
        const std::string name = std::string(ds) + "/" + kind + std::to_string(t) +
                                  (std::string(kind) == "graph_t" ? ".dot" : ".tsv");
        c.expect(a.count(name) == 1, "missing " + name);
      }
    }
  }
  const auto& text = a.at("report.txt");
  for (const char* row : {"SID", "SHD", "F1", "Sparsity", "ADS"}) {
    c.expect(text.find(std::string("\n") + row + " ") != std::string::npos, std::string("no ") + row + " row");
  }
  c.expect(text.find("altitude") != std::string::npos && text.find("driving") != std::string::npos,
           "report columns");
  fs::remove_all(root);
  return c.finish(std::to_string(a.size()) + " files identical across 3 runs");
}

// Parses "If A causes B, B causes C and C causes D. Does A cause D?".
bool chain_oracle(const std::string& text, bool* parsed) {
  *parsed = false;
  const auto mid = text.find(". Does ");
  if (text.rfind("If ", 0) != 0 || mid == std::string::npos || text.back() != '?') return false;
  std::string body = text.substr(3, mid - 3);
  std::vector<std::string> parts;
  for (std::size_t at = 0;;) {
    std::size_t next = std::min(body.find(", ", at), body.find(" and ", at));
    parts.push_back(body.substr(at, next - at));
    if (next == std::string::npos) break;
    at = next + (body.compare(next, 2, ", ") == 0 ? 2 : 5);
  }
  std::map<std::string, std::size_t> index;
  auto id = [&](const std::string& s) { return index.emplace(s, index.size()).first->second; };
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& p : parts) {
    const auto k = p.find(" causes ");
    if (k == std::string::npos) return false;
    edges.emplace_back(id(p.substr(0, k)), id(p.substr(k + 8)));
  }
  const std::string q = text.substr(mid + 7, text.size() - mid - 8);
  const auto k = q.find(" cause ");
  if (k == std::string::npos) return false;
  const auto from = id(q.substr(0, k));
  const auto to = id(q.substr(k + 7));
  *parsed = true;
  return support::transitive_closure(index.size(), edges)[from][to];
}

Outcome chain_gold() {
  Checker c;
  std::size_t questions = 0;
  auto verify = [&](const prompts::ChainSpec& spec) {
    const auto p = prompts::chain_prompt(spec);
    bool parsed = false;
    const bool gold = chain_oracle(p.text, &parsed);
    c.expect(parsed, "unparsable chain: " + p.text);
    c.expect(gold == p.gold, "gold differs for: " + p.text);
    ++questions;
  };
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (std::size_t n = 2; n <= 10; ++n) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          for (int variant = 0; variant < 4; ++variant) {
            prompts::ChainSpec spec{n, std::make_pair(i, j), std::nullopt, std::nullopt};
            if (variant & 1) spec.order_seed = seed;
            if (variant & 2) spec.names_seed = seed;
            if (seed > 0 && variant == 0) continue;  // seed-independent
            verify(spec);
          }
        }
      }
    }
    for (const auto& item : prompts::default_chain_suite(seed)) verify(item.spec);
  }

  // A provider that always answers gold.
  const fs::path root = scratch("chains");
  std::size_t perfect = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    gateway::MockScript script;
    for (const auto& item : prompts::default_chain_suite(seed)) {
      const auto p = prompts::chain_prompt(item.spec);
      script.rules.push_back({p.text, p.gold ? "Yes." : "No.", false});
    }
    app::Context ctx;
    ctx.cache = std::make_shared<gateway::ExchangeCache>();
    ctx.provider_config = gateway::mock_provider("gold", script);
    ctx.out = root / std::to_string(seed);
    auto m = parse_manifest(R"({"kind": "chains", "provider": "gold"})", "acceptance");
    m.seed = seed;
    app::cmd_chains(m, ctx);
    const auto report = io::load_json(root / std::to_string(seed) / "report.json");
    const bool full = report["accuracy"].get<double>() == 100.0 && report["correct"] == report["items"];
    c.expect(full, "gold mock below 100% at seed " + std::to_string(seed));
    perfect += full;
  }
  fs::remove_all(root);
  return c.finish(std::to_string(questions) + " questions, gold mock at 100% on " + std::to_string(perfect) +
                  " suites");
}

// Argmax of cosine similarity from the definition.
std::size_t exhaustive_nearest(const facts::VectorStore& store, const std::vector<double>& q) {
  std::size_t best = 0;
  long double best_sim = -2;
  for (std::size_t k = 0; k < store.records.size(); ++k) {
    const auto& v = store.records[k].vector;
    long double dot = 0, nq = 0, nv = 0;
    for (std::size_t d = 0; d < q.size(); ++d) {
      dot += static_cast<long double>(q[d]) * v[d];
      nq += static_cast<long double>(q[d]) * q[d];
      nv += static_cast<long double>(v[d]) * v[d];
    }
    const long double sim = dot / std::sqrt(nq * nv);
    if (sim > best_sim + 1e-12L) {
      best_sim = sim;
      best = k;
    }
  }
  return best;
}

Outcome knn_conformance() {
  Checker c;
  gateway::Gateway gw(gateway::load_provider_config(kData / "providers" / "mock_embedder.json"), nullptr);
  const auto kb = facts::ingest_knowledge_base(kData / "conceptnet" / "causes_50.csv").facts;
  c.expect(kb.size() == 50, "fixture has " + std::to_string(kb.size()) + " facts");
  const std::vector<int> templates{1, 2, 3, 4, 5};
  const auto statements = facts::generate_statements(kb, templates);
  c.expect(statements.size() == 2 * kb.size() * templates.size(), "statement count identity");
  const auto store = facts::build_store(statements, gw);

  std::size_t predictions = 0;
  for (const char* name : {"altitude", "health", "driving", "recovery", "cancer", "earthquake"}) {
    const auto ds = bundled(name);
    for (int t : templates) {
      for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.size(); ++j) {
          if (i == j) continue;
          const auto p = facts::knn_predict_edge(ds, i, j, t, store, gw);
          const auto expect = exhaustive_nearest(store, gw.embed(p.query));
          c.expect(p.neighbor.index == expect, std::string(name) + " " + p.query);
          c.expect(p.present == (store.records[expect].polarity == facts::Polarity::Causal),
                   std::string(name) + " polarity of " + p.query);
          ++predictions;
        }
      }
    }
  }
  const auto cancer = bundled("cancer");
  const auto smoking = cancer.truth.index_of("smoking");
  const auto disease = cancer.truth.index_of("cancer");
  bool literal = false;
  for (int t : templates) {
    const auto p = facts::knn_predict_edge(cancer, smoking, disease, t, store, gw);
    if (p.query != "Smoking causes cancer.") continue;
    literal = true;
    c.expect(p.present, "the literal statement is not present under template " + std::to_string(t));
    c.expect(p.matched_statement == "Smoking causes cancer.", "matched " + p.matched_statement);
  }
  c.expect(literal, "no template renders \"Smoking causes cancer.\"");
  return c.finish(std::to_string(predictions) + " predictions on " + std::to_string(store.records.size()) +
                  " records");
}

// Stands in for cached remote exchanges: a mock run's transcript is rewritten
// under a remote provider's identity, then replayed with no network access.
Outcome transcript_replay() {
  Checker c;
  std::cout << "    note: the published GPT-3, GPT-4, Luminous and OPT tables come from remote,\n"
               "    versioned, nondeterministic services and are not reproducible here; replaying\n"
               "    cached exchanges must recompute metric rows bit for bit instead.\n";
  const fs::path root = scratch("replay");
  const auto manifest = load_manifest(kData / "manifests" / "probe_mock.json");
  app::Context record;
  record.cache_path = root / "recorded.jsonl";
  record.out = root / "recorded";
  app::cmd_probe(manifest, record);

  auto remote = gateway::load_provider_config(kData / "providers" / "openai_gpt4.json");
  remote.base_url = "http://127.0.0.1:9";
  remote.api_key_env = "CAUSEPROBE_ACCEPTANCE_NO_KEY";
  remote.max_retries = 0;
  {
    gateway::ExchangeCache transcript(root / "transcript.jsonl");
    std::istringstream lines(io::read_file(root / "recorded.jsonl"));
    std::string line;
    while (std::getline(lines, line)) {
      const auto j = io::parse_json(line, "recorded.jsonl");
      gateway::CachedExchange e;
      e.kind = j["kind"];
      e.prompt = j["prompt"];
      e.response = j["response"];
      e.provider = remote.name;
      e.model = remote.model;
      e.timestamp = j["timestamp"];
      e.key = gateway::completion_cache_key(remote, e.prompt);
      transcript.append(e);
    }
  }
  auto replay = [&](const std::string& out) {
    app::Context ctx;
    ctx.cache_path = root / "transcript.jsonl";
    ctx.provider_config = remote;
    ctx.out = root / out;
    return app::cmd_probe(manifest, ctx);
  };
  try {
    replay("replay_a");
    replay("replay_b");
    const auto a = io::read_file(root / "replay_a" / "metrics.tsv");
    c.expect(a == io::read_file(root / "replay_b" / "metrics.tsv"), "replays differ");
    const auto rows = report::parse_rows(a, "replay").rows;
    const auto recorded = report::parse_rows(io::read_file(root / "recorded" / "metrics.tsv"), "recorded").rows;
    c.expect(rows.size() == recorded.size() && rows.size() == 10, "row count");
    for (std::size_t k = 0; k < std::min(rows.size(), recorded.size()); ++k) {
      auto relabeled = recorded[k];
      relabeled.method = rows[k].method;
      relabeled.provider = rows[k].provider;
      relabeled.model = rows[k].model;
      c.expect(relabeled == rows[k], "row " + std::to_string(k) + " differs from the recorded run");
      c.expect(rows[k].provider == "openai-gpt4", "provider " + rows[k].provider);
    }
    c.expect(snapshot(root / "replay_a") == snapshot(root / "replay_b"), "replay directories differ");
  } catch (const Error& e) {
    c.expect(false, std::string("replay needed the network: ") + e.what());
  }
  fs::remove_all(root);
  return c.finish("metric rows recomputed bit-identically from the transcript");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "meta-SCM worked example", 1, meta_scm_example},
      {2, "query accounting", 1, query_accounting},
      {3, "truncated factorization equivalence", 30, truncated_factorization},
      {4, "SHD and SID oracles", 120, metric_oracles},
      {5, "decisiveness", 5, decisiveness_conformance},
      {6, "sparsity", 5, sparsity_conformance},
      {7, "ADS identity", 1, ads_identity},
      {8, "end-to-end determinism", 10, probe_determinism},
      {9, "chain gold oracle", 30, chain_gold},
      {10, "k-NN conformance", 10, knn_conformance},
      {11, "transcript replay", 10, transcript_replay},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.limit_seconds) {
      o.pass = false;
      o.detail += " (over the " + fmt(cr.limit_seconds) + " s limit)";
    }
    std::ostringstream time;
    time << std::fixed << std::setprecision(2) << secs;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << cr.id << ". " << cr.name << ": "
              << o.detail << " [" << time.str() << " s]\n";
    failed += !o.pass;
  }
  std::cout << (failed == 0 ? "all criteria passed\n" : std::to_string(failed) + " criteria failed\n");
  return failed == 0 ? 0 : 1;
}
