#include <doctest.h>

#include <cmath>

#include "causeprobe/error.hpp"
#include "causeprobe/facts.hpp"
#include "causeprobe/prompts.hpp"
#include "causeprobe/rng.hpp"

using namespace causeprobe;
using namespace causeprobe::facts;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CAUSEPROBE_DATA_DIR;

gateway::ProviderConfig embedder() {
  return gateway::load_provider_config(kData / "providers" / "mock_embedder.json");
}

BenchmarkDataset bundled(const std::string& name) {
  return load_dataset(kData / "datasets" / (name + ".json"));
}

// Argmax of cosine similarity written from the definition, no shared code.
std::size_t oracle_nearest(const VectorStore& store, const std::vector<double>& q) {
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

}  // namespace

TEST_CASE("concept URIs are normalized") {
  CHECK(concept_text("/c/en/lack_of_fuel/n", "en") == "lack of fuel");
  CHECK(concept_text("/c/en/Moving_Car", "en") == "moving car");
  CHECK_FALSE(concept_text("/c/de/regen", "en"));
  CHECK_FALSE(concept_text("/r/Causes", "en"));
  CHECK_FALSE(concept_text("/c/en/", "en"));
}

TEST_CASE("ten-row sample keeps the three English cause rows") {
  const auto r = ingest_knowledge_base(kData / "conceptnet" / "sample_assertions.csv");
  CHECK(r.rows == 10);
  REQUIRE(r.facts.size() == 3);
  CHECK(r.facts[0] == CausalFact{"rain", "flood", "/r/Causes", 1.0});
  CHECK(r.facts[1].cause == "smoking");
  CHECK(r.facts[2] == CausalFact{"driving", "lack of fuel", "/r/Causes", 2.0});
  CHECK(r.warnings.empty());
  CHECK(r.malformed == 0);
}

TEST_CASE("ingest filtering edge cases") {
  const std::string text =
      "/r/Causes\t/c/en/rain\t/c/en/flood\t{}\n"
      "/r/Causes/\t/c/en/rain\t/c/en/flood\t{}\n"
      "/r/Causes\t/c/en/rain\t/c/en/rain/n\t{}\n"
      "only\ttwo\n"
      "/r/Causes\tfoo\t/c/en/flood\t{}\n"
      "/r/Causes\t/c/en/wind\t/c/en/waves\tnot json\n"
      "\n";
  const auto r = ingest_knowledge_base_text(text);
  CHECK(r.rows == 6);
  CHECK(r.duplicates == 1);
  CHECK(r.self_loops == 1);
  CHECK(r.malformed == 2);
  REQUIRE(r.facts.size() == 2);
  CHECK(r.facts[1] == CausalFact{"wind", "waves", "/r/Causes", std::nullopt});

  const auto none = ingest_knowledge_base_text(text, {"/r/IsA", "en"});
  CHECK(none.facts.empty());
  CHECK(none.warnings.size() == 1);
  const auto de = ingest_knowledge_base_text("/r/Causes\t/c/de/regen\t/c/de/flut\t{}\n", {"/r/Causes", "de"});
  REQUIRE(de.facts.size() == 1);
  CHECK(de.facts[0].effect == "flut");
  CHECK_THROWS_AS(ingest_knowledge_base(kData / "conceptnet" / "absent.csv"), IoError);
}

TEST_CASE("fifty-fact fixture") {
  const auto r = ingest_knowledge_base(kData / "conceptnet" / "causes_50.csv");
  CHECK(r.rows == 53);
  CHECK(r.facts.size() == 50);
  CHECK(r.duplicates == 1);
  CHECK(r.facts[0] == CausalFact{"smoking", "cancer", "/r/Causes", 1.0});
  for (const auto& f : r.facts) {
    CHECK_FALSE(f.cause.empty());
    CHECK(f.cause != f.effect);
  }
}

TEST_CASE("statement generation") {
  const std::vector<CausalFact> rain{{"rain", "floods", "/r/Causes", std::nullopt}};
  const auto s = generate_statements(rain, {4});
  REQUIRE(s.size() == 2);
  CHECK(s[0] == Statement{"Rain causes floods.", Polarity::Causal, 0, 4});
  CHECK(s[1] == Statement{"Floods cause rain.", Polarity::AntiCausal, 0, 4});
  CHECK(generate_statements(rain, {1})[0].text == "Rain and floods are causally related.");
  CHECK_THROWS_AS(generate_statements({}, {1}), InputError);
  CHECK_THROWS_AS(generate_statements(rain, {9}), InputError);

  SeededRng rng(7);
  const auto kb = ingest_knowledge_base(kData / "conceptnet" / "causes_50.csv").facts;
  for (int round = 0; round < 50; ++round) {
    std::vector<CausalFact> pick;
    const std::size_t nf = 1 + rng.below(kb.size());
    for (std::size_t k = 0; k < nf; ++k) pick.push_back(kb[rng.below(kb.size())]);
    std::vector<int> tpl;
    for (int t = 1; t <= 5; ++t) {
      if (rng.below(2)) tpl.push_back(t);
    }
    const auto out = generate_statements(pick, tpl);
    CHECK(out.size() == 2 * pick.size() * tpl.size());

    // Swapping twice gives the original statement back.
    std::vector<CausalFact> swapped, twice;
    for (const auto& f : pick) swapped.push_back({f.effect, f.cause, f.relation, f.weight});
    for (const auto& f : swapped) twice.push_back({f.effect, f.cause, f.relation, f.weight});
    if (tpl.empty()) continue;
    const auto sw = generate_statements(swapped, tpl);
    CHECK(generate_statements(twice, tpl) == out);
    for (std::size_t k = 0; k < out.size(); k += 2) {
      CHECK(sw[k].text == out[k + 1].text);
      CHECK(sw[k + 1].text == out[k].text);
    }
  }
}

TEST_CASE("store build, persistence and corruption") {
  auto cache = std::make_shared<gateway::ExchangeCache>();
  const auto kb = ingest_knowledge_base(kData / "conceptnet" / "causes_50.csv").facts;
  const std::vector<CausalFact> few(kb.begin(), kb.begin() + 6);
  const auto statements = generate_statements(few, {1, 2, 3, 4, 5});

  gateway::Gateway cold(embedder(), cache);
  const auto store = build_store(statements, cold);
  CHECK(cold.network_calls() == statements.size());
  CHECK(store.records.size() == 60);
  CHECK(store.dimension == 256);
  CHECK(store.model == "ngram-embedder-1");
  for (const auto& r : store.records) {
    double norm = 0;
    for (double x : r.vector) norm += x * x;
    CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-9);
  }

  gateway::Gateway warm(embedder(), cache);
  const auto again = build_store(statements, warm);
  CHECK(warm.network_calls() == 0);
  CHECK(again.serialize() == store.serialize());

  const fs::path path = fs::temp_directory_path() / "causeprobe_test_store.cpvs";
  store.save(path);
  const auto loaded = VectorStore::load(path);
  CHECK(loaded == store);
  CHECK(loaded.serialize() == store.serialize());
  CHECK(loaded.digest() == store.digest());
  fs::remove(path);

  auto bytes = store.serialize();
  auto flipped = bytes;
  flipped[100] ^= 0x01;
  CHECK_THROWS_AS(VectorStore::deserialize(flipped, "mem"), CorruptionError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(VectorStore::deserialize(magic, "mem"), CorruptionError);
  CHECK_THROWS_AS(VectorStore::deserialize(bytes.substr(0, 20), "mem"), CorruptionError);

  gateway::Gateway gw(embedder(), nullptr);
  CHECK_THROWS_AS(build_store({}, gw), InputError);
}

TEST_CASE("nearest neighbour search") {
  gateway::Gateway gw(embedder(), nullptr);
  const std::vector<CausalFact> one{{"smoking", "cancer", "/r/Causes", std::nullopt}};
  const auto store = build_store(generate_statements(one, {4}), gw);
  const auto cancer = bundled("cancer");

  const auto p = knn_predict_edge(cancer, 1, 2, 4, store, gw);
  CHECK(p.query == "Smoking causes cancer.");
  CHECK(p.present);
  CHECK(p.neighbor.index == 0);
  CHECK(p.neighbor.similarity == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(p.neighbor.tie);
  const auto back = knn_predict_edge(cancer, 2, 1, 4, store, gw);
  CHECK_FALSE(back.present);
  CHECK(back.matched_statement == "Cancer causes smoking.");

  VectorStore dup = store;
  dup.records.push_back(store.records[0]);
  const auto n = nearest(dup, store.records[0].vector);
  CHECK(n.index == 0);
  CHECK(n.tie);

  CHECK_THROWS_AS(nearest(VectorStore{}, {}), InputError);
  CHECK_THROWS_AS(nearest(store, std::vector<double>(3, 0.5)), InputError);
}

TEST_CASE("k-NN agrees with an exhaustive scan on the fifty-fact store") {
  gateway::Gateway gw(embedder(), nullptr);
  const auto kb = ingest_knowledge_base(kData / "conceptnet" / "causes_50.csv").facts;
  const auto store = build_store(generate_statements(kb, {1, 2, 3, 4, 5}), gw);
  CHECK(store.records.size() == 500);
  for (const char* name : {"cancer", "driving", "altitude", "health"}) {
    const auto ds = bundled(name);
    for (int t = 1; t <= 5; ++t) {
      const auto g = knn_graph(ds, t, store, gw);
      CHECK(g.predictions.size() == ds.size() * (ds.size() - 1));
      for (const auto& p : g.predictions) {
        const auto q = gw.embed(p.query);
        const auto expect = oracle_nearest(store, q);
        CHECK(p.neighbor.index == expect);
        CHECK(p.present == (store.records[expect].polarity == Polarity::Causal));
        CHECK(p.neighbor.similarity <= 1.0 + 1e-12);
        CHECK(p.neighbor.similarity >= -1.0 - 1e-12);
      }
    }
  }
  // The word-identical fact gives the edge under every template.
  const auto cancer = bundled("cancer");
  for (int t = 1; t <= 5; ++t) {
    const auto g = knn_graph(cancer, t, store, gw).graph;
    CHECK(g.state(1, 2) != EdgeState::Absent);
  }
}

TEST_CASE("all-absent predictions give an empty graph") {
  gateway::Gateway gw(embedder(), nullptr);
  const auto ds = bundled("driving");
  std::vector<Statement> anti;
  const auto& vars = ds.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    for (std::size_t j = 0; j < vars.size(); ++j) {
      if (i == j) continue;
      anti.push_back({prompts::declarative_statement(prompts::query_template(2), vars[i], vars[j]),
                      Polarity::AntiCausal, 0, 2});
    }
  }
  const auto g = knn_graph(ds, 2, build_store(anti, gw), gw);
  CHECK(g.predictions.size() == 6);
  CHECK(g.graph.edge_count() == 0);
}
