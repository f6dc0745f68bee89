#include "causeprobe/facts.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "causeprobe/digest.hpp"
#include "causeprobe/discovery.hpp"
#include "causeprobe/error.hpp"
#include "causeprobe/io.hpp"
#include "causeprobe/prompts.hpp"

namespace causeprobe::facts {

namespace {

constexpr char kMagic[4] = {'C', 'P', 'V', 'S'};
constexpr std::uint32_t kVersion = 1;

std::string strip_trailing_slash(std::string_view s) {
  while (!s.empty() && s.back() == '/') s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t at = s.find(sep, start);
    out.emplace_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos
                                                                  : at - start));
    if (at == std::string_view::npos) return out;
    start = at + 1;
  }
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { out_ += static_cast<char>(v); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_ += static_cast<char>((v >> (8 * k)) & 0xff);
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out_ += static_cast<char>((v >> (8 * k)) & 0xff);
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  std::string& data() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}
  void need(std::size_t n) {
    if (data_.size() - pos_ < n) {
      throw CorruptionError(source_ + ": truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(static_cast<std::uint8_t>(data_[pos_++])) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(static_cast<std::uint8_t>(data_[pos_++])) << (8 * k);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string source_;
};

}  // namespace

std::optional<std::string> concept_text(std::string_view uri, std::string_view language) {
  const auto parts = split(uri, '/');
  // "", "c", lang, text, ...
  if (parts.size() < 4 || !parts[0].empty() || parts[1] != "c" || parts[2] != language) {
    return std::nullopt;
  }
  std::string text;
  for (char c : parts[3]) text += c == '_' ? ' ' : c;
  text = io::lowercase(io::trim(text));
  if (text.empty()) return std::nullopt;
  return text;
}

IngestResult ingest_knowledge_base_text(std::string_view text, const IngestOptions& options) {
  IngestResult out;
  const std::string wanted = strip_trailing_slash(options.relation);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& raw_line : split(text, '\n')) {
    std::string_view line = raw_line;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    ++out.rows;
    auto cols = split(line, '\t');
    if (cols.size() == 5) cols.erase(cols.begin());
    if (cols.size() != 4 || cols[0].rfind("/r/", 0) != 0) {
      ++out.malformed;
      continue;
    }
    if (strip_trailing_slash(cols[0]) != wanted) continue;
    if (cols[1].rfind("/c/", 0) != 0 || cols[2].rfind("/c/", 0) != 0) {
      ++out.malformed;
      continue;
    }
    const auto cause = concept_text(cols[1], options.language);
    const auto effect = concept_text(cols[2], options.language);
    if (!cause || !effect) {
      // Another language, or a concept URI without text.
      const auto lang_of = [](const std::string& uri) { return split(uri, '/')[2]; };
      if (lang_of(cols[1]) == options.language && lang_of(cols[2]) == options.language) {
        ++out.malformed;
      }
      continue;
    }
    ++out.matched;
    if (*cause == *effect) {
      ++out.self_loops;
      continue;
    }
    if (!seen.emplace(*cause, *effect).second) {
      ++out.duplicates;
      continue;
    }
    CausalFact fact{*cause, *effect, wanted, std::nullopt};
    try {
      const auto meta = nlohmann::json::parse(cols[3]);
      if (meta.is_object() && meta.contains("weight") && meta["weight"].is_number()) {
        fact.weight = meta["weight"].get<double>();
      }
    } catch (const nlohmann::json::exception&) {
    }
    out.facts.push_back(std::move(fact));
  }
  if (out.facts.empty()) {
    out.warnings.push_back("no " + wanted + " relations with both ends in '" + options.language +
                           "' found");
  }
  return out;
}

IngestResult ingest_knowledge_base(const std::filesystem::path& dump, const IngestOptions& options) {
  return ingest_knowledge_base_text(io::read_file(dump), options);
}

std::string_view to_string(Polarity p) { return p == Polarity::Causal ? "causal" : "anti-causal"; }

std::vector<Statement> generate_statements(const std::vector<CausalFact>& facts,
                                           const std::vector<int>& templates) {
  if (facts.empty()) throw InputError("no facts to turn into statements");
  std::vector<Statement> out;
  out.reserve(facts.size() * templates.size() * 2);
  for (std::size_t f = 0; f < facts.size(); ++f) {
    for (int t : templates) {
      const auto& tpl = prompts::query_template(t);
      const auto id = static_cast<std::uint32_t>(f);
      out.push_back({prompts::declarative_statement(tpl, facts[f].cause, facts[f].effect),
                     Polarity::Causal, id, t});
      out.push_back({prompts::declarative_statement(tpl, facts[f].effect, facts[f].cause),
                     Polarity::AntiCausal, id, t});
    }
  }
  return out;
}

std::vector<double> quantize(const std::vector<double>& unit) {
  std::vector<double> q(unit.size());
  for (std::size_t k = 0; k < unit.size(); ++k) q[k] = static_cast<float>(unit[k]);
  return gateway::normalized(q);
}

std::string VectorStore::serialize() const {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(dimension));
  w.u64(records.size());
  w.str(model);
  for (const auto& r : records) {
    if (r.vector.size() != dimension) {
      throw InputError("record '" + r.statement + "' has dimension " +
                       std::to_string(r.vector.size()) + ", store has " +
                       std::to_string(dimension));
    }
    w.u32(r.fact);
    w.u8(static_cast<std::uint8_t>(r.polarity));
    w.u8(r.template_id);
    for (double x : r.vector) w.f32(static_cast<float>(x));
    w.str(r.statement);
  }
  const auto d = sha256(w.data());
  w.bytes(d.data(), d.size());
  return std::move(w.data());
}

VectorStore VectorStore::deserialize(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 32 + 4) throw CorruptionError(source + ": too short for a vector store");
  const auto body = bytes.substr(0, bytes.size() - 32);
  const auto expected = sha256(body);
  if (std::memcmp(expected.data(), bytes.data() + body.size(), 32) != 0) {
    throw CorruptionError(source + ": integrity digest does not match the contents");
  }
  Reader r(body, source);
  if (r.raw(4) != std::string_view(kMagic, 4)) throw CorruptionError(source + ": bad magic");
  const auto version = r.u32();
  if (version != kVersion) {
    throw CorruptionError(source + ": unsupported store version " + std::to_string(version));
  }
  VectorStore s;
  s.dimension = r.u32();
  const auto count = r.u64();
  s.model = r.str();
  for (std::uint64_t k = 0; k < count; ++k) {
    EmbeddingRecord rec;
    rec.fact = r.u32();
    const auto pol = r.u8();
    if (pol > 1) throw CorruptionError(source + ": bad polarity byte in record " + std::to_string(k));
    rec.polarity = static_cast<Polarity>(pol);
    rec.template_id = r.u8();
    std::vector<double> v(s.dimension);
    for (auto& x : v) x = r.f32();
    rec.vector = gateway::normalized(v);
    rec.statement = r.str();
    s.records.push_back(std::move(rec));
  }
  if (r.pos() != body.size()) throw CorruptionError(source + ": trailing bytes after records");
  return s;
}

void VectorStore::save(const std::filesystem::path& path) const { io::write_file(path, serialize()); }

VectorStore VectorStore::load(const std::filesystem::path& path) {
  return deserialize(io::read_file(path), path.string());
}

std::string VectorStore::digest() const {
  const std::string bytes = serialize();
  return to_hex(reinterpret_cast<const std::uint8_t*>(bytes.data()) + bytes.size() - 32, 32);
}

VectorStore build_store(const std::vector<Statement>& statements, gateway::Gateway& gw) {
  if (statements.empty()) throw InputError("no statements to embed");
  VectorStore s;
  s.model = gw.config().embedding_model_id();
  for (const auto& st : statements) {
    auto v = gw.embed(st.text);
    if (s.records.empty()) {
      s.dimension = v.size();
    } else if (v.size() != s.dimension) {
      throw CorruptionError("embedding dimension drifted from " + std::to_string(s.dimension) +
                            " to " + std::to_string(v.size()) + " at \"" + st.text + "\"");
    }
    s.records.push_back({st.fact, static_cast<std::uint8_t>(st.template_id), st.polarity, st.text,
                         quantize(v)});
  }
  return s;
}

Neighbor nearest(const VectorStore& store, const std::vector<double>& query) {
  if (store.records.empty()) throw InputError("the vector store is empty");
  if (query.size() != store.dimension) {
    throw InputError("query dimension " + std::to_string(query.size()) +
                     " does not match the store (" + std::to_string(store.dimension) + ")");
  }
  Neighbor best;
  for (std::size_t k = 0; k < store.records.size(); ++k) {
    const auto& v = store.records[k].vector;
    double sim = 0.0;
    for (std::size_t d = 0; d < query.size(); ++d) sim += query[d] * v[d];
    if (k == 0 || sim > best.similarity) {
      best = {k, sim, false};
    } else if (sim == best.similarity) {
      best.tie = true;
    }
  }
  return best;
}

KnnPrediction knn_predict_edge(const BenchmarkDataset& dataset, std::size_t cause,
                               std::size_t effect, int template_id, const VectorStore& store,
                               gateway::Gateway& gw) {
  const auto& vars = dataset.variables();
  if (cause >= vars.size() || effect >= vars.size() || cause == effect) {
    throw InputError("invalid variable pair for " + dataset.name);
  }
  KnnPrediction p;
  p.cause = cause;
  p.effect = effect;
  p.template_id = template_id;
  p.query = prompts::declarative_statement(prompts::query_template(template_id), vars[cause],
                                           vars[effect]);
  p.neighbor = nearest(store, gw.embed(p.query));
  const auto& rec = store.records[p.neighbor.index];
  p.matched_statement = rec.statement;
  p.matched_polarity = rec.polarity;
  p.present = rec.polarity == Polarity::Causal;
  return p;
}

KnnGraph knn_graph(const BenchmarkDataset& dataset, int template_id, const VectorStore& store,
                   gateway::Gateway& gw) {
  const std::size_t n = dataset.size();
  KnnGraph out{CausalGraph(dataset.variables()), {}};
  std::vector<bool> present(n * n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      out.predictions.push_back(knn_predict_edge(dataset, i, j, template_id, store, gw));
      present[i * n + j] = out.predictions.back().present;
    }
  }
  using verdicts::Answer;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out.graph.set_state(i, j,
                          discovery::merge_pair(present[i * n + j] ? Answer::Yes : Answer::No,
                                                present[j * n + i] ? Answer::Yes : Answer::No));
    }
  }
  return out;
}

}  // namespace causeprobe::facts
