#include <ctime>
#include <fstream>
#include <sstream>

#include "causeprobe/digest.hpp"
#include "causeprobe/gateway.hpp"

namespace causeprobe::gateway {

using nlohmann::json;

namespace {

std::string key_of(const json& fields) { return sha256_hex(fields.dump()); }

json decoding_json(const DecodingParams& d) {
  return {{"temperature", d.temperature}, {"max_tokens", d.max_tokens}, {"stop", d.stop}};
}

}  // namespace

std::string completion_cache_key(const ProviderConfig& cfg, std::string_view prompt) {
  return key_of({{"kind", "completion"},
                 {"provider", cfg.name},
                 {"model", cfg.model},
                 {"params", decoding_json(cfg.decoding)},
                 {"prompt", prompt}});
}

std::string embedding_cache_key(const ProviderConfig& cfg, std::string_view text) {
  return key_of({{"kind", "embedding"},
                 {"provider", cfg.name},
                 {"model", cfg.embedding_model_id()},
                 {"params", nullptr},
                 {"prompt", text}});
}

json exchange_to_json(const CachedExchange& r) {
  json j = {{"key", r.key},
            {"kind", r.kind},
            {"provider", r.provider},
            {"model", r.model},
            {"prompt", r.prompt},
            {"timestamp", r.timestamp},
            {"usage", r.usage}};
  if (r.kind == "embedding") {
    j["vector"] = r.vector;
  } else {
    j["response"] = r.response;
  }
  return j;
}

CachedExchange exchange_from_json(const json& j) {
  CachedExchange r;
  r.key = j.at("key").get<std::string>();
  r.kind = j.at("kind").get<std::string>();
  r.provider = j.at("provider").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.timestamp = j.value("timestamp", "");
  r.usage = j.value("usage", json());
  if (r.kind == "embedding") {
    r.vector = j.at("vector").get<std::vector<double>>();
    if (r.vector.empty()) throw CorruptionError("embedding record with an empty vector");
  } else if (r.kind == "completion") {
    r.response = j.at("response").get<std::string>();
  } else {
    throw CorruptionError("unknown record kind \"" + r.kind + "\"");
  }
  return r;
}

ExchangeCache::ExchangeCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::string data;
  {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw IoError("cannot read cache " + path_.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    data = buf.str();
  }
  std::size_t pos = 0, line_no = 0;
  while (pos < data.size()) {
    ++line_no;
    const std::size_t nl = data.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string line = data.substr(pos, complete ? nl - pos : std::string::npos);
    const std::size_t next = complete ? nl + 1 : data.size();
    if (line.empty()) {
      pos = next;
      continue;
    }
    try {
      auto rec = exchange_from_json(json::parse(line));
      if (rec.kind == "embedding") {
        const auto id = std::make_pair(rec.provider, rec.model);
        auto [it, fresh] = dimensions_.emplace(id, rec.vector.size());
        if (!fresh && it->second != rec.vector.size()) {
          throw CorruptionError("embedding dimension " + std::to_string(rec.vector.size()) +
                                " differs from " + std::to_string(it->second) + " for model " +
                                rec.model);
        }
      }
      records_.emplace(rec.key, std::move(rec));
    } catch (const std::exception& e) {
      if (complete) {
        throw CorruptionError(path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      // Torn final append.
      truncated_bytes_ = data.size() - pos;
      std::filesystem::resize_file(path_, pos);
      return;
    }
    if (!complete) {
      // Intact record missing its newline: terminate it so appends stay line-aligned.
      std::ofstream out(path_, std::ios::binary | std::ios::app);
      out << '\n';
    }
    pos = next;
  }
}

std::optional<CachedExchange> ExchangeCache::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::size_t ExchangeCache::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

void ExchangeCache::append(const CachedExchange& record) {
  std::lock_guard lock(mu_);
  if (records_.count(record.key)) return;
  if (record.kind == "embedding") {
    const auto id = std::make_pair(record.provider, record.model);
    auto it = dimensions_.find(id);
    if (it != dimensions_.end() && it->second != record.vector.size()) {
      throw CorruptionError("embedding dimension " + std::to_string(record.vector.size()) +
                            " differs from the cached dimension " + std::to_string(it->second) +
                            " for model " + record.model);
    }
    dimensions_.emplace(id, record.vector.size());
  }
  if (!path_.empty()) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << exchange_to_json(record).dump() << '\n';
    out.flush();
    if (!out) throw IoError("cannot append to cache " + path_.string());
  }
  records_.emplace(record.key, record);
}

}  // namespace causeprobe::gateway
