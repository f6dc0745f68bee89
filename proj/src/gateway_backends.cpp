#include <httplib.h>

#include <cctype>
#include <cmath>
#include <cstring>

#include "causeprobe/digest.hpp"
#include "causeprobe/gateway.hpp"
#include "causeprobe/rng.hpp"

namespace causeprobe::gateway {

using nlohmann::json;

std::string truncate_words(std::string_view text, int max_tokens) {
  std::size_t i = 0, end_of_word = 0;
  int words = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    if (words == max_tokens) return std::string(text.substr(0, end_of_word));
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    end_of_word = i;
    ++words;
  }
  return std::string(text);
}

std::optional<std::chrono::milliseconds> parse_retry_after(std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const double seconds = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || !std::isfinite(seconds) || seconds < 0) return std::nullopt;
  while (*end && std::isspace(static_cast<unsigned char>(*end))) ++end;
  if (*end) return std::nullopt;
  return std::chrono::milliseconds(static_cast<long long>(std::ceil(seconds * 1000.0)));
}

std::vector<double> normalized(const std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InputError("cannot normalize a zero vector");
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = v[k] / norm;
  return out;
}

namespace {

std::uint64_t digest_u64(std::string_view text) {
  const auto d = sha256(text);
  std::uint64_t x = 0;
  for (int k = 0; k < 8; ++k) x = (x << 8) | d[k];
  return x;
}

std::string cut_at_stop(std::string text, const std::vector<std::string>& stop) {
  std::size_t cut = text.size();
  for (const auto& s : stop) {
    if (s.empty()) continue;
    cut = std::min(cut, text.find(s));
  }
  text.resize(cut);
  return text;
}

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockScript script) : script_(std::move(script)) {}

  Completion complete(const std::string& prompt, const ProviderConfig& cfg,
                      const std::string&) override {
    const std::string* answer = nullptr;
    for (const auto& r : script_.rules) {
      if (!r.glob && r.pattern == prompt) {
        answer = &r.answer;
        break;
      }
    }
    if (!answer) {
      for (const auto& r : script_.rules) {
        if (r.glob && glob_match(r.pattern, prompt)) {
          answer = &r.answer;
          break;
        }
      }
    }
    if (!answer) {
      if (script_.strict) {
        throw ConfigError("mock provider '" + cfg.name + "' has no rule for prompt: \"" + prompt +
                          "\"");
      }
      answer = &script_.sentinel;
    }
    return {truncate_words(cut_at_stop(*answer, cfg.decoding.stop), cfg.decoding.max_tokens),
            json()};
  }

  std::vector<double> embed(const std::string& text, const ProviderConfig&,
                            const std::string&) override {
    if (auto it = script_.vectors.find(text); it != script_.vectors.end()) return it->second;
    const std::size_t dim = script_.dimension;
    std::vector<double> v(dim, 0.0);
    const std::string salt = std::to_string(script_.seed) + "|";
    if (script_.embedding == MockEmbedding::Hash) {
      SeededRng rng(digest_u64(salt + text));
      for (auto& x : v) x = 2.0 * rng.unit() - 1.0;
      return v;
    }
    // Signed feature hashing of word unigrams and bigrams.
    auto words = words_of(text);
    if (words.empty()) words.push_back(text);
    auto add = [&](const std::string& feature, double weight) {
      const std::uint64_t h = digest_u64(salt + feature);
      v[h % dim] += (h >> 63) ? -weight : weight;
    };
    for (std::size_t k = 0; k < words.size(); ++k) {
      add("u:" + words[k], 1.0);
      if (k + 1 < words.size()) add("b:" + words[k] + " " + words[k + 1], 1.0);
    }
    bool zero = true;
    for (double x : v) zero = zero && x == 0.0;
    if (zero) v[digest_u64(salt + text) % dim] = 1.0;
    return v;
  }

 private:
  MockScript script_;
};

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("not an absolute URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const std::string& url, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers,
                    std::chrono::milliseconds timeout) override {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    HttpResponse out;
    auto res = client.Post(parts.path, h, body, "application/json");
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    if (res->has_header("Retry-After")) out.retry_after = res->get_header_value("Retry-After");
    return out;
  }
};

class OpenAiBackend final : public Backend {
 public:
  explicit OpenAiBackend(std::shared_ptr<HttpTransport> transport)
      : transport_(std::move(transport)) {}

  Completion complete(const std::string& prompt, const ProviderConfig& cfg,
                      const std::string& api_key) override {
    json body = {{"model", cfg.model},
                 {"temperature", cfg.decoding.temperature},
                 {"max_tokens", cfg.decoding.max_tokens}};
    if (!cfg.decoding.stop.empty()) body["stop"] = cfg.decoding.stop;
    const bool chat = cfg.endpoint == Endpoint::Chat;
    if (chat) {
      body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
    } else {
      body["prompt"] = prompt;
    }
    const json reply = call(cfg, chat ? "/chat/completions" : "/completions", body, api_key);
    try {
      const auto& choice = reply.at("choices").at(0);
      Completion c;
      c.text = chat ? choice.at("message").at("content").get<std::string>()
                    : choice.at("text").get<std::string>();
      c.usage = reply.value("usage", json());
      return c;
    } catch (const json::exception& e) {
      throw TransportError("unexpected completion response from " + cfg.name + ": " + e.what());
    }
  }

  std::vector<double> embed(const std::string& text, const ProviderConfig& cfg,
                            const std::string& api_key) override {
    const json body = {{"model", cfg.embedding_model_id()}, {"input", text}};
    const json reply = call(cfg, "/embeddings", body, api_key);
    try {
      return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw TransportError("unexpected embedding response from " + cfg.name + ": " + e.what());
    }
  }

 private:
  json call(const ProviderConfig& cfg, const std::string& route, const json& body,
            const std::string& api_key) {
    std::string base = cfg.base_url;
    while (!base.empty() && base.back() == '/') base.pop_back();
    std::vector<std::pair<std::string, std::string>> headers;
    if (!api_key.empty()) headers.emplace_back("Authorization", "Bearer " + api_key);
    const auto res = transport_->post(base + route, body.dump(), headers, cfg.timeout);
    const std::string where = cfg.name + " " + route;
    if (res.status == 0) {
      throw RetryableError(where + ": " + (res.error.empty() ? "no response" : res.error),
                           std::nullopt);
    }
    const auto retry_after =
        res.retry_after ? parse_retry_after(*res.retry_after) : std::nullopt;
    if (res.status == 429 || res.status >= 500) {
      throw RetryableError(where + ": HTTP " + std::to_string(res.status), retry_after);
    }
    if (res.status == 401 || res.status == 403) {
      throw TransportError(where + ": authentication failed (HTTP " +
                           std::to_string(res.status) + ")");
    }
    if (res.status < 200 || res.status >= 300) {
      throw TransportError(where + ": HTTP " + std::to_string(res.status) + ": " +
                           res.body.substr(0, 200));
    }
    try {
      return json::parse(res.body);
    } catch (const json::exception& e) {
      throw TransportError(where + ": malformed JSON response: " + e.what());
    }
  }

  std::shared_ptr<HttpTransport> transport_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport() {
  return std::make_unique<HttplibTransport>();
}

std::unique_ptr<Backend> make_openai_backend(std::shared_ptr<HttpTransport> transport) {
  return std::make_unique<OpenAiBackend>(std::move(transport));
}

std::unique_ptr<Backend> make_mock_backend(const MockScript& script) {
  return std::make_unique<MockBackend>(script);
}

std::unique_ptr<Backend> make_backend(const ProviderConfig& cfg) {
  if (cfg.kind == "mock") {
    if (!cfg.mock) throw ConfigError("mock provider '" + cfg.name + "' has no script");
    return make_mock_backend(*cfg.mock);
  }
  if (cfg.kind == "openai") return make_openai_backend(make_http_transport());
  throw ConfigError("unknown provider kind \"" + cfg.kind + "\"");
}

}  // namespace causeprobe::gateway
