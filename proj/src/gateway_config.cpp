#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "causeprobe/gateway.hpp"

namespace causeprobe::gateway {

using nlohmann::json;

std::string default_api_key_env(std::string_view provider_name) {
  std::string out = "PROVIDER_";
  for (char c : provider_name) {
    const auto u = static_cast<unsigned char>(c);
    out += std::isalnum(u) ? static_cast<char>(std::toupper(u)) : '_';
  }
  return out + "_API_KEY";
}

bool glob_match(std::string_view pattern, std::string_view text) {
  // Greedy star matching with backtracking to the last star.
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

bool globs_overlap(std::string_view a, std::string_view b) {
  const std::size_t na = a.size(), nb = b.size();
  // ok[i][j]: some string matches both suffixes a[i..] and b[j..].
  std::vector<std::vector<char>> ok(na + 1, std::vector<char>(nb + 1, 0));
  for (std::size_t i = na + 1; i-- > 0;) {
    for (std::size_t j = nb + 1; j-- > 0;) {
      bool v;
      if (i == na && j == nb) {
        v = true;
      } else if (i < na && a[i] == '*') {
        v = ok[i + 1][j] || (j < nb && ok[i][j + 1]);
      } else if (j < nb && b[j] == '*') {
        v = ok[i][j + 1] || (i < na && ok[i + 1][j]);
      } else if (i < na && j < nb) {
        v = a[i] == b[j] && ok[i + 1][j + 1];
      } else {
        v = false;
      }
      ok[i][j] = v;
    }
  }
  return ok[0][0];
}

namespace {

void validate_script(const std::string& provider, const MockScript& script) {
  std::map<std::string, std::string> exact;
  std::vector<const MockRule*> globs;
  for (const auto& rule : script.rules) {
    if (!rule.glob) {
      auto [it, inserted] = exact.emplace(rule.pattern, rule.answer);
      if (!inserted && it->second != rule.answer) {
        throw ConfigError("mock provider '" + provider + "': conflicting answers for prompt \"" +
                          rule.pattern + "\"");
      }
      continue;
    }
    for (const MockRule* other : globs) {
      if (globs_overlap(other->pattern, rule.pattern)) {
        throw ConfigError("mock provider '" + provider + "': patterns \"" + other->pattern +
                          "\" and \"" + rule.pattern + "\" overlap");
      }
    }
    globs.push_back(&rule);
  }
  if (script.dimension == 0) {
    throw ConfigError("mock provider '" + provider + "': embedding dimension must be positive");
  }
  for (const auto& [text, v] : script.vectors) {
    if (v.size() != script.dimension) {
      throw ConfigError("mock provider '" + provider + "': vector for \"" + text + "\" has " +
                        std::to_string(v.size()) + " components, expected " +
                        std::to_string(script.dimension));
    }
  }
}

void validate(const ProviderConfig& cfg) {
  if (cfg.name.empty()) throw ConfigError("provider name is empty");
  const std::string who = "provider '" + cfg.name + "': ";
  if (cfg.kind != "mock" && cfg.kind != "openai") {
    throw ConfigError(who + "unknown kind \"" + cfg.kind + "\" (expected mock or openai)");
  }
  if (cfg.model.empty()) throw ConfigError(who + "model is empty");
  if (cfg.requests_per_minute <= 0) throw ConfigError(who + "requests_per_minute must be positive");
  if (cfg.decoding.temperature < 0.0) throw ConfigError(who + "temperature must be >= 0");
  if (cfg.decoding.max_tokens <= 0) throw ConfigError(who + "max_tokens must be positive");
  if (cfg.max_retries < 0) throw ConfigError(who + "max_retries must be >= 0");
  if (cfg.timeout.count() <= 0) throw ConfigError(who + "timeout must be positive");
  if (cfg.initial_backoff.count() < 0) throw ConfigError(who + "initial backoff must be >= 0");
  if (cfg.kind == "openai" && cfg.base_url.find("://") == std::string::npos) {
    throw ConfigError(who + "base_url must start with http:// or https://");
  }
  if (cfg.kind == "mock") {
    if (!cfg.mock) throw ConfigError(who + "mock provider without a script");
    validate_script(cfg.name, *cfg.mock);
  }
}

MockScript parse_script(const json& j) {
  MockScript s;
  s.strict = j.value("strict", true);
  s.sentinel = j.value("sentinel", s.sentinel);
  for (const auto& r : j.value("rules", json::array())) {
    MockRule rule;
    if (r.contains("prompt") == r.contains("pattern")) {
      throw ConfigError("mock rule needs exactly one of \"prompt\" or \"pattern\"");
    }
    rule.glob = r.contains("pattern");
    rule.pattern = r.at(rule.glob ? "pattern" : "prompt").get<std::string>();
    rule.answer = r.at("answer").get<std::string>();
    s.rules.push_back(std::move(rule));
  }
  if (j.contains("embedding")) {
    const auto& e = j.at("embedding");
    const auto mode = e.value("mode", std::string("ngram"));
    if (mode == "ngram") {
      s.embedding = MockEmbedding::Ngram;
    } else if (mode == "hash") {
      s.embedding = MockEmbedding::Hash;
    } else {
      throw ConfigError("unknown mock embedding mode \"" + mode + "\"");
    }
    s.dimension = e.value("dimension", s.dimension);
    s.seed = e.value("seed", s.seed);
    for (const auto& [text, v] : e.value("vectors", json::object()).items()) {
      s.vectors[text] = v.get<std::vector<double>>();
    }
  }
  return s;
}

json script_to_json(const MockScript& s) {
  json rules = json::array();
  for (const auto& r : s.rules) {
    rules.push_back({{r.glob ? "pattern" : "prompt", r.pattern}, {"answer", r.answer}});
  }
  json vectors = json::object();
  for (const auto& [text, v] : s.vectors) vectors[text] = v;
  return {{"strict", s.strict},
          {"sentinel", s.sentinel},
          {"rules", rules},
          {"embedding",
           {{"mode", s.embedding == MockEmbedding::Ngram ? "ngram" : "hash"},
            {"dimension", s.dimension},
            {"seed", s.seed},
            {"vectors", vectors}}}};
}

}  // namespace

ProviderConfig parse_provider_config(std::string_view text, const std::string& source) {
  ProviderConfig cfg;
  try {
    const json j = json::parse(text);
    cfg.name = j.at("name").get<std::string>();
    cfg.kind = j.value("kind", cfg.kind);
    cfg.base_url = j.value("base_url", "");
    cfg.model = j.at("model").get<std::string>();
    cfg.embedding_model = j.value("embedding_model", "");
    const auto endpoint = j.value("endpoint", std::string("chat"));
    if (endpoint == "chat") {
      cfg.endpoint = Endpoint::Chat;
    } else if (endpoint == "completions") {
      cfg.endpoint = Endpoint::Completions;
    } else {
      throw ConfigError(source + ": unknown endpoint \"" + endpoint + "\"");
    }
    cfg.api_key_env = j.value("api_key_env", default_api_key_env(cfg.name));
    if (j.contains("decoding")) {
      const auto& d = j.at("decoding");
      cfg.decoding.temperature = d.value("temperature", 0.0);
      cfg.decoding.max_tokens = d.value("max_tokens", 256);
      cfg.decoding.stop = d.value("stop", std::vector<std::string>{});
    }
    cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", 1000));
    cfg.requests_per_minute = j.value("requests_per_minute", cfg.requests_per_minute);
    const auto throttle = j.value("throttle", std::string("wait"));
    if (throttle == "wait") {
      cfg.throttle = ThrottleMode::Wait;
    } else if (throttle == "fail") {
      cfg.throttle = ThrottleMode::Fail;
    } else {
      throw ConfigError(source + ": unknown throttle mode \"" + throttle + "\"");
    }
    if (j.contains("mock")) cfg.mock = parse_script(j.at("mock"));
  } catch (const json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ProviderConfig load_provider_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read provider config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_provider_config(buf.str(), path.string());
}

json provider_to_json(const ProviderConfig& cfg) {
  json j = {{"name", cfg.name},
            {"kind", cfg.kind},
            {"base_url", cfg.base_url},
            {"model", cfg.model},
            {"embedding_model", cfg.embedding_model},
            {"endpoint", cfg.endpoint == Endpoint::Chat ? "chat" : "completions"},
            {"api_key_env", cfg.api_key_env},
            {"decoding",
             {{"temperature", cfg.decoding.temperature},
              {"max_tokens", cfg.decoding.max_tokens},
              {"stop", cfg.decoding.stop}}},
            {"timeout_ms", cfg.timeout.count()},
            {"max_retries", cfg.max_retries},
            {"initial_backoff_ms", cfg.initial_backoff.count()},
            {"requests_per_minute", cfg.requests_per_minute},
            {"throttle", cfg.throttle == ThrottleMode::Wait ? "wait" : "fail"}};
  if (cfg.mock) j["mock"] = script_to_json(*cfg.mock);
  return j;
}

ProviderConfig mock_provider(std::string name, MockScript script, std::string model) {
  ProviderConfig cfg;
  cfg.name = std::move(name);
  cfg.kind = "mock";
  cfg.model = std::move(model);
  cfg.api_key_env = default_api_key_env(cfg.name);
  cfg.requests_per_minute = 1000000;
  cfg.initial_backoff = std::chrono::milliseconds(0);
  cfg.mock = std::move(script);
  validate(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------

void SystemClock::sleep_for(std::chrono::milliseconds d) {
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

Clock::time_point VirtualClock::now() {
  std::lock_guard lock(mu_);
  return time_point{} + elapsed_;
}

void VirtualClock::advance(std::chrono::milliseconds d) {
  std::lock_guard lock(mu_);
  if (d.count() > 0) elapsed_ += d;
}

std::chrono::milliseconds VirtualClock::total_slept() const {
  std::lock_guard lock(mu_);
  return elapsed_;
}

RateLimiter::RateLimiter(int requests_per_minute, ThrottleMode mode, std::shared_ptr<Clock> clock)
    : budget_(requests_per_minute), mode_(mode), clock_(std::move(clock)) {
  if (budget_ <= 0) throw ConfigError("requests_per_minute must be positive");
}

void RateLimiter::acquire() {
  using namespace std::chrono;
  constexpr auto kWindow = seconds(60);
  std::lock_guard lock(mu_);
  for (;;) {
    const auto now = clock_->now();
    while (!window_.empty() && now - window_.front() >= kWindow) window_.pop_front();
    if (window_.size() < static_cast<std::size_t>(budget_)) {
      window_.push_back(now);
      history_.push_back(now);
      return;
    }
    const auto wait = ceil<milliseconds>(window_.front() + kWindow - now);
    if (mode_ == ThrottleMode::Fail) {
      throw ThrottledError("request budget of " + std::to_string(budget_) +
                               " per minute exhausted; retry after " +
                               std::to_string(wait.count()) + " ms",
                           wait);
    }
    clock_->sleep_for(wait);
  }
}

}  // namespace causeprobe::gateway
