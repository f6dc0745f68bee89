#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "causeprobe/error.hpp"

// Access to completion and embedding endpoints: deterministic decoding, a
// durable exchange cache, retries with backoff, a sliding-window rate limit,
// and an in-process scripted mock.
namespace causeprobe::gateway {

enum class Endpoint { Chat, Completions };
enum class ThrottleMode { Wait, Fail };

struct DecodingParams {
  double temperature = 0.0;
  int max_tokens = 256;
  std::vector<std::string> stop;
};

struct MockRule {
  std::string pattern;  // exact text, or a glob with '*' when glob is set
  std::string answer;
  bool glob = false;
};

enum class MockEmbedding { Hash, Ngram };

struct MockScript {
  std::vector<MockRule> rules;
  bool strict = true;
  std::string sentinel = "[unscripted]";
  MockEmbedding embedding = MockEmbedding::Ngram;
  std::size_t dimension = 64;
  std::uint64_t seed = 0;
  std::map<std::string, std::vector<double>> vectors;  // exact text overrides
};

struct ProviderConfig {
  std::string name;
  std::string kind = "openai";  // "openai" | "mock"
  std::string base_url;
  std::string model;
  std::string embedding_model;  // defaults to model
  Endpoint endpoint = Endpoint::Chat;
  std::string api_key_env;      // defaults to PROVIDER_<NAME>_API_KEY
  DecodingParams decoding;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{1000};
  int requests_per_minute = 60;
  ThrottleMode throttle = ThrottleMode::Wait;
  std::optional<MockScript> mock;

  bool remote() const { return kind != "mock"; }
  const std::string& embedding_model_id() const {
    return embedding_model.empty() ? model : embedding_model;
  }
};

// "PROVIDER_" + name uppercased with non-alphanumerics mapped to '_' + "_API_KEY".
std::string default_api_key_env(std::string_view provider_name);

// Provider file (JSON); see docs/providers.md. ConfigError on invalid
// settings, including conflicting mock rules.
ProviderConfig parse_provider_config(std::string_view text, const std::string& source);
ProviderConfig load_provider_config(const std::filesystem::path& path);
nlohmann::json provider_to_json(const ProviderConfig& cfg);

// Builds an in-process provider from a script; validates rule conflicts.
ProviderConfig mock_provider(std::string name, MockScript script, std::string model = "mock-1");

// Whether some string matches both '*'-globs.
bool globs_overlap(std::string_view a, std::string_view b);
bool glob_match(std::string_view pattern, std::string_view text);

// ---------------------------------------------------------------------------
// Time

class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() override { return std::chrono::steady_clock::now(); }
  void sleep_for(std::chrono::milliseconds d) override;
};

// Time advances only through sleep_for/advance.
class VirtualClock final : public Clock {
 public:
  time_point now() override;
  void sleep_for(std::chrono::milliseconds d) override { advance(d); }
  void advance(std::chrono::milliseconds d);
  std::chrono::milliseconds total_slept() const;

 private:
  mutable std::mutex mu_;
  std::chrono::milliseconds elapsed_{0};
};

// At most `budget` acquisitions in any window of 60 seconds.
class RateLimiter {
 public:
  RateLimiter(int requests_per_minute, ThrottleMode mode, std::shared_ptr<Clock> clock);
  // Blocks (Wait) or throws ThrottledError (Fail) when the budget is spent.
  void acquire();
  const std::vector<Clock::time_point>& history() const { return history_; }

 private:
  int budget_;
  ThrottleMode mode_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::deque<Clock::time_point> window_;
  std::vector<Clock::time_point> history_;
};

// ---------------------------------------------------------------------------
// Cache

struct CachedExchange {
  std::string key;
  std::string kind;  // "completion" | "embedding"
  std::string provider;
  std::string model;
  std::string prompt;
  std::string response;        // completions
  std::vector<double> vector;  // embeddings, as returned by the provider
  std::string timestamp;
  nlohmann::json usage;        // null when not reported
};

std::string completion_cache_key(const ProviderConfig& cfg, std::string_view prompt);
std::string embedding_cache_key(const ProviderConfig& cfg, std::string_view text);

// Append-only JSON-lines file. A torn final record (crash during append) is
// cut off on open; any other unreadable line is a CorruptionError.
class ExchangeCache {
 public:
  // Empty path: memory only.
  explicit ExchangeCache(std::filesystem::path path = {});

  std::optional<CachedExchange> find(const std::string& key) const;
  void append(const CachedExchange& record);
  std::size_t size() const;
  // Bytes dropped from a torn tail when the file was opened.
  std::size_t truncated_bytes() const { return truncated_bytes_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, CachedExchange> records_;
  std::map<std::pair<std::string, std::string>, std::size_t> dimensions_;
  std::size_t truncated_bytes_ = 0;
};

nlohmann::json exchange_to_json(const CachedExchange& record);
CachedExchange exchange_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Backends

// Transient failure (HTTP 429/5xx, connection loss); the gateway retries.
class RetryableError : public TransportError {
 public:
  RetryableError(const std::string& message, std::optional<std::chrono::milliseconds> retry_after)
      : TransportError(message), retry_after_(retry_after) {}
  std::optional<std::chrono::milliseconds> retry_after() const { return retry_after_; }

 private:
  std::optional<std::chrono::milliseconds> retry_after_;
};

struct Completion {
  std::string text;
  nlohmann::json usage;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const std::string& prompt, const ProviderConfig& cfg,
                              const std::string& api_key) = 0;
  virtual std::vector<double> embed(const std::string& text, const ProviderConfig& cfg,
                                    const std::string& api_key) = 0;
};

struct HttpResponse {
  int status = 0;  // 0: no response (connection error, timeout)
  std::string body;
  std::optional<std::string> retry_after;
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<HttpTransport> make_http_transport();

// OpenAI-compatible REST shape: POST {base}/chat/completions,
// {base}/completions and {base}/embeddings.
std::unique_ptr<Backend> make_openai_backend(std::shared_ptr<HttpTransport> transport);
std::unique_ptr<Backend> make_mock_backend(const MockScript& script);
std::unique_ptr<Backend> make_backend(const ProviderConfig& cfg);

// Parses a Retry-After header given in seconds.
std::optional<std::chrono::milliseconds> parse_retry_after(std::string_view value);

// First `max_tokens` whitespace-separated words of `text`, original spacing kept.
std::string truncate_words(std::string_view text, int max_tokens);

// ---------------------------------------------------------------------------

class Gateway {
 public:
  Gateway(ProviderConfig cfg, std::shared_ptr<ExchangeCache> cache,
          std::shared_ptr<Clock> clock = nullptr, std::unique_ptr<Backend> backend = nullptr);

  // Cached text, or a fresh request stored before returning.
  std::string complete(const std::string& prompt);
  // Unit-norm vector; InputError on empty text.
  std::vector<double> embed(const std::string& text);

  // Backend invocations, including retried attempts.
  std::size_t network_calls() const { return network_calls_.load(); }
  const ProviderConfig& config() const { return cfg_; }
  ExchangeCache& cache() { return *cache_; }

 private:
  template <typename T>
  T with_retries(const std::function<T()>& attempt);
  std::string api_key() const;
  CachedExchange fetch(const std::string& key, const std::string& kind, const std::string& prompt);

  ProviderConfig cfg_;
  std::shared_ptr<ExchangeCache> cache_;
  std::shared_ptr<Clock> clock_;
  std::unique_ptr<Backend> backend_;
  RateLimiter limiter_;
  std::atomic<std::size_t> network_calls_{0};
  std::mutex inflight_mu_;
  std::map<std::string, std::shared_future<CachedExchange>> inflight_;
};

std::vector<double> normalized(const std::vector<double>& v);

}  // namespace causeprobe::gateway
