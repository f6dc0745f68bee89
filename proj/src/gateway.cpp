#include <cstdlib>
#include <ctime>

#include "causeprobe/gateway.hpp"

namespace causeprobe::gateway {

namespace {

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Gateway::Gateway(ProviderConfig cfg, std::shared_ptr<ExchangeCache> cache,
                 std::shared_ptr<Clock> clock, std::unique_ptr<Backend> backend)
    : cfg_(std::move(cfg)),
      cache_(cache ? std::move(cache) : std::make_shared<ExchangeCache>()),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()),
      backend_(backend ? std::move(backend) : make_backend(cfg_)),
      limiter_(cfg_.requests_per_minute, cfg_.throttle, clock_) {}

std::string Gateway::api_key() const {
  if (!cfg_.remote()) return {};
  const std::string var =
      cfg_.api_key_env.empty() ? default_api_key_env(cfg_.name) : cfg_.api_key_env;
  const char* value = std::getenv(var.c_str());
  if (!value || !*value) {
    throw TransportError("provider '" + cfg_.name + "' needs a credential in $" + var);
  }
  return value;
}

template <typename T>
T Gateway::with_retries(const std::function<T()>& attempt) {
  for (int k = 0;; ++k) {
    limiter_.acquire();
    ++network_calls_;
    try {
      return attempt();
    } catch (const RetryableError& e) {
      if (k >= cfg_.max_retries) {
        throw TransportError(std::string(e.what()) + " (gave up after " + std::to_string(k + 1) +
                             " attempts)");
      }
      clock_->sleep_for(e.retry_after().value_or(cfg_.initial_backoff * (1LL << std::min(k, 20))));
    }
  }
}

CachedExchange Gateway::fetch(const std::string& key, const std::string& kind,
                              const std::string& prompt) {
  std::promise<CachedExchange> promise;
  {
    std::unique_lock lock(inflight_mu_);
    if (auto hit = cache_->find(key)) return *hit;
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      auto pending = it->second;
      lock.unlock();
      return pending.get();
    }
    inflight_.emplace(key, promise.get_future().share());
  }
  auto finish = [&] {
    std::lock_guard lock(inflight_mu_);
    inflight_.erase(key);
  };
  try {
    const std::string credential = api_key();
    CachedExchange rec;
    rec.key = key;
    rec.kind = kind;
    rec.provider = cfg_.name;
    rec.prompt = prompt;
    if (kind == "embedding") {
      rec.model = cfg_.embedding_model_id();
      rec.vector = with_retries<std::vector<double>>(
          [&] { return backend_->embed(prompt, cfg_, credential); });
      if (rec.vector.empty()) {
        throw TransportError("provider '" + cfg_.name + "' returned an empty vector");
      }
      normalized(rec.vector);  // rejects zero vectors before they reach the cache
    } else {
      rec.model = cfg_.model;
      auto c = with_retries<Completion>([&] { return backend_->complete(prompt, cfg_, credential); });
      rec.response = std::move(c.text);
      rec.usage = std::move(c.usage);
    }
    rec.timestamp = utc_timestamp();
    cache_->append(rec);
    promise.set_value(rec);
    finish();
    return rec;
  } catch (...) {
    promise.set_exception(std::current_exception());
    finish();
    throw;
  }
}

std::string Gateway::complete(const std::string& prompt) {
  return fetch(completion_cache_key(cfg_, prompt), "completion", prompt).response;
}

std::vector<double> Gateway::embed(const std::string& text) {
  if (text.empty()) throw InputError("cannot embed empty text");
  return normalized(fetch(embedding_cache_key(cfg_, text), "embedding", text).vector);
}

}  // namespace causeprobe::gateway
