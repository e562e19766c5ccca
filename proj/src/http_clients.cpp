#include "citeidx/http_clients.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace citeidx {

using nlohmann::json;

HttpConfig HttpConfig::from_env() { return from_env(HttpConfig{}); }

HttpConfig HttpConfig::from_env(HttpConfig base) {
  if (const char* v = std::getenv("CITEIDX_API_BASE"); v && *v) base.base_url = v;
  if (const char* v = std::getenv("CITEIDX_API_KEY"); v && *v) base.api_key = v;
  if (const char* v = std::getenv("CITEIDX_MODEL"); v && *v) base.model = v;
  return base;
}

namespace {

// One POST attempt; maps HTTP outcomes onto the client error taxonomy.
json post_json(const HttpConfig& cfg, const std::string& path, const json& body) {
  httplib::Client cli(cfg.base_url);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout).count(), 0);
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout).count(), 0);
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);
  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) throw TransientError("transport error: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransientError("HTTP " + std::to_string(res->status) + " from " + path);
  if (res->status != 200)
    throw ClientError(ClientError::Kind::bad_response, "HTTP " + std::to_string(res->status) + " from " + path);
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw ClientError(ClientError::Kind::bad_response, std::string("malformed JSON response: ") + e.what());
  }
}

// Retry loop shared by the scorer and embedder, which have no separate complete_once.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  std::string last;
  for (int attempt = 0; attempt < std::max(1, policy.max_attempts); ++attempt) {
    try {
      return fn();
    } catch (const TransientError& e) {
      last = e.what();
      if (attempt + 1 < policy.max_attempts) std::this_thread::sleep_for(policy.delay_for(attempt));
    }
  }
  throw ClientError(ClientError::Kind::exhausted, "retries exhausted: " + last);
}

}  // namespace

std::string HttpGenerator::complete_once(std::string_view prompt) const {
  json body = {{"model", config_.model},
               {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
               {"temperature", config_.temperature}};
  json res = post_json(config_, "/v1/chat/completions", body);
  try {
    return res.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ClientError(ClientError::Kind::bad_response, std::string("unexpected chat response shape: ") + e.what());
  }
}

std::string HttpGenerator::describe() const { return "http(" + config_.base_url + ", " + config_.model + ")"; }

HttpScorer::HttpScorer(HttpConfig config) : config_(std::move(config)) {
  if (!config_.supports_logprobs)
    throw ClientError(ClientError::Kind::capability, "endpoint is not configured with logprob support");
}

double HttpScorer::score(std::string_view context, std::string_view continuation) const {
  return with_retry(config_.retry, [&] {
    json body = {{"model", config_.model},
                 {"prompt", std::string(context) + std::string(continuation)},
                 {"max_tokens", 0},
                 {"echo", true},
                 {"logprobs", 0}};
    json res = post_json(config_, "/v1/completions", body);
    try {
      const auto& lp = res.at("choices").at(0).at("logprobs");
      const auto& values = lp.at("token_logprobs");
      const auto& offsets = lp.at("text_offset");
      double total = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (offsets.at(i).get<std::size_t>() < context.size() || values[i].is_null()) continue;
        total += values[i].get<double>();
      }
      return total;
    } catch (const json::exception& e) {
      throw ClientError(ClientError::Kind::bad_response, std::string("unexpected logprob response shape: ") + e.what());
    }
  });
}

Embedding HttpEmbedder::embed(std::string_view text) const {
  return with_retry(config_.retry, [&] {
    json res = post_json(config_, "/v1/embeddings", {{"model", config_.model}, {"input", std::string(text)}});
    Embedding v;
    try {
      v = res.at("data").at(0).at("embedding").get<Embedding>();
    } catch (const json::exception& e) {
      throw ClientError(ClientError::Kind::bad_response, std::string("unexpected embedding response shape: ") + e.what());
    }
    if (v.size() != dim_) throw ClientError(ClientError::Kind::bad_response, "embedding dimension mismatch");
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n > 0)
      for (auto& x : v) x /= n;
    return v;
  });
}

}  // namespace citeidx
