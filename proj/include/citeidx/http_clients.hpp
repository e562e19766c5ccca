#pragma once

#include <chrono>
#include <string>

#include "citeidx/model_io.hpp"

namespace citeidx {

/// Connection settings for OpenAI-compatible HTTP endpoints.
///
/// Environment overrides (applied by `from_env`):
///   CITEIDX_API_BASE   e.g. http://localhost:8000 or https://api.example.com
///   CITEIDX_API_KEY    sent as "Authorization: Bearer <key>" when non-empty
///   CITEIDX_MODEL      model name placed in every request body
struct HttpConfig {
  std::string base_url = "http://localhost:8000";
  std::string api_key;
  std::string model = "default";
  double temperature = 0.0;
  std::chrono::seconds timeout{120};
  RetryPolicy retry;
  /// The completions endpoint must return prompt-token logprobs with echo=true.
  bool supports_logprobs = false;

  static HttpConfig from_env();
  static HttpConfig from_env(HttpConfig base);
};

/// POST {base}/v1/chat/completions
///   request:  {"model": M, "messages": [{"role": "user", "content": P}], "temperature": T}
///   response: {"choices": [{"message": {"content": C}}]}
/// 429, 5xx and connection failures are transient; other statuses are fatal.
class HttpGenerator final : public GeneratorClient {
 public:
  explicit HttpGenerator(HttpConfig config) : config_(std::move(config)) {}
  std::string complete_once(std::string_view prompt) const override;
  RetryPolicy retry_policy() const override { return config_.retry; }
  std::string describe() const override;

 private:
  HttpConfig config_;
};

/// POST {base}/v1/completions
///   request:  {"model": M, "prompt": context + continuation, "max_tokens": 0, "echo": true, "logprobs": 0}
///   response: {"choices": [{"logprobs": {"token_logprobs": [...], "text_offset": [...]}}]}
/// Sums token_logprobs for tokens whose text_offset >= len(context).
/// Construction throws ClientError{capability} unless supports_logprobs is set.
class HttpScorer final : public ScorerClient {
 public:
  explicit HttpScorer(HttpConfig config);
  double score(std::string_view context, std::string_view continuation) const override;

 private:
  HttpConfig config_;
};

/// POST {base}/v1/embeddings
///   request:  {"model": M, "input": TEXT}
///   response: {"data": [{"embedding": [...]}]}
class HttpEmbedder final : public EmbedderClient {
 public:
  HttpEmbedder(HttpConfig config, std::size_t dim) : config_(std::move(config)), dim_(dim) {}
  std::size_t dimension() const override { return dim_; }
  Embedding embed(std::string_view text) const override;

 private:
  HttpConfig config_;
  std::size_t dim_;
};

}  // namespace citeidx
