#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace citeidx {

// ---------------------------------------------------------------------------
// Errors

class ClientError : public std::runtime_error {
 public:
  enum class Kind { transport, exhausted, capability, bad_response, contract };
  ClientError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Retryable failure (connection reset, HTTP 429/5xx). Only `generate` and the
/// HTTP clients see this; callers receive ClientError{exhausted} once retries run out.
class TransientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds base_delay{250};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};

  std::chrono::milliseconds delay_for(int attempt) const;
};

// ---------------------------------------------------------------------------
// Generator

class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  /// One attempt. Throws TransientError for retryable failures, ClientError otherwise.
  virtual std::string complete_once(std::string_view prompt) const = 0;
  virtual RetryPolicy retry_policy() const { return {}; }
  virtual std::string describe() const = 0;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Prompt -> completion with exponential backoff on transient failures.
std::string generate(const GeneratorClient& client, std::string_view prompt, const SleepFn& sleep = {});

/// Deterministic offline generator.
///
/// Resolution order: exact table entry, scripted responder, then a seeded
/// synthesizer. The synthesizer recognizes the built-in prompt templates
/// (entity extraction, forward QA, backward pairs, renaming, claim
/// decomposition, routing) and produces parseable, content-derived output;
/// any other prompt gets a hash-derived string.
class MockGenerator final : public GeneratorClient {
 public:
  using Responder = std::function<std::optional<std::string>(std::string_view prompt)>;

  explicit MockGenerator(std::uint64_t seed = 0) : seed_(seed) {}

  MockGenerator& add(std::string prompt, std::string completion);
  MockGenerator& respond_with(Responder responder);
  /// The first `n` calls throw TransientError.
  MockGenerator& fail_first(int n);
  /// Backward-pair synthesis: probability that a citation is replaced by a
  /// placeholder like "document 2".
  MockGenerator& noisy_citation_rate(double p);

  std::string complete_once(std::string_view prompt) const override;
  RetryPolicy retry_policy() const override;
  std::string describe() const override;
  std::uint64_t calls() const { return calls_.load(); }

 private:
  std::string synthesize(std::string_view prompt) const;

  std::uint64_t seed_;
  std::map<std::string, std::string, std::less<>> table_;
  Responder responder_;
  int fail_first_ = 0;
  double noisy_rate_ = 0.0;
  mutable std::atomic<std::uint64_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Scorer

class ScorerClient {
 public:
  virtual ~ScorerClient() = default;
  /// Sum of token log-probabilities of `continuation` given `context`; finite, <= 0.
  virtual double score(std::string_view context, std::string_view continuation) const = 0;
};

double score_sequence(const ScorerClient& client, std::string_view context, std::string_view continuation);

/// Pseudo log-probabilities over whitespace tokens. Each token's value depends on
/// the seed, the token and every token before it (context words then earlier
/// continuation words), so score(c, a+" "+b) == score(c, a) + score(c+" "+a, b).
class MockScorer final : public ScorerClient {
 public:
  explicit MockScorer(std::uint64_t seed = 0) : seed_(seed) {}
  double score(std::string_view context, std::string_view continuation) const override;
  /// Per-token log-probability in [-10.01, -0.01).
  static double token_logprob(std::uint64_t state, std::string_view token);

 private:
  std::uint64_t seed_;
};

/// Wraps a scorer and subtracts `penalty` whenever the predicate says the
/// continuation is not the preferred one for this context.
class BiasedScorer final : public ScorerClient {
 public:
  using Predicate = std::function<bool(std::string_view context, std::string_view continuation)>;
  BiasedScorer(std::shared_ptr<const ScorerClient> base, Predicate preferred, double penalty = 1000.0)
      : base_(std::move(base)), preferred_(std::move(preferred)), penalty_(penalty) {}
  double score(std::string_view context, std::string_view continuation) const override;

 private:
  std::shared_ptr<const ScorerClient> base_;
  Predicate preferred_;
  double penalty_;
};

// ---------------------------------------------------------------------------
// Embedder

using Embedding = std::vector<double>;

class EmbedderClient {
 public:
  virtual ~EmbedderClient() = default;
  virtual std::size_t dimension() const = 0;
  /// Unit-normalized embedding.
  virtual Embedding embed(std::string_view text) const = 0;
};

Embedding embed(const EmbedderClient& client, std::string_view text);
/// Cosine similarity clamped to [-1, 1]; throws ClientError{contract} on dimension mismatch.
double similarity(std::span<const double> u, std::span<const double> v);

/// Character-trigram counts hashed into `dim` buckets, L2-normalized.
class MockEmbedder final : public EmbedderClient {
 public:
  explicit MockEmbedder(std::size_t dim = 256, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {}
  std::size_t dimension() const override { return dim_; }
  Embedding embed(std::string_view text) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Entailment

class EntailmentClient {
 public:
  explicit EntailmentClient(double threshold = 0.5) : threshold_(threshold) {}
  virtual ~EntailmentClient() = default;
  /// Entailment score in [0, 1].
  virtual double score(std::string_view premise, std::string_view claim) const = 0;
  bool entails(std::string_view premise, std::string_view claim) const { return score(premise, claim) >= threshold_; }
  double threshold() const { return threshold_; }

 private:
  double threshold_;
};

/// Scripted (premise, claim) table; unscripted pairs fall back to the fraction
/// of the claim's terms present in the premise.
class MockEntailment final : public EntailmentClient {
 public:
  explicit MockEntailment(double threshold = 0.5) : EntailmentClient(threshold) {}
  MockEntailment& set(std::string premise, std::string claim, double score);
  double score(std::string_view premise, std::string_view claim) const override;
  std::uint64_t calls() const { return calls_.load(); }

 private:
  std::map<std::pair<std::string, std::string>, double, std::less<>> table_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Asks a generator for a yes/no entailment judgement; "yes" scores 1, anything else 0.
class GeneratorEntailment final : public EntailmentClient {
 public:
  GeneratorEntailment(std::shared_ptr<const GeneratorClient> gen, double threshold = 0.5)
      : EntailmentClient(threshold), gen_(std::move(gen)) {}
  double score(std::string_view premise, std::string_view claim) const override;

 private:
  std::shared_ptr<const GeneratorClient> gen_;
};

}  // namespace citeidx
