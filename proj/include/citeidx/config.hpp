#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "citeidx/artifact.hpp"
#include "citeidx/bm25.hpp"
#include "citeidx/http_clients.hpp"
#include "citeidx/markers.hpp"

namespace citeidx {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a pipeline run depends on. Loaded from YAML; every output artifact
/// embeds to_json() and its hash in its header.
struct PipelineConfig {
  std::vector<std::string> corpus_paths;
  std::string default_source = "other";
  std::string tokenizer = "whitespace";
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  unsigned jobs = 0;
  std::string prompts_dir;

  MarkerFormat markers;

  int max_rename_attempts = 5;
  std::size_t rename_prompt_words = 200;

  std::size_t chunk_words = 256;
  Bm25Params bm25;

  std::size_t passive_window = 768;
  bool repeat_terminal = true;

  std::size_t n_max = 10;
  double fuzzy_threshold = 0.6;

  std::size_t per_doc_seeds = 1;
  std::size_t retrieve_k = 200;
  std::size_t max_candidates = 10;
  bool lenient = false;

  double entailment_threshold = 0.5;
  std::size_t evidence_chunk_tokens = 512;
  std::size_t evidence_max_chunks = 5;
  std::vector<std::size_t> rank_bins = {3, 30, 300};
  std::size_t probe_k = 10;
  std::size_t probe_candidates = 100;

  double hybrid_quality = 0.5;
  std::size_t hybrid_trials = 1;
  std::size_t hybrid_slots = 5;

  std::string client = "mock";
  unsigned in_flight = 8;
  double mock_noisy_rate = 0.0;
  HttpConfig http;
  std::size_t embedding_dim = 256;

  /// Throws ConfigError naming the offending key path for unknown keys, wrong
  /// types or out-of-range values.
  static PipelineConfig from_yaml(const std::string& text);
  static PipelineConfig load(const std::filesystem::path& path);

  /// CITEIDX_API_BASE, CITEIDX_API_KEY and CITEIDX_MODEL override the http section.
  void apply_env();
  void validate() const;

  /// Canonical form for artifact headers. Excludes the API key, output_dir and
  /// jobs, none of which may change artifact contents.
  json to_json() const;
  std::string hash() const { return config_hash(to_json()); }
  ArtifactHeader header(const std::string& kind) const;
};

}  // namespace citeidx
