#include "citeidx/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace citeidx {

namespace {

using Setter = std::function<void(const YAML::Node&, const std::string& path)>;

template <typename T>
T scalar(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ConfigError(path + ": expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": invalid value '" + n.Scalar() + "'");
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const YAML::Node& n, const std::string& path) { field = scalar<T>(n, path); };
}

Setter set_list(std::vector<std::string>& field) {
  return [&field](const YAML::Node& n, const std::string& path) {
    field.clear();
    if (n.IsScalar()) {
      field.push_back(n.as<std::string>());
      return;
    }
    if (!n.IsSequence()) throw ConfigError(path + ": expected a list");
    for (std::size_t i = 0; i < n.size(); ++i) field.push_back(scalar<std::string>(n[i], path + "[" + std::to_string(i) + "]"));
  };
}

Setter set_sizes(std::vector<std::size_t>& field) {
  return [&field](const YAML::Node& n, const std::string& path) {
    if (!n.IsSequence()) throw ConfigError(path + ": expected a list");
    field.clear();
    for (std::size_t i = 0; i < n.size(); ++i) field.push_back(scalar<std::size_t>(n[i], path + "[" + std::to_string(i) + "]"));
  };
}

void apply_section(const YAML::Node& node, const std::map<std::string, Setter>& fields, const std::string& prefix) {
  if (!node.IsMap()) throw ConfigError((prefix.empty() ? std::string("config") : prefix) + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("unknown key: " + path);
    it->second(kv.second, path);
  }
}

Setter section(std::map<std::string, Setter> fields) {
  return [fields = std::move(fields)](const YAML::Node& n, const std::string& path) { apply_section(n, fields, path); };
}

}  // namespace

PipelineConfig PipelineConfig::from_yaml(const std::string& text) {
  PipelineConfig c;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root || root.IsNull()) return c;
  int timeout_s = static_cast<int>(c.http.timeout.count());
  std::map<std::string, Setter> fields = {
      {"corpus", section({{"paths", set_list(c.corpus_paths)}, {"default_source", set(c.default_source)}})},
      {"tokenizer", set(c.tokenizer)},
      {"seed", set(c.seed)},
      {"output_dir", set(c.output_dir)},
      {"jobs", set(c.jobs)},
      {"prompts_dir", set(c.prompts_dir)},
      {"markers", section({{"open", set(c.markers.open)}, {"close", set(c.markers.close)}})},
      {"titles", section({{"max_rename_attempts", set(c.max_rename_attempts)},
                          {"prompt_words", set(c.rename_prompt_words)}})},
      {"chunking", section({{"words", set(c.chunk_words)}})},
      {"bm25", section({{"k1", set(c.bm25.k1)}, {"b", set(c.bm25.b)}})},
      {"passive", section({{"window", set(c.passive_window)}, {"repeat_terminal", set(c.repeat_terminal)}})},
      {"forward", section({{"n_max", set(c.n_max)}, {"fuzzy_threshold", set(c.fuzzy_threshold)}})},
      {"backward", section({{"per_doc_seeds", set(c.per_doc_seeds)},
                            {"retrieve_k", set(c.retrieve_k)},
                            {"max_candidates", set(c.max_candidates)},
                            {"lenient", set(c.lenient)}})},
      {"evaluation", section({{"entailment_threshold", set(c.entailment_threshold)},
                              {"chunk_tokens", set(c.evidence_chunk_tokens)},
                              {"max_chunks", set(c.evidence_max_chunks)},
                              {"rank_bins", set_sizes(c.rank_bins)},
                              {"probe_k", set(c.probe_k)},
                              {"probe_candidates", set(c.probe_candidates)}})},
      {"hybrid", section({{"quality", set(c.hybrid_quality)},
                          {"trials", set(c.hybrid_trials)},
                          {"slots", set(c.hybrid_slots)}})},
      {"client", section({{"kind", set(c.client)},
                          {"in_flight", set(c.in_flight)},
                          {"mock_noisy_rate", set(c.mock_noisy_rate)},
                          {"base_url", set(c.http.base_url)},
                          {"model", set(c.http.model)},
                          {"temperature", set(c.http.temperature)},
                          {"timeout_s", set(timeout_s)},
                          {"max_attempts", set(c.http.retry.max_attempts)},
                          {"supports_logprobs", set(c.http.supports_logprobs)},
                          {"embedding_dim", set(c.embedding_dim)}})},
  };
  apply_section(root, fields, "");
  c.http.timeout = std::chrono::seconds(timeout_s);
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_yaml(ss.str());
}

void PipelineConfig::apply_env() { http = HttpConfig::from_env(http); }

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  static const std::set<std::string> tokenizers = {"whitespace", "byte", "char"};
  if (!tokenizers.count(tokenizer)) fail("tokenizer: expected whitespace, byte or char, got '" + tokenizer + "'");
  if (client != "mock" && client != "http") fail("client.kind: expected mock or http, got '" + client + "'");
  if (markers.open.empty() || markers.close.empty()) fail("markers: open and close must be non-empty");
  if (markers.open == markers.close) fail("markers: open and close must differ");
  if (max_rename_attempts < 0) fail("titles.max_rename_attempts: must be >= 0");
  if (chunk_words == 0) fail("chunking.words: must be >= 1");
  if (bm25.k1 < 0) fail("bm25.k1: must be >= 0");
  if (bm25.b < 0 || bm25.b > 1) fail("bm25.b: must be in [0, 1]");
  if (passive_window == 0) fail("passive.window: must be >= 1");
  if (n_max == 0) fail("forward.n_max: must be >= 1");
  if (fuzzy_threshold < 0 || fuzzy_threshold > 1) fail("forward.fuzzy_threshold: must be in [0, 1]");
  if (retrieve_k == 0 || max_candidates == 0) fail("backward: retrieve_k and max_candidates must be >= 1");
  if (entailment_threshold < 0 || entailment_threshold > 1) fail("evaluation.entailment_threshold: must be in [0, 1]");
  if (evidence_chunk_tokens == 0 || evidence_max_chunks == 0) fail("evaluation: chunk_tokens and max_chunks must be >= 1");
  for (std::size_t i = 1; i < rank_bins.size(); ++i)
    if (rank_bins[i] <= rank_bins[i - 1]) fail("evaluation.rank_bins: thresholds must increase");
  if (rank_bins.empty()) fail("evaluation.rank_bins: at least one threshold required");
  if (probe_k == 0) fail("evaluation.probe_k: must be >= 1");
  if (hybrid_quality < 0 || hybrid_quality > 1) fail("hybrid.quality: must be in [0, 1]");
  if (hybrid_slots == 0) fail("hybrid.slots: must be >= 1");
  if (mock_noisy_rate < 0 || mock_noisy_rate > 1) fail("client.mock_noisy_rate: must be in [0, 1]");
  if (embedding_dim == 0) fail("client.embedding_dim: must be >= 1");
  if (http.retry.max_attempts < 1) fail("client.max_attempts: must be >= 1");
}

json PipelineConfig::to_json() const {
  return {
      {"corpus", {{"paths", corpus_paths}, {"default_source", default_source}}},
      {"tokenizer", tokenizer},
      {"seed", seed},
      {"prompts_dir", prompts_dir},
      {"markers", {{"open", markers.open}, {"close", markers.close}}},
      {"titles", {{"max_rename_attempts", max_rename_attempts}, {"prompt_words", rename_prompt_words}}},
      {"chunking", {{"words", chunk_words}}},
      {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}}},
      {"passive", {{"window", passive_window}, {"repeat_terminal", repeat_terminal}}},
      {"forward", {{"n_max", n_max}, {"fuzzy_threshold", fuzzy_threshold}}},
      {"backward",
       {{"per_doc_seeds", per_doc_seeds}, {"retrieve_k", retrieve_k}, {"max_candidates", max_candidates},
        {"lenient", lenient}}},
      {"evaluation",
       {{"entailment_threshold", entailment_threshold}, {"chunk_tokens", evidence_chunk_tokens},
        {"max_chunks", evidence_max_chunks}, {"rank_bins", rank_bins}, {"probe_k", probe_k},
        {"probe_candidates", probe_candidates}}},
      {"hybrid", {{"quality", hybrid_quality}, {"trials", hybrid_trials}, {"slots", hybrid_slots}}},
      {"client",
       {{"kind", client}, {"mock_noisy_rate", mock_noisy_rate}, {"base_url", http.base_url}, {"model", http.model},
        {"temperature", http.temperature}, {"supports_logprobs", http.supports_logprobs},
        {"embedding_dim", embedding_dim}}},
  };
}

ArtifactHeader PipelineConfig::header(const std::string& kind) const {
  ArtifactHeader h;
  h.kind = kind;
  h.config = to_json();
  h.config_hash = config_hash(h.config);
  h.seed = seed;
  return h;
}

}  // namespace citeidx
