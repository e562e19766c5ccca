#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citeidx/bm25.hpp"
#include "citeidx/corpus.hpp"
#include "citeidx/markers.hpp"
#include "citeidx/model_io.hpp"
#include "citeidx/passive_index.hpp"
#include "citeidx/prompts.hpp"
#include "citeidx/rng.hpp"

namespace citeidx {

/// Seed chunk plus 1-3 retrieved chunks, all from distinct documents.
struct ChunkCluster {
  ChunkRef seed;
  std::vector<ChunkRef> members;  // members[0] == seed
  std::uint64_t draw = 0;
};

enum class PairStatus { kept, filtered };

struct BackwardPair {
  std::string instruction;
  std::string answer;
  std::vector<std::string> cited_titles;  // canonical after filtering, first-occurrence order
  ChunkCluster cluster;
  PairStatus status = PairStatus::kept;
  std::string filter_reason;
};

json backward_pair_to_json(const BackwardPair& p);
BackwardPair backward_pair_from_json(const json& j);

/// min(per_doc, #chunks) chunk indices per document, uniform without replacement.
/// `chunk_counts[i]` is the number of chunks of document i. Selection for a
/// document depends only on (seed, doc_key).
std::vector<ChunkRef> sample_seed_chunks(const std::vector<std::pair<std::string, std::size_t>>& chunk_counts,
                                         std::size_t per_doc, std::uint64_t seed);

struct ClusterOptions {
  std::size_t retrieve_k = 200;
  std::size_t max_candidates = 10;
  int min_extra = 1;
  int max_extra = 3;
};

/// Maps retrieval hits back to chunk references.
using RefOf = std::function<const ChunkRef&(std::uint32_t)>;

/// nullopt when no chunk from another document is retrieved.
std::optional<ChunkCluster> form_cluster(const ChunkRetriever& retriever, const RefOf& ref_of, const ChunkRef& seed,
                                         std::string_view seed_text, Rng& rng, const ClusterOptions& opts = {});

/// Title and content for each cluster member, in member order.
using ClusterDocs = std::vector<std::pair<std::string, std::string>>;

/// Splits the completion into instruction (first paragraph) and answer (the
/// rest) and collects <source> spans. Filtered as "unparseable" or
/// "no citations" when the structure is missing.
BackwardPair parse_backward_response(std::string_view response, const ChunkCluster& cluster);

BackwardPair generate_backward_pair(const ChunkCluster& cluster, const ClusterDocs& docs, const GeneratorClient& gen,
                                    const PromptSet& prompts);

/// Placeholder citations: "document 1", "doc: x", "Title: ...", "source 2",
/// bare ordinals ("1", "first", "2nd"), or empty spans.
bool is_noisy_citation(std::string_view citation);

struct FilterOptions {
  double fuzzy_threshold = 0.6;
  /// Accept any registry title instead of only the cluster's own.
  bool lenient = false;
};

/// Filters pairs with noisy or unresolvable citations; otherwise rewrites every
/// <source> span to the canonical title it resolves to.
BackwardPair filter_invalid_citations(BackwardPair pair, const TitleRegistry& registry,
                                      const std::vector<std::string>& cluster_titles, const FilterOptions& opts = {});

/// Converts <source> spans to the canonical marker format. Malformed tags yield
/// nullopt and mark the pair filtered with reason "malformed markers".
std::optional<PretrainRecord> finalize_markers(BackwardPair& pair, const Tokenizer& tokenizer,
                                               const MarkerFormat& fmt = {});

struct BackwardOptions {
  std::size_t per_doc_seeds = 1;
  std::uint64_t seed = 0;
  ClusterOptions cluster;
  FilterOptions filter;
  PromptSet prompts = PromptSet::defaults();
  MarkerFormat markers;
  unsigned in_flight = 8;
};

struct BackwardStats {
  std::size_t seeds = 0;
  std::size_t clusters = 0;
  std::size_t clusters_skipped = 0;
  std::size_t kept = 0;
  std::size_t filtered = 0;
  std::size_t generator_failures = 0;
  std::map<std::string, std::size_t> filter_reasons;
  std::vector<std::size_t> cluster_sizes = std::vector<std::size_t>(5, 0);
  std::vector<std::string> diagnostics;
};

struct BackwardOutput {
  std::vector<BackwardPair> pairs;     // kept and filtered, commit order
  std::vector<PretrainRecord> records;  // kept pairs only
};

/// Seeds, clusters, generation, filtering and finalization over a chunked
/// corpus. `chunks` must be the corpus chunks the retriever indexes, in the
/// retriever's chunk-id order. Commit order is (doc_key, chunk_index, draw).
BackwardOutput run_backward(const Corpus& corpus, const TitleRegistry& registry, const std::vector<Chunk>& chunks,
                            const ChunkRetriever& retriever, const GeneratorClient& gen, const Tokenizer& tokenizer,
                            const BackwardOptions& opts, BackwardStats& stats);

}  // namespace citeidx
