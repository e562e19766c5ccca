#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "citeidx/bm25.hpp"
#include "citeidx/corpus.hpp"
#include "citeidx/decode_constraint.hpp"
#include "citeidx/markers.hpp"
#include "citeidx/model_io.hpp"
#include "citeidx/prompts.hpp"
#include "citeidx/tokenizer.hpp"

namespace citeidx {

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// ---------------------------------------------------------------------------
// Correctness

/// Fraction of gold strings that occur verbatim (case-sensitive) in the answer.
/// Throws std::invalid_argument for an empty gold list.
double em_recall(std::string_view answer, const std::vector<std::string>& gold);

// ---------------------------------------------------------------------------
// Short form

/// precision = matches / citations (0 without citations); recall = 1 iff gold is cited.
PrecisionRecall shortform_citation_metrics(const std::vector<std::string>& citations, std::string_view gold_title);

// ---------------------------------------------------------------------------
// Long form

struct Claim {
  std::string text;
  std::vector<std::string> citations;
  bool operator==(const Claim&) const = default;
};

/// One claim per parsed statement; the offline bypass for decomposition.
std::vector<Claim> claims_from_answer(std::string_view answer, const MarkerFormat& fmt = {});

/// Sends the answer through the decomposition prompt. Each non-empty reply line
/// is one claim; markers on the line become its citations.
std::vector<Claim> decompose_claims(std::string_view question, std::string_view answer, const GeneratorClient& gen,
                                    const PromptSet& prompts, const MarkerFormat& fmt = {});

/// Chunks of cited documents shown to the entailment model. Documents are split
/// into `chunk_tokens`-token segments; when a document has more than
/// `max_chunks` segments, the top `max_chunks` by BM25 against the claim are used.
class EvidenceStore {
 public:
  EvidenceStore(const Corpus& corpus, const TitleRegistry& registry, std::shared_ptr<const Tokenizer> tokenizer,
                std::size_t chunk_tokens = 512, std::size_t max_chunks = 5);

  /// nullopt when the title is not in the registry.
  std::optional<std::vector<std::string>> evidence(std::string_view title, std::string_view claim) const;
  /// All segments of the titled document (empty if unknown).
  std::vector<std::string> segments(std::string_view title) const;

 private:
  struct Entry {
    std::vector<std::string> segments;
    std::unique_ptr<InvertedIndex> index;
  };
  const Entry* entry(std::string_view title) const;

  const Corpus& corpus_;
  const TitleRegistry& registry_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  std::size_t chunk_tokens_;
  std::size_t max_chunks_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::unique_ptr<Entry>, std::less<>> cache_;
};

struct LongFormResult {
  PrecisionRecall pr;
  std::size_t claims = 0;
  std::size_t supported_claims = 0;
  std::size_t citations = 0;
  std::size_t supported_citations = 0;
  std::vector<std::string> invalid;  // citations outside the registry
};

/// A citation supports its claim iff some evidence chunk of the cited document
/// entails it. precision = supported citations / citations; recall = claims with
/// at least one supporting citation / claims. Both are 0 when their denominator is.
LongFormResult longform_citation_metrics(const std::vector<Claim>& claims, const EvidenceStore& evidence,
                                         const EntailmentClient& entailment);

/// Non-gold short-form citations whose document entails the answer. Short-form
/// precision counts these as wrong; the audit reports them on the side.
struct ShortFormAudit {
  std::size_t non_gold = 0;
  std::size_t entailing = 0;
};

ShortFormAudit shortform_entailment_audit(const std::vector<std::string>& citations, std::string_view gold_title,
                                          std::string_view answer, const EvidenceStore& evidence,
                                          const EntailmentClient& entailment);

// ---------------------------------------------------------------------------
// Batch evaluation

/// Line-delimited input item. Short-form items carry gold_title; long-form items
/// carry gold_answers and optionally pre-decomposed claims.
struct EvalItem {
  std::string id;
  std::string question;
  std::string model_answer;
  std::optional<std::string> gold_title;
  std::vector<std::string> gold_answers;
  std::optional<std::vector<Claim>> claims;
};

EvalItem eval_item_from_json(const json& j);
json eval_item_to_json(const EvalItem& item);

struct EvalOptions {
  MarkerFormat markers;
  PromptSet prompts = PromptSet::defaults();
  /// Skip the generator and use one claim per parsed statement.
  bool bypass_decomposition = false;
  /// Run shortform_entailment_audit on short-form items. Headline metrics are unchanged.
  bool shortform_audit = false;
  unsigned jobs = 1;
};

struct MetricsReport {
  std::vector<json> rows;  // one per item, input order
  json summary;            // means of the per-item values plus counts
};

/// Items that fail (malformed markers, client errors) produce a row with an
/// "error" field and are left out of the means.
MetricsReport evaluate_items(const std::vector<EvalItem>& items, const EvidenceStore& evidence,
                             const EntailmentClient& entailment, const GeneratorClient* decomposer,
                             const EvalOptions& opts);

// ---------------------------------------------------------------------------
// Memorization probes

enum class ProbeMode { full_doc, partial_doc, gold_qa, model_qa };
std::string_view to_string(ProbeMode m);
ProbeMode parse_probe_mode(std::string_view s);

struct ProbeItem {
  std::string id;
  std::string doc_key;
  std::string question;
  std::string answer;  // gold answer for gold_qa, model answer for model_qa
};

/// One item per document, for the document-context modes.
std::vector<ProbeItem> document_probe_items(const Corpus& corpus);

struct ProbeOptions {
  ProbeMode mode = ProbeMode::full_doc;
  std::size_t k = 10;
  /// Candidate pool size including the true title; 0 or >= registry size means all titles.
  std::size_t candidates = 0;
  std::string cue = "\nThe title of the document this text comes from is:";
  /// PartialDoc segment: the middle third unless random_segment is set.
  bool random_segment = false;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

/// Context shown to the scorer (before the cue) for an item.
std::string probe_context(const ProbeItem& item, const Corpus& corpus, const ProbeOptions& opts);

/// Candidate titles for one item: the true title plus a seeded sample of others, sorted.
std::vector<std::string> probe_candidates(const ProbeItem& item, const std::string& true_title,
                                          const std::vector<std::string>& all_titles, const ProbeOptions& opts);

/// Candidates by descending score; ties broken by ascending title.
std::vector<std::pair<std::string, double>> rank_titles(const ScorerClient& scorer, std::string_view context,
                                                        const std::vector<std::string>& candidates);

struct ProbeRow {
  std::string id;
  std::string true_title;
  std::size_t rank = 0;  // 1-based position of the true title
  std::string top_title;
};

struct ProbeReport {
  ProbeMode mode = ProbeMode::full_doc;
  std::size_t k = 10;
  std::size_t items = 0;
  std::size_t dropped = 0;
  double hit_at_1 = 0.0;
  double hit_at_k = 0.0;
  std::vector<ProbeRow> rows;
  std::vector<std::string> diagnostics;
};

ProbeReport memorization_probe(const Corpus& corpus, const TitleRegistry& registry, const ScorerClient& scorer,
                               const std::vector<ProbeItem>& items, const ProbeOptions& opts);

// ---------------------------------------------------------------------------
// Title distinctiveness

struct DistinctItem {
  std::string id;
  std::string statement;  // question + " " + answer
  std::string true_title;
};

struct RankBins {
  /// Inclusive upper rank of each bin but the last: Easy, Medium, Hard, Very Hard.
  std::vector<std::size_t> upper = {3, 30, 300};
  std::vector<std::string> names = {"Easy", "Medium", "Hard", "Very Hard"};

  std::size_t bin_of(std::size_t rank) const;
  /// Parses "3,30,300".
  static RankBins parse(std::string_view spec);
};

struct DistinctRow {
  std::string id;
  std::string true_title;
  std::size_t rank = 0;
  std::string bin;
};

struct DistinctReport {
  std::vector<DistinctRow> rows;
  std::vector<std::size_t> bin_counts;
  std::vector<double> bin_mean_rank;
  double mean_rank = 0.0;
  std::size_t n_titles = 0;
};

/// Cosines closer than this count as tied.
inline constexpr double kSimilarityTieEpsilon = 1e-12;

/// rank = 1 + number of titles whose cosine with the statement exceeds the true
/// title's by more than kSimilarityTieEpsilon. Throws std::invalid_argument if a true title
/// is missing from `titles`.
DistinctReport title_distinctiveness(const std::vector<DistinctItem>& items, const std::vector<std::string>& titles,
                                     const EmbedderClient& embedder, const RankBins& bins = {}, unsigned jobs = 1);

}  // namespace citeidx
