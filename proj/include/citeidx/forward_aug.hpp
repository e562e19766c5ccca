#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "citeidx/corpus.hpp"
#include "citeidx/markers.hpp"
#include "citeidx/model_io.hpp"
#include "citeidx/passive_index.hpp"
#include "citeidx/prompts.hpp"

namespace citeidx {

struct EntitySet {
  std::string doc_key;
  std::vector<std::string> entities;
};

struct RepairEntry {
  std::string raw;        // span found in the generated text ("" when injected)
  std::string canonical;  // registry title written in its place
  std::string kind;       // "marker" | "exact" | "fuzzy" | "injected" | "unwrapped"
  bool operator==(const RepairEntry&) const = default;
};

struct ForwardQA {
  std::string doc_key;
  std::string entity;
  std::string question;
  std::string answer;
  std::vector<RepairEntry> repair_log;
};

json forward_qa_to_json(const ForwardQA& qa);
ForwardQA forward_qa_from_json(const json& j);

struct ForwardOptions {
  std::size_t n_max = 10;
  PromptSet prompts = PromptSet::defaults();
  MarkerFormat markers;
  double fuzzy_threshold = 0.6;
  unsigned in_flight = 8;
};

struct ForwardStats {
  std::size_t documents = 0;
  std::size_t documents_skipped = 0;
  std::size_t entities = 0;
  std::size_t responses_unparseable = 0;
  std::size_t pairs_kept = 0;
  std::size_t pairs_dropped = 0;
  std::size_t generator_failures = 0;
  std::vector<std::string> diagnostics;
};

/// Newline-separated entity list: list bullets/numbering stripped, blank and
/// case-insensitive duplicate lines dropped, capped at n_max.
std::vector<std::string> parse_entity_list(std::string_view response, std::size_t n_max);

/// nullopt (with a diagnostic) when the generator fails or yields no entities.
std::optional<EntitySet> extract_entities(const Document& doc, std::size_t n_max, const GeneratorClient& gen,
                                          const PromptSet& prompts, std::string* diagnostic = nullptr);

/// Question/answer blocks introduced by "Question:"/"Answer:" headers (with
/// optional numbering and ** emphasis) or "Q:"/"A:". Blocks missing either side
/// are dropped and counted in `dropped`.
std::vector<std::pair<std::string, std::string>> parse_qa_blocks(std::string_view response,
                                                                 std::size_t* dropped = nullptr);

/// Raw (pre-repair) pairs for one entity. Throws ClientError when the generator fails.
std::vector<ForwardQA> generate_forward_qa(const Document& doc, const std::string& entity,
                                           const GeneratorClient& gen, const PromptSet& prompts,
                                           std::size_t* dropped = nullptr, bool* unparseable = nullptr);

/// Rewrites the document reference in a generated question so that exactly one
/// canonical marker of `true_title` remains. Tried in order: existing marker or
/// <source> spans, an exact occurrence of the title, the best fuzzy word window
/// (title_similarity >= threshold), and finally injection into the first sentence.
/// Idempotent.
std::pair<std::string, std::vector<RepairEntry>> repair_doc_ids(std::string_view text, std::string_view true_title,
                                                                const MarkerFormat& fmt = {},
                                                                double threshold = 0.6);

/// Replaces marker and <source> spans in an answer with the plain title text.
std::string unwrap_title_markers(std::string_view text, std::string_view true_title, const MarkerFormat& fmt = {});

/// Full forward pass over a titled corpus. Output order is (corpus order, entity
/// index, pair index) regardless of completion order.
std::vector<ForwardQA> run_forward(const Corpus& corpus, const TitleRegistry& registry, const GeneratorClient& gen,
                                   const ForwardOptions& opts, ForwardStats& stats);

/// question + blank line + answer; the title is already inline.
PretrainRecord forward_record(const ForwardQA& qa, const Tokenizer& tokenizer);

}  // namespace citeidx
