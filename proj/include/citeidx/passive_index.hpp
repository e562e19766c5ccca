#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "citeidx/corpus.hpp"
#include "citeidx/markers.hpp"
#include "citeidx/tokenizer.hpp"

namespace citeidx {

enum class Variant { passive, repeat, repeat_plus, forward, backward };

std::string_view to_string(Variant v);
/// Accepts "repeat+" and "repeat_plus"; throws std::invalid_argument otherwise.
Variant parse_variant(std::string_view s);

struct PretrainRecord {
  std::string text;
  std::vector<std::string> doc_keys;
  Variant variant = Variant::passive;
  std::size_t token_count = 0;
  std::size_t piece_index = 0;
  /// Repeat+: "full" | "third" | "paragraph" | "sentence"; Repeat: "inline+terminal" or "inline".
  std::string segment;
};

json record_to_json(const PretrainRecord& r);
PretrainRecord record_from_json(const json& j);

struct PassiveAudit {
  std::size_t records = 0;
  std::size_t corpus_tokens = 0;   // sum of document token counts
  std::size_t window_tokens = 0;   // sum of tokens placed in windows
  std::size_t title_tokens = 0;    // sum of tokens in appended " " + marker suffixes
  std::size_t emitted_tokens = 0;  // sum of record token_count values

  /// window_tokens == corpus_tokens and emitted_tokens == corpus_tokens + title_tokens.
  bool identity_holds() const {
    return window_tokens == corpus_tokens && emitted_tokens == corpus_tokens + title_tokens;
  }
};

struct PassiveOptions {
  std::size_t window = 768;  // tokens per piece, before the title suffix
  MarkerFormat markers;
  unsigned jobs = 1;
};

/// Splits each document into <= window-token pieces and suffixes each with the
/// marked title. Token counts are those of the injected tokenizer; each record's
/// token_count is its window's tokens plus the tokenizer count of " " + marker.
std::vector<PretrainRecord> emit_passive(const Corpus& corpus, const TitleRegistry& registry,
                                         const Tokenizer& tokenizer, const PassiveOptions& opts,
                                         PassiveAudit* audit = nullptr);

struct RepeatOptions {
  MarkerFormat markers;
  /// Keep the passive-style marker at the end of the document as well.
  bool terminal_marker = true;
  unsigned jobs = 1;
};

/// Inserts the marked title after every sentence ending in . ! or ?, plus the
/// terminal marker. One record per non-empty document.
std::vector<PretrainRecord> emit_repeat(const Corpus& corpus, const TitleRegistry& registry,
                                        const Tokenizer& tokenizer, const RepeatOptions& opts);

struct RepeatPlusOptions {
  MarkerFormat markers;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

/// Per document: the full text, one sampled contiguous third (by words), one
/// sampled paragraph and one sampled sentence, each suffixed with the marked
/// title. Identical segments are emitted once. Sampling depends only on the seed
/// and the doc_key.
std::vector<PretrainRecord> emit_repeat_plus(const Corpus& corpus, const TitleRegistry& registry,
                                             const Tokenizer& tokenizer, const RepeatPlusOptions& opts);

/// True when every marker in `text` is balanced and names a registry title.
bool record_markers_valid(const PretrainRecord& r, const TitleRegistry& registry, const MarkerFormat& fmt);

}  // namespace citeidx
