#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace citeidx {

/// Half-open byte range [begin, end) into some owning string.
struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  std::string_view of(std::string_view text) const { return text.substr(begin, end - begin); }
  bool operator==(const ByteSpan&) const = default;
};

bool is_space(char c);

/// A word is a maximal run of non-whitespace bytes (ASCII whitespace only).
std::vector<ByteSpan> word_spans(std::string_view text);
std::vector<std::string_view> split_words(std::string_view text);
std::size_t count_words(std::string_view text);

std::string join(const std::vector<std::string_view>& parts, std::string_view sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Collapses every whitespace run to one space and trims both ends.
std::string collapse_whitespace(std::string_view text);
std::string trim(std::string_view text);

/// NFC, trim, collapse internal whitespace. Canonical form used for title uniqueness.
std::string normalize_title(std::string_view title);

/// Case-folded, punctuation-stripped form used by the fuzzy title matcher.
std::u32string fuzzy_key(std::string_view text);

/// Longest common contiguous substring length (code points).
std::size_t longest_common_substring(std::u32string_view a, std::u32string_view b);

/// 2*LCS / (|a| + |b|) over fuzzy keys; 0 when both keys are empty.
double title_similarity(std::string_view a, std::string_view b);

/// Lowercased alphanumeric terms for the lexical analyzer. Non-ASCII bytes count
/// as alphanumeric so UTF-8 words survive intact.
std::vector<std::string> analyze_terms(std::string_view text);

/// Sentence spans: a boundary follows one of . ! ? (plus closing quotes/brackets)
/// when the next non-space character is uppercase, a digit, or an opening quote.
std::vector<ByteSpan> sentence_spans(std::string_view text);

/// Paragraph spans separated by blank lines; trimmed, empty paragraphs dropped.
std::vector<ByteSpan> paragraph_spans(std::string_view text);

std::string to_lower_ascii(std::string_view text);
bool iequals_ascii(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view text, std::string_view prefix);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t x);
std::string hex64(std::uint64_t v);

/// Decodes UTF-8 into code points; invalid bytes map to U+FFFD.
std::u32string utf8_to_u32(std::string_view text);
std::string u32_to_utf8(std::u32string_view text);

}  // namespace citeidx
