#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "citeidx/text.hpp"

namespace citeidx {

using TokenId = std::int32_t;

/// Injected tokenizer. Token counts, passive windows and the title trie are all
/// expressed in its units.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::string_view name() const = 0;
  /// Byte spans of each token, in order, non-overlapping.
  virtual std::vector<ByteSpan> spans(std::string_view text) const = 0;
  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual std::size_t count(std::string_view text) const { return spans(text).size(); }
};

/// One token per whitespace-delimited word; ids are 31-bit hashes of the word.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::string_view name() const override { return "whitespace"; }
  std::vector<ByteSpan> spans(std::string_view text) const override { return word_spans(text); }
  std::vector<TokenId> encode(std::string_view text) const override;
  std::size_t count(std::string_view text) const override { return count_words(text); }
};

class ByteTokenizer final : public Tokenizer {
 public:
  std::string_view name() const override { return "byte"; }
  std::vector<ByteSpan> spans(std::string_view text) const override;
  std::vector<TokenId> encode(std::string_view text) const override;
  std::size_t count(std::string_view text) const override { return text.size(); }
};

/// One token per UTF-8 code point; id = code point.
class CharTokenizer final : public Tokenizer {
 public:
  std::string_view name() const override { return "char"; }
  std::vector<ByteSpan> spans(std::string_view text) const override;
  std::vector<TokenId> encode(std::string_view text) const override;
};

/// "whitespace" | "byte" | "char"; throws std::invalid_argument otherwise.
std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view name);

}  // namespace citeidx
