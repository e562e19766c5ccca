#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citeidx/corpus.hpp"
#include "citeidx/markers.hpp"
#include "citeidx/tokenizer.hpp"

namespace citeidx {

struct Continuations {
  std::vector<TokenId> tokens;  // ascending
  bool may_terminate = false;
  bool operator==(const Continuations&) const = default;
};

/// Prefix tree over the token sequences of every registry title.
///
/// Integration contract for a sampling loop: after each generated token inside a
/// citation span, restrict the next token to `allowed(prefix).tokens`; the span
/// may close only when `may_terminate` is true. A title that is a token-prefix of
/// another leaves both paths open, and closing is the sampler's choice.
class TitleTrie {
 public:
  /// Throws std::invalid_argument for an empty title list, a title that tokenizes
  /// to nothing, or two titles with identical token sequences.
  static TitleTrie build(const std::vector<std::string>& titles, const Tokenizer& tokenizer);
  static TitleTrie build(const TitleRegistry& registry, const Tokenizer& tokenizer) {
    return build(registry.titles(), tokenizer);
  }

  /// Children of the prefix node; a prefix outside the trie yields {{}, false}.
  Continuations allowed(std::span<const TokenId> prefix) const;
  /// Title spelled exactly by `tokens`, if any.
  std::optional<std::string> title_at(std::span<const TokenId> tokens) const;

  /// 32-bit-word bitmask over [0, vocab_size) with allowed tokens set.
  std::vector<std::uint32_t> mask(std::span<const TokenId> prefix, std::size_t vocab_size) const;

  /// Calls fn(path, title) for every terminal node, depth-first in token order.
  void visit_terminals(const std::function<void(const std::vector<TokenId>&, const std::string&)>& fn) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t title_count() const { return titles_.size(); }
  /// Titles whose token sequence is a strict prefix of another title's.
  std::size_t prefix_collisions() const { return prefix_collisions_; }
  const std::string& tokenizer_name() const { return tokenizer_name_; }

  std::vector<std::uint8_t> serialize() const;
  static TitleTrie deserialize(const std::vector<std::uint8_t>& container);
  void save(const std::filesystem::path& path) const;
  static TitleTrie load(const std::filesystem::path& path);

 private:
  struct Node {
    std::vector<std::pair<TokenId, std::uint32_t>> children;  // sorted by token
    std::int32_t title = -1;
  };
  std::optional<std::uint32_t> walk(std::span<const TokenId> prefix) const;

  std::vector<Node> nodes_;
  std::vector<std::string> titles_;
  std::string tokenizer_name_;
  std::size_t prefix_collisions_ = 0;
};

struct Statement {
  std::string text;
  std::vector<std::string> citations;  // deduplicated, first-occurrence order
  bool operator==(const Statement&) const = default;
};

/// R = <(s_1, C_1), ..., (s_m, C_m)>
struct CitedResponse {
  std::vector<Statement> statements;

  std::vector<std::string> all_citations() const;  // per statement, concatenated
  std::string plain_text() const;                  // statements joined by single spaces
};

/// Each maximal run of markers attaches to the text segment before it. Trailing
/// text with no marker run forms a final statement with no citations. Statement
/// text is whitespace-collapsed; citation titles are normalized. Throws
/// MarkerError (with byte offset) on unbalanced markers.
CitedResponse parse_citations(std::string_view answer, const MarkerFormat& fmt = {});

/// Citations in `answer` that are not registry titles (in order, with repeats).
std::vector<std::string> invalid_citations(std::string_view answer, const TitleRegistry& registry,
                                           const MarkerFormat& fmt = {});

}  // namespace citeidx
