#include "citeidx/decode_constraint.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "citeidx/binio.hpp"

namespace citeidx {

TitleTrie TitleTrie::build(const std::vector<std::string>& titles, const Tokenizer& tokenizer) {
  if (titles.empty()) throw std::invalid_argument("build_title_trie: empty registry");
  TitleTrie trie;
  trie.tokenizer_name_ = std::string(tokenizer.name());
  trie.nodes_.emplace_back();
  for (const auto& title : titles) {
    auto ids = tokenizer.encode(title);
    if (ids.empty()) throw std::invalid_argument("title tokenizes to an empty sequence: '" + title + "'");
    std::uint32_t node = 0;
    for (TokenId id : ids) {
      auto& ch = trie.nodes_[node].children;
      auto it = std::lower_bound(ch.begin(), ch.end(), id,
                                 [](const auto& p, TokenId t) { return p.first < t; });
      if (it != ch.end() && it->first == id) {
        node = it->second;
      } else {
        auto next = static_cast<std::uint32_t>(trie.nodes_.size());
        ch.insert(it, {id, next});
        trie.nodes_.emplace_back();
        node = next;
      }
    }
    if (trie.nodes_[node].title >= 0)
      throw std::invalid_argument("titles share a token sequence: '" + trie.titles_[trie.nodes_[node].title] +
                                  "' and '" + title + "'");
    trie.nodes_[node].title = static_cast<std::int32_t>(trie.titles_.size());
    trie.titles_.push_back(title);
  }
  for (const auto& n : trie.nodes_)
    if (n.title >= 0 && !n.children.empty()) ++trie.prefix_collisions_;
  return trie;
}

std::optional<std::uint32_t> TitleTrie::walk(std::span<const TokenId> prefix) const {
  std::uint32_t node = 0;
  for (TokenId id : prefix) {
    const auto& ch = nodes_[node].children;
    auto it = std::lower_bound(ch.begin(), ch.end(), id, [](const auto& p, TokenId t) { return p.first < t; });
    if (it == ch.end() || it->first != id) return std::nullopt;
    node = it->second;
  }
  return node;
}

Continuations TitleTrie::allowed(std::span<const TokenId> prefix) const {
  auto node = walk(prefix);
  if (!node) return {};
  Continuations out;
  const auto& n = nodes_[*node];
  out.tokens.reserve(n.children.size());
  for (const auto& [tok, _] : n.children) out.tokens.push_back(tok);
  out.may_terminate = n.title >= 0;
  return out;
}

std::optional<std::string> TitleTrie::title_at(std::span<const TokenId> tokens) const {
  auto node = walk(tokens);
  if (!node || nodes_[*node].title < 0) return std::nullopt;
  return titles_[nodes_[*node].title];
}

std::vector<std::uint32_t> TitleTrie::mask(std::span<const TokenId> prefix, std::size_t vocab_size) const {
  std::vector<std::uint32_t> bits((vocab_size + 31) / 32, 0u);
  for (TokenId t : allowed(prefix).tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) continue;
    bits[static_cast<std::size_t>(t) / 32] |= 1u << (static_cast<std::size_t>(t) % 32);
  }
  return bits;
}

void TitleTrie::visit_terminals(const std::function<void(const std::vector<TokenId>&, const std::string&)>& fn) const {
  std::vector<TokenId> path;
  std::function<void(std::uint32_t)> rec = [&](std::uint32_t node) {
    if (nodes_[node].title >= 0) fn(path, titles_[nodes_[node].title]);
    for (const auto& [tok, child] : nodes_[node].children) {
      path.push_back(tok);
      rec(child);
      path.pop_back();
    }
  };
  rec(0);
}

std::vector<std::uint8_t> TitleTrie::serialize() const {
  binio::Writer w;
  w.str(tokenizer_name_);
  w.u64(titles_.size());
  for (const auto& t : titles_) w.str(t);
  w.u64(nodes_.size());
  for (const auto& n : nodes_) {
    w.i32(n.title);
    w.u32(static_cast<std::uint32_t>(n.children.size()));
    for (const auto& [tok, child] : n.children) {
      w.i32(tok);
      w.u32(child);
    }
  }
  return binio::wrap(binio::PayloadKind::title_trie, w.bytes());
}

TitleTrie TitleTrie::deserialize(const std::vector<std::uint8_t>& container) {
  binio::Reader r(binio::unwrap(binio::PayloadKind::title_trie, container));
  TitleTrie trie;
  trie.tokenizer_name_ = r.str();
  const std::uint64_t n_titles = r.u64();
  for (std::uint64_t i = 0; i < n_titles; ++i) trie.titles_.push_back(r.str());
  const std::uint64_t n_nodes = r.u64();
  if (n_nodes == 0) throw binio::FormatError("trie has no root");
  trie.nodes_.resize(n_nodes);
  for (auto& n : trie.nodes_) {
    n.title = r.i32();
    if (n.title >= static_cast<std::int64_t>(n_titles)) throw binio::FormatError("terminal references unknown title");
    const std::uint32_t k = r.u32();
    for (std::uint32_t j = 0; j < k; ++j) {
      TokenId tok = r.i32();
      std::uint32_t child = r.u32();
      if (child >= n_nodes) throw binio::FormatError("child index out of range");
      n.children.emplace_back(tok, child);
    }
  }
  if (!r.at_end()) throw binio::FormatError("trailing bytes in trie payload");
  for (const auto& n : trie.nodes_)
    if (n.title >= 0 && !n.children.empty()) ++trie.prefix_collisions_;
  return trie;
}

void TitleTrie::save(const std::filesystem::path& path) const { binio::write_file(path, serialize()); }

TitleTrie TitleTrie::load(const std::filesystem::path& path) { return deserialize(binio::read_file(path)); }

// ---------------------------------------------------------------------------

std::vector<std::string> CitedResponse::all_citations() const {
  std::vector<std::string> out;
  for (const auto& s : statements) out.insert(out.end(), s.citations.begin(), s.citations.end());
  return out;
}

std::string CitedResponse::plain_text() const {
  std::vector<std::string_view> parts;
  for (const auto& s : statements)
    if (!s.text.empty()) parts.push_back(s.text);
  return join(parts, " ");
}

CitedResponse parse_citations(std::string_view answer, const MarkerFormat& fmt) {
  CitedResponse out;
  std::size_t pos = 0;
  bool in_run = false;
  auto add_citation = [](Statement& s, std::string title) {
    if (std::find(s.citations.begin(), s.citations.end(), title) == s.citations.end())
      s.citations.push_back(std::move(title));
  };
  for (const auto& m : find_markers(answer, fmt)) {
    std::string between = collapse_whitespace(answer.substr(pos, m.outer.begin - pos));
    if (!between.empty() || !in_run) {
      out.statements.push_back({std::move(between), {}});
    }
    add_citation(out.statements.back(), normalize_title(m.inner.of(answer)));
    in_run = true;
    pos = m.outer.end;
  }
  std::string tail = collapse_whitespace(answer.substr(pos));
  if (!tail.empty()) out.statements.push_back({std::move(tail), {}});
  return out;
}

std::vector<std::string> invalid_citations(std::string_view answer, const TitleRegistry& registry,
                                           const MarkerFormat& fmt) {
  std::vector<std::string> bad;
  for (const auto& m : find_markers(answer, fmt)) {
    std::string t = normalize_title(m.inner.of(answer));
    if (!registry.contains_title(t)) bad.push_back(t);
  }
  return bad;
}

}  // namespace citeidx
