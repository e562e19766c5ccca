#include "citeidx/tokenizer.hpp"

#include <stdexcept>
#include <string>

namespace citeidx {

std::vector<TokenId> WhitespaceTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (auto w : split_words(text)) ids.push_back(static_cast<TokenId>(fnv1a64(w) & 0x7fffffff));
  return ids;
}

std::vector<ByteSpan> ByteTokenizer::spans(std::string_view text) const {
  std::vector<ByteSpan> out(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) out[i] = {i, i + 1};
  return out;
}

std::vector<TokenId> ByteTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) ids[i] = static_cast<unsigned char>(text[i]);
  return ids;
}

namespace {
std::size_t utf8_len(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c >> 5) == 0x6) return 2;
  if ((c >> 4) == 0xE) return 3;
  if ((c >> 3) == 0x1E) return 4;
  return 1;
}
}  // namespace

std::vector<ByteSpan> CharTokenizer::spans(std::string_view text) const {
  std::vector<ByteSpan> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = std::min(utf8_len(static_cast<unsigned char>(text[i])), text.size() - i);
    out.push_back({i, i + len});
    i += len;
  }
  return out;
}

std::vector<TokenId> CharTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (char32_t cp : utf8_to_u32(text)) ids.push_back(static_cast<TokenId>(cp));
  return ids;
}

std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view name) {
  if (name == "whitespace") return std::make_shared<WhitespaceTokenizer>();
  if (name == "byte") return std::make_shared<ByteTokenizer>();
  if (name == "char") return std::make_shared<CharTokenizer>();
  throw std::invalid_argument("unknown tokenizer: " + std::string(name));
}

}  // namespace citeidx
