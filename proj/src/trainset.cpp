#include "citeidx/trainset.hpp"

#include <fmt/format.h>

namespace citeidx {

void Bookkeeping::add(const PretrainRecord& r) {
  tokens[r.variant] += r.token_count;
  records[r.variant] += 1;
}

std::size_t Bookkeeping::augmented_tokens() const {
  std::size_t n = 0;
  for (auto v : {Variant::forward, Variant::backward})
    if (auto it = tokens.find(v); it != tokens.end()) n += it->second;
  return n;
}

double Bookkeeping::multiplier(Variant v) const {
  auto it = tokens.find(v);
  if (base_tokens == 0 || it == tokens.end()) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(base_tokens);
}

double Bookkeeping::combined_multiplier() const {
  return base_tokens ? static_cast<double>(augmented_tokens()) / static_cast<double>(base_tokens) : 0.0;
}

json Bookkeeping::to_json() const {
  json variants = json::object();
  for (const auto& [v, n] : tokens)
    variants[std::string(to_string(v))] = {{"tokens", n}, {"records", records.at(v)}, {"multiplier", multiplier(v)}};
  return {{"base_tokens", base_tokens},
          {"variants", variants},
          {"augmented_tokens", augmented_tokens()},
          {"forward_multiplier", multiplier(Variant::forward)},
          {"backward_multiplier", multiplier(Variant::backward)},
          {"combined_multiplier", combined_multiplier()}};
}

std::string format_token_count(std::size_t n) {
  const double d = static_cast<double>(n);
  if (n >= 1'000'000'000) return fmt::format("{:.2f}B", d / 1e9);
  if (n >= 1'000'000) return fmt::format("{:.0f}M", d / 1e6);
  if (n >= 1'000) return fmt::format("{:.1f}K", d / 1e3);
  return std::to_string(n);
}

std::string format_bookkeeping(const Bookkeeping& b) {
  std::string out = fmt::format("Base corpus: {} tokens\n", format_token_count(b.base_tokens));
  auto line = [&](const char* label, std::size_t tokens, double mult) {
    out += fmt::format("{}: {} augmented tokens ({:.1f}x the original corpus)\n", label, format_token_count(tokens), mult);
  };
  for (auto [v, label] : {std::pair{Variant::passive, "Passive indexing"}, std::pair{Variant::repeat, "Repeat"},
                          std::pair{Variant::repeat_plus, "Repeat+"}}) {
    if (auto it = b.tokens.find(v); it != b.tokens.end())
      out += fmt::format("{}: {} tokens ({:.1f}x the original corpus)\n", label, format_token_count(it->second),
                         b.multiplier(v));
  }
  auto get = [&](Variant v) {
    auto it = b.tokens.find(v);
    return it == b.tokens.end() ? std::size_t{0} : it->second;
  };
  line("Forward augmentation", get(Variant::forward), b.multiplier(Variant::forward));
  line("Backward augmentation", get(Variant::backward), b.multiplier(Variant::backward));
  out += fmt::format("Forward + backward: {} augmented tokens ({:.2f}x original {} tokens)\n",
                     format_token_count(b.augmented_tokens()), b.combined_multiplier(),
                     format_token_count(b.base_tokens));
  return out;
}

}  // namespace citeidx
