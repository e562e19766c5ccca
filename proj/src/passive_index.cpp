#include "citeidx/passive_index.hpp"

#include <set>
#include <stdexcept>

#include "citeidx/parallel.hpp"
#include "citeidx/rng.hpp"

namespace citeidx {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::passive: return "passive";
    case Variant::repeat: return "repeat";
    case Variant::repeat_plus: return "repeat+";
    case Variant::forward: return "forward";
    case Variant::backward: return "backward";
  }
  return "passive";
}

Variant parse_variant(std::string_view s) {
  if (s == "passive") return Variant::passive;
  if (s == "repeat") return Variant::repeat;
  if (s == "repeat+" || s == "repeat_plus") return Variant::repeat_plus;
  if (s == "forward") return Variant::forward;
  if (s == "backward") return Variant::backward;
  throw std::invalid_argument("unknown variant: " + std::string(s));
}

json record_to_json(const PretrainRecord& r) {
  json j = {{"variant", to_string(r.variant)},
            {"doc_keys", r.doc_keys},
            {"piece_index", r.piece_index},
            {"token_count", r.token_count},
            {"text", r.text}};
  if (!r.segment.empty()) j["segment"] = r.segment;
  return j;
}

PretrainRecord record_from_json(const json& j) {
  PretrainRecord r;
  r.variant = parse_variant(j.at("variant").get<std::string>());
  r.doc_keys = j.at("doc_keys").get<std::vector<std::string>>();
  r.piece_index = j.value("piece_index", std::size_t{0});
  r.token_count = j.value("token_count", std::size_t{0});
  r.text = j.at("text").get<std::string>();
  r.segment = j.value("segment", "");
  return r;
}

namespace {

std::vector<PretrainRecord> flatten(std::vector<std::vector<PretrainRecord>>&& nested) {
  std::vector<PretrainRecord> out;
  for (auto& v : nested)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

bool ends_sentence(std::string_view s) {
  while (!s.empty()) {
    char c = s.back();
    if (c == '"' || c == '\'' || c == ')' || c == ']') {
      s.remove_suffix(1);
    } else if (s.ends_with("\xE2\x80\x9D") || s.ends_with("\xE2\x80\x99")) {
      s.remove_suffix(3);
    } else {
      break;
    }
  }
  return !s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?');
}

}  // namespace

std::vector<PretrainRecord> emit_passive(const Corpus& corpus, const TitleRegistry& registry,
                                         const Tokenizer& tokenizer, const PassiveOptions& opts,
                                         PassiveAudit* audit) {
  if (opts.window == 0) throw std::invalid_argument("emit_passive: window must be >= 1");
  struct DocOut {
    std::vector<PretrainRecord> records;
    std::size_t window_tokens = 0;
    std::size_t title_tokens = 0;
  };
  auto per_doc = parallel_map(corpus.size(), opts.jobs, [&](std::size_t i) {
    const Document& doc = corpus.docs()[i];
    DocOut out;
    const std::string suffix = " " + opts.markers.wrap(registry.title_of(doc.doc_key));
    const std::size_t suffix_tokens = tokenizer.count(suffix);
    auto spans = tokenizer.spans(doc.content);
    for (std::size_t start = 0, piece = 0; start < spans.size(); start += opts.window, ++piece) {
      const std::size_t end = std::min(spans.size(), start + opts.window);
      PretrainRecord r;
      r.variant = Variant::passive;
      r.doc_keys = {doc.doc_key};
      r.piece_index = piece;
      r.text = std::string(doc.content.substr(spans[start].begin, spans[end - 1].end - spans[start].begin)) + suffix;
      r.token_count = (end - start) + suffix_tokens;
      out.window_tokens += end - start;
      out.title_tokens += suffix_tokens;
      out.records.push_back(std::move(r));
    }
    return out;
  });
  std::vector<PretrainRecord> records;
  PassiveAudit a;
  a.corpus_tokens = corpus.total_tokens();
  for (auto& d : per_doc) {
    a.window_tokens += d.window_tokens;
    a.title_tokens += d.title_tokens;
    for (auto& r : d.records) {
      a.emitted_tokens += r.token_count;
      records.push_back(std::move(r));
    }
  }
  a.records = records.size();
  if (audit) *audit = a;
  return records;
}

std::vector<PretrainRecord> emit_repeat(const Corpus& corpus, const TitleRegistry& registry,
                                        const Tokenizer& tokenizer, const RepeatOptions& opts) {
  auto per_doc = parallel_map(corpus.size(), opts.jobs, [&](std::size_t i) {
    const Document& doc = corpus.docs()[i];
    std::vector<PretrainRecord> out;
    if (trim(doc.content).empty()) return out;
    const std::string marker = opts.markers.wrap(registry.title_of(doc.doc_key));
    std::string text;
    std::size_t pos = 0;
    for (const auto& s : sentence_spans(doc.content)) {
      text.append(doc.content, pos, s.end - pos);
      pos = s.end;
      if (ends_sentence(s.of(doc.content))) text += " " + marker;
    }
    text.append(doc.content, pos);
    text = trim(text);
    if (opts.terminal_marker) text += " " + marker;
    PretrainRecord r;
    r.variant = Variant::repeat;
    r.doc_keys = {doc.doc_key};
    r.segment = opts.terminal_marker ? "inline+terminal" : "inline";
    r.token_count = tokenizer.count(text);
    r.text = std::move(text);
    out.push_back(std::move(r));
    return out;
  });
  return flatten(std::move(per_doc));
}

std::vector<PretrainRecord> emit_repeat_plus(const Corpus& corpus, const TitleRegistry& registry,
                                             const Tokenizer& tokenizer, const RepeatPlusOptions& opts) {
  auto per_doc = parallel_map(corpus.size(), opts.jobs, [&](std::size_t i) {
    const Document& doc = corpus.docs()[i];
    std::vector<PretrainRecord> out;
    const std::string full = trim(doc.content);
    if (full.empty()) return out;
    const std::string suffix = " " + opts.markers.wrap(registry.title_of(doc.doc_key));
    Rng rng(derive_seed(opts.seed, doc.doc_key));

    std::vector<std::pair<std::string, std::string>> segments;  // (level, text)
    segments.emplace_back("full", full);

    auto words = word_spans(doc.content);
    if (words.size() >= 3) {
      const std::size_t len = (words.size() + 2) / 3;
      const std::size_t start = rng.below(words.size() - len + 1);
      const auto b = words[start].begin;
      const auto e = words[start + len - 1].end;
      segments.emplace_back("third", doc.content.substr(b, e - b));
    }
    auto paragraphs = paragraph_spans(doc.content);
    if (!paragraphs.empty())
      segments.emplace_back("paragraph", std::string(paragraphs[rng.below(paragraphs.size())].of(doc.content)));
    auto sentences = sentence_spans(doc.content);
    if (!sentences.empty())
      segments.emplace_back("sentence", std::string(sentences[rng.below(sentences.size())].of(doc.content)));

    std::set<std::string> seen;
    for (auto& [level, seg] : segments) {
      if (!seen.insert(seg).second) continue;
      PretrainRecord r;
      r.variant = Variant::repeat_plus;
      r.doc_keys = {doc.doc_key};
      r.segment = level;
      r.piece_index = out.size();
      r.text = seg + suffix;
      r.token_count = tokenizer.count(r.text);
      out.push_back(std::move(r));
    }
    return out;
  });
  return flatten(std::move(per_doc));
}

bool record_markers_valid(const PretrainRecord& r, const TitleRegistry& registry, const MarkerFormat& fmt) {
  try {
    auto spans = find_markers(r.text, fmt);
    if (spans.empty()) return false;
    for (const auto& m : spans)
      if (!registry.contains_title(m.inner.of(r.text))) return false;
    return true;
  } catch (const MarkerError&) {
    return false;
  }
}

}  // namespace citeidx
