#include "citeidx/forward_aug.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "citeidx/parallel.hpp"

namespace citeidx {

json forward_qa_to_json(const ForwardQA& qa) {
  json log = json::array();
  for (const auto& e : qa.repair_log) log.push_back({{"raw", e.raw}, {"canonical", e.canonical}, {"kind", e.kind}});
  return {{"doc_key", qa.doc_key}, {"entity", qa.entity}, {"question", qa.question}, {"answer", qa.answer},
          {"repair_log", log}};
}

ForwardQA forward_qa_from_json(const json& j) {
  ForwardQA qa;
  qa.doc_key = j.at("doc_key").get<std::string>();
  qa.entity = j.at("entity").get<std::string>();
  qa.question = j.at("question").get<std::string>();
  qa.answer = j.at("answer").get<std::string>();
  for (const auto& e : j.value("repair_log", json::array()))
    qa.repair_log.push_back({e.at("raw").get<std::string>(), e.at("canonical").get<std::string>(),
                             e.at("kind").get<std::string>()});
  return qa;
}

namespace {

std::string strip_list_prefix(std::string_view line) {
  std::string s = trim(line);
  static const std::regex bullet(R"(^(?:[-*•]|\d+[.)]|•)\s+)");
  std::smatch m;
  if (std::regex_search(s, m, bullet)) s = s.substr(static_cast<std::size_t>(m.length(0)));
  if (s.starts_with("\xE2\x80\xA2")) s = trim(s.substr(3));
  return trim(s);
}

}  // namespace

std::vector<std::string> parse_entity_list(std::string_view response, std::size_t n_max) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while (pos <= response.size() && out.size() < n_max) {
    auto eol = response.find('\n', pos);
    auto line = response.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    std::string e = strip_list_prefix(line);
    if (!e.empty()) {
      std::u32string key = fuzzy_key(e);
      std::string k = key.empty() ? to_lower_ascii(e) : u32_to_utf8(key);
      if (seen.insert(k).second) out.push_back(std::move(e));
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return out;
}

std::optional<EntitySet> extract_entities(const Document& doc, std::size_t n_max, const GeneratorClient& gen,
                                          const PromptSet& prompts, std::string* diagnostic) {
  if (trim(doc.content).empty()) {
    if (diagnostic) *diagnostic = doc.doc_key + ": empty document";
    return std::nullopt;
  }
  std::string response;
  try {
    response = generate(gen, fill_template(prompts.entity_extraction, {{"document", doc.content}}));
  } catch (const ClientError& e) {
    if (diagnostic) *diagnostic = doc.doc_key + ": entity extraction failed: " + e.what();
    return std::nullopt;
  }
  auto entities = parse_entity_list(response, n_max);
  if (entities.empty()) {
    if (diagnostic) *diagnostic = doc.doc_key + ": no entities parsed";
    return std::nullopt;
  }
  return EntitySet{doc.doc_key, std::move(entities)};
}

std::vector<std::pair<std::string, std::string>> parse_qa_blocks(std::string_view response, std::size_t* dropped) {
  static const std::regex q_header(R"(^\s*(?:#+\s*)?\**\s*(?:question|q)\s*\d*\s*\**\s*[:.]\s*\**\s*(.*)$)",
                                   std::regex::icase);
  static const std::regex a_header(R"(^\s*(?:#+\s*)?\**\s*(?:answer|a)\s*\d*\s*\**\s*[:.]\s*\**\s*(.*)$)",
                                   std::regex::icase);
  enum class State { none, question, answer };
  State state = State::none;
  std::vector<std::pair<std::string, std::string>> out;
  std::string q, a;
  std::size_t drop = 0;
  bool have_block = false;
  auto flush = [&] {
    if (!have_block) return;
    std::string qq = collapse_whitespace(q), aa = trim(a);
    if (!qq.empty() && !aa.empty()) {
      out.emplace_back(std::move(qq), std::move(aa));
    } else {
      ++drop;
    }
    q.clear();
    a.clear();
    have_block = false;
  };
  std::size_t pos = 0;
  while (pos <= response.size()) {
    auto eol = response.find('\n', pos);
    std::string line(response.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
    std::smatch m;
    if (std::regex_match(line, m, q_header)) {
      flush();
      have_block = true;
      state = State::question;
      q = m[1].str();
    } else if (std::regex_match(line, m, a_header) && state != State::none) {
      state = State::answer;
      a = m[1].str();
    } else if (state == State::question) {
      q += " " + line;
    } else if (state == State::answer) {
      a += "\n" + line;
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  flush();
  if (dropped) *dropped = drop;
  return out;
}

std::vector<ForwardQA> generate_forward_qa(const Document& doc, const std::string& entity,
                                           const GeneratorClient& gen, const PromptSet& prompts,
                                           std::size_t* dropped, bool* unparseable) {
  std::string prompt =
      fill_template(prompts.forward_qa, {{"title", doc.title}, {"document", doc.content}, {"entity", entity}});
  std::string response = generate(gen, prompt);
  std::size_t drop = 0;
  auto blocks = parse_qa_blocks(response, &drop);
  if (dropped) *dropped = drop;
  if (unparseable) *unparseable = blocks.empty() && drop == 0;
  std::vector<ForwardQA> out;
  for (auto& [q, a] : blocks) out.push_back({doc.doc_key, entity, std::move(q), std::move(a), {}});
  return out;
}

namespace {

struct FoundMarker {
  ByteSpan outer;
  std::string inner;
};

std::vector<FoundMarker> all_markers(std::string_view text, const MarkerFormat& fmt) {
  std::vector<FoundMarker> found;
  for (const auto& f : {fmt, MarkerFormat::source_tags()}) {
    for (const auto& m : find_markers(text, f)) found.push_back({m.outer, std::string(m.inner.of(text))});
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.outer.begin < b.outer.begin; });
  return found;
}

std::string remove_delimiters(std::string_view text, const MarkerFormat& fmt) {
  std::string s(text);
  for (const auto& d : {fmt.open, fmt.close, MarkerFormat::source_tags().open, MarkerFormat::source_tags().close}) {
    for (std::size_t p; (p = s.find(d)) != std::string::npos;) s.erase(p, d.size());
  }
  return s;
}

bool edge_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && !std::isalnum(u);
}

}  // namespace

std::pair<std::string, std::vector<RepairEntry>> repair_doc_ids(std::string_view text, std::string_view true_title,
                                                                const MarkerFormat& fmt, double threshold) {
  const std::string title(true_title);
  const std::string marked = fmt.wrap(title);
  std::vector<RepairEntry> log;

  std::string work(text);
  std::vector<FoundMarker> markers;
  try {
    markers = all_markers(work, fmt);
  } catch (const MarkerError&) {
    work = remove_delimiters(work, fmt);
  }

  if (!markers.empty()) {
    std::string out;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < markers.size(); ++i) {
      out.append(work, pos, markers[i].outer.begin - pos);
      out += i == 0 ? marked : title;
      log.push_back({markers[i].inner, title, i == 0 ? "marker" : "unwrapped"});
      pos = markers[i].outer.end;
    }
    out.append(work, pos);
    return {out, log};
  }

  if (auto p = work.find(title); !title.empty() && p != std::string::npos) {
    work.replace(p, title.size(), marked);
    log.push_back({title, title, "exact"});
    return {work, log};
  }

  // Best fuzzy word window; ties keep the earliest, then the longer window.
  auto words = word_spans(work);
  const std::size_t max_len = count_words(title) + 2;
  double best = -1.0;
  ByteSpan best_span{};
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t len = 1; len <= max_len && i + len <= words.size(); ++len) {
      ByteSpan s{words[i].begin, words[i + len - 1].end};
      while (s.begin < s.end && edge_punct(work[s.begin])) ++s.begin;
      while (s.end > s.begin && edge_punct(work[s.end - 1])) --s.end;
      if (s.begin == s.end) continue;
      double r = title_similarity(s.of(work), title);
      if (r > best || (r == best && s.begin == best_span.begin && s.size() > best_span.size())) {
        best = r;
        best_span = s;
      }
    }
  }
  if (best >= threshold) {
    std::string raw(best_span.of(work));
    work.replace(best_span.begin, best_span.size(), marked);
    log.push_back({raw, title, "fuzzy"});
    return {work, log};
  }

  // Inject before the first sentence's closing punctuation.
  auto sentences = sentence_spans(work);
  std::size_t at = work.size();
  if (!sentences.empty()) {
    at = sentences.front().end;
    while (at > sentences.front().begin && (work[at - 1] == '.' || work[at - 1] == '?' || work[at - 1] == '!')) --at;
  }
  while (at > 0 && is_space(work[at - 1])) --at;
  work.insert(at, (at == 0 ? "" : " ") + marked);
  log.push_back({"", title, "injected"});
  return {work, log};
}

std::string unwrap_title_markers(std::string_view text, std::string_view true_title, const MarkerFormat& fmt) {
  std::vector<FoundMarker> markers;
  try {
    markers = all_markers(text, fmt);
  } catch (const MarkerError&) {
    return remove_delimiters(text, fmt);
  }
  std::string out;
  std::size_t pos = 0;
  for (const auto& m : markers) {
    out.append(text.substr(pos, m.outer.begin - pos));
    out += true_title;
    pos = m.outer.end;
  }
  out.append(text.substr(pos));
  return out;
}

std::vector<ForwardQA> run_forward(const Corpus& corpus, const TitleRegistry& registry, const GeneratorClient& gen,
                                   const ForwardOptions& opts, ForwardStats& stats) {
  struct EntityOut {
    std::optional<EntitySet> set;
    std::string diagnostic;
  };
  auto entity_sets = parallel_map(corpus.size(), opts.in_flight, [&](std::size_t i) {
    EntityOut o;
    o.set = extract_entities(corpus.docs()[i], opts.n_max, gen, opts.prompts, &o.diagnostic);
    return o;
  });

  struct Job {
    std::size_t doc;
    std::string entity;
  };
  std::vector<Job> jobs;
  stats.documents += corpus.size();
  for (std::size_t i = 0; i < entity_sets.size(); ++i) {
    if (!entity_sets[i].set) {
      ++stats.documents_skipped;
      stats.diagnostics.push_back(entity_sets[i].diagnostic);
      continue;
    }
    for (auto& e : entity_sets[i].set->entities) jobs.push_back({i, e});
  }
  stats.entities += jobs.size();

  struct JobOut {
    std::vector<ForwardQA> pairs;
    std::size_t dropped = 0;
    bool unparseable = false;
    std::string failure;
  };
  auto results = parallel_map(jobs.size(), opts.in_flight, [&](std::size_t j) {
    JobOut o;
    const Document& doc = corpus.docs()[jobs[j].doc];
    try {
      o.pairs = generate_forward_qa(doc, jobs[j].entity, gen, opts.prompts, &o.dropped, &o.unparseable);
    } catch (const ClientError& e) {
      o.failure = doc.doc_key + " / " + jobs[j].entity + ": " + e.what();
      return o;
    }
    const std::string& title = registry.title_of(doc.doc_key);
    for (auto& qa : o.pairs) {
      auto [q, log] = repair_doc_ids(qa.question, title, opts.markers, opts.fuzzy_threshold);
      qa.question = std::move(q);
      qa.repair_log = std::move(log);
      qa.answer = unwrap_title_markers(qa.answer, title, opts.markers);
    }
    return o;
  });

  std::vector<ForwardQA> out;
  for (auto& r : results) {
    if (!r.failure.empty()) {
      ++stats.generator_failures;
      stats.diagnostics.push_back(r.failure);
      continue;
    }
    if (r.unparseable) ++stats.responses_unparseable;
    stats.pairs_dropped += r.dropped;
    stats.pairs_kept += r.pairs.size();
    for (auto& qa : r.pairs) out.push_back(std::move(qa));
  }
  return out;
}

PretrainRecord forward_record(const ForwardQA& qa, const Tokenizer& tokenizer) {
  PretrainRecord r;
  r.variant = Variant::forward;
  r.doc_keys = {qa.doc_key};
  r.text = qa.question + "\n\n" + qa.answer;
  r.token_count = tokenizer.count(r.text);
  return r;
}

}  // namespace citeidx
