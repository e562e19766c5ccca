#include "citeidx/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "citeidx/parallel.hpp"

namespace citeidx {

std::string_view to_string(Source s) {
  switch (s) {
    case Source::wikipedia: return "wikipedia";
    case Source::commoncrawl: return "commoncrawl";
    case Source::arxiv: return "arxiv";
    case Source::repliqa: return "repliqa";
    case Source::other: return "other";
  }
  return "other";
}

Source parse_source(std::string_view label) {
  std::string l = to_lower_ascii(trim(label));
  if (l == "wikipedia") return Source::wikipedia;
  if (l == "commoncrawl") return Source::commoncrawl;
  if (l == "arxiv") return Source::arxiv;
  if (l == "repliqa") return Source::repliqa;
  return Source::other;
}

// ---------------------------------------------------------------------------
// Corpus

void Corpus::add(Document doc) {
  if (by_key_.count(doc.doc_key)) throw std::invalid_argument("duplicate doc_key: " + doc.doc_key);
  by_key_.emplace(doc.doc_key, docs_.size());
  docs_.push_back(std::move(doc));
}

void Corpus::sort_canonical() {
  std::stable_sort(docs_.begin(), docs_.end(), [](const Document& a, const Document& b) {
    if (a.source != b.source) return a.source < b.source;
    return a.doc_key < b.doc_key;
  });
  reindex();
}

void Corpus::reindex() {
  by_key_.clear();
  for (std::size_t i = 0; i < docs_.size(); ++i) by_key_.emplace(docs_[i].doc_key, i);
}

const Document* Corpus::find(std::string_view doc_key) const {
  auto it = by_key_.find(std::string(doc_key));
  return it == by_key_.end() ? nullptr : &docs_[it->second];
}

std::size_t Corpus::index_of(std::string_view doc_key) const {
  auto it = by_key_.find(std::string(doc_key));
  if (it == by_key_.end()) throw std::out_of_range("unknown doc_key: " + std::string(doc_key));
  return it->second;
}

std::size_t Corpus::total_tokens() const {
  std::size_t n = 0;
  for (const auto& d : docs_) n += d.token_count;
  return n;
}

// ---------------------------------------------------------------------------
// Ingest

Corpus ingest(std::istream& in, Source default_source, const Tokenizer& tokenizer, IngestStats& stats) {
  if (!in) throw std::runtime_error("unreadable record stream");
  struct Pending {
    std::size_t line;
    Document doc;
  };
  std::vector<Pending> pending;
  std::set<std::string> keys;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      ++stats.records;
      ++stats.malformed;
      stats.diagnostics.push_back("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
      continue;
    }
    if (line_no == 1 && ArtifactHeader::from_line(rec)) continue;
    ++stats.records;
    if (!rec.is_object() || !rec.contains("content") || !rec["content"].is_string()) {
      ++stats.malformed;
      stats.diagnostics.push_back("line " + std::to_string(line_no) + ": missing string field 'content'");
      continue;
    }
    Document doc;
    doc.content = rec["content"].get<std::string>();
    if (trim(doc.content).empty()) {
      ++stats.skipped_empty;
      continue;
    }
    doc.source = rec.contains("source") && rec["source"].is_string() ? parse_source(rec["source"].get<std::string>())
                                                                       : default_source;
    if (rec.contains("title") && rec["title"].is_string()) doc.title = rec["title"].get<std::string>();
    if (rec.contains("doc_key") && !rec["doc_key"].is_null()) {
      doc.doc_key = rec["doc_key"].is_string() ? rec["doc_key"].get<std::string>() : rec["doc_key"].dump();
    } else {
      doc.doc_key = std::string(to_string(doc.source)) + "-" + std::to_string(line_no);
    }
    if (!keys.insert(doc.doc_key).second) {
      ++stats.malformed;
      stats.diagnostics.push_back("line " + std::to_string(line_no) + ": duplicate doc_key '" + doc.doc_key + "'");
      continue;
    }
    pending.push_back({line_no, std::move(doc)});
  }
  if (in.bad()) throw std::runtime_error("read error on record stream");

  Corpus corpus;
  for (auto& p : pending) {
    p.doc.word_count = count_words(p.doc.content);
    p.doc.token_count = tokenizer.count(p.doc.content);
    corpus.add(std::move(p.doc));
  }
  corpus.sort_canonical();
  stats.ingested = corpus.size();
  return corpus;
}

Corpus ingest(const std::filesystem::path& path, Source default_source, const Tokenizer& tokenizer, IngestStats& stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open record stream: " + path.string());
  return ingest(in, default_source, tokenizer, stats);
}

json document_to_json(const Document& doc) {
  return {{"doc_key", doc.doc_key}, {"source", to_string(doc.source)}, {"title", doc.title},
          {"content", doc.content}, {"word_count", doc.word_count}, {"token_count", doc.token_count}};
}

Document document_from_json(const json& j) {
  Document d;
  d.doc_key = j.at("doc_key").get<std::string>();
  d.source = parse_source(j.value("source", "other"));
  d.title = j.value("title", "");
  d.content = j.at("content").get<std::string>();
  d.word_count = j.value("word_count", count_words(d.content));
  d.token_count = j.value("token_count", d.word_count);
  return d;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus, const std::optional<ArtifactHeader>& header) {
  JsonlWriter w(path, header);
  for (const auto& d : corpus.docs()) w.write(document_to_json(d));
  w.close();
}

Corpus read_corpus(const std::filesystem::path& path) {
  Corpus c;
  read_jsonl(path, [&](const json& j, std::size_t) { c.add(document_from_json(j)); });
  c.sort_canonical();
  return c;
}

// ---------------------------------------------------------------------------
// Titles

void TitleRegistry::insert(const std::string& title, const std::string& doc_key) {
  if (entries_.count(title)) throw std::invalid_argument("title already registered: " + title);
  if (by_doc_.count(doc_key)) throw std::invalid_argument("doc_key already registered: " + doc_key);
  entries_.emplace(title, doc_key);
  by_doc_.emplace(doc_key, title);
}

bool TitleRegistry::contains_title(std::string_view title) const { return entries_.count(std::string(title)) > 0; }

std::optional<std::string> TitleRegistry::doc_for(std::string_view title) const {
  auto it = entries_.find(std::string(title));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

const std::string& TitleRegistry::title_of(std::string_view doc_key) const {
  auto it = by_doc_.find(doc_key);
  if (it == by_doc_.end()) throw std::out_of_range("doc_key not in registry: " + std::string(doc_key));
  return it->second;
}

std::vector<std::string> TitleRegistry::titles() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [t, _] : entries_) out.push_back(t);
  return out;
}

namespace {

std::string integer_fallback(const std::string& base, const std::set<std::string>& taken) {
  for (std::size_t k = 1;; ++k) {
    std::string candidate = normalize_title(base + " (" + std::to_string(k) + ")");
    if (!taken.count(candidate)) return candidate;
  }
}

std::string document_prefix(std::string_view content, std::size_t words) {
  auto spans = word_spans(content);
  if (spans.size() <= words) return std::string(content);
  return std::string(content.substr(0, spans[words - 1].end));
}

}  // namespace

TitleRegistry assign_unique_titles(const Corpus& corpus, const GeneratorClient& namer, const TitleOptions& opts) {
  if (corpus.empty()) throw std::invalid_argument("assign_unique_titles: empty corpus");
  TitleRegistry registry;
  std::set<std::string> taken;
  for (const auto& doc : corpus.docs()) {
    const std::string original = normalize_title(doc.title);
    std::string title = original;
    int attempt = 0;
    std::vector<std::string> tried;
    bool namer_failed = false;
    while ((title.empty() || taken.count(title)) && attempt < opts.max_rename_attempts && !namer_failed) {
      ++attempt;
      if (!title.empty()) tried.push_back(title);
      std::string prompt = fill_template(opts.rename_prompt, {{"title", original},
                                                              {"taken", join(tried, "; ")},
                                                              {"document", document_prefix(doc.content, opts.prompt_words)}});
      try {
        title = normalize_title(generate(namer, prompt));
      } catch (const ClientError&) {
        namer_failed = true;
        title.clear();
      }
    }
    if (title.empty() || taken.count(title)) {
      title = integer_fallback(original.empty() ? std::string("Untitled document") : original, taken);
      attempt = 0;
    }
    // Integer suffixes are always free eventually.
    if (taken.count(title)) throw std::logic_error("title fallback collided: " + title);
    if (title != original) registry.rename_log().push_back({doc.doc_key, original, title, attempt});
    taken.insert(title);
    registry.insert(title, doc.doc_key);
  }
  return registry;
}

std::map<std::string, std::string> replay_rename_log(const Corpus& corpus, const std::vector<RenameEntry>& log) {
  std::map<std::string, std::string> by_doc;
  for (const auto& d : corpus.docs()) by_doc[d.doc_key] = normalize_title(d.title);
  for (const auto& e : log) by_doc[e.doc_key] = e.new_title;
  std::map<std::string, std::string> entries;
  for (const auto& [key, title] : by_doc) entries[title] = key;
  return entries;
}

void apply_registry(Corpus& corpus, const TitleRegistry& registry) {
  for (auto& d : corpus.docs()) d.title = registry.title_of(d.doc_key);
}

void write_registry(const std::filesystem::path& path, const TitleRegistry& registry,
                    const std::optional<ArtifactHeader>& header) {
  JsonlWriter w(path, header);
  for (const auto& [title, key] : registry.entries()) w.write({{"title", title}, {"doc_key", key}});
  w.write({{"section", "rename_log"}});
  for (const auto& e : registry.rename_log())
    w.write({{"doc_key", e.doc_key}, {"old_title", e.old_title}, {"new_title", e.new_title}, {"attempt", e.attempt}});
  w.close();
}

TitleRegistry read_registry(const std::filesystem::path& path) {
  TitleRegistry reg;
  bool in_log = false;
  read_jsonl(path, [&](const json& j, std::size_t) {
    if (j.contains("section")) {
      in_log = j["section"] == "rename_log";
      return;
    }
    if (in_log) {
      reg.rename_log().push_back({j.at("doc_key").get<std::string>(), j.at("old_title").get<std::string>(),
                                  j.at("new_title").get<std::string>(), j.at("attempt").get<int>()});
    } else {
      reg.insert(j.at("title").get<std::string>(), j.at("doc_key").get<std::string>());
    }
  });
  return reg;
}

// ---------------------------------------------------------------------------
// Chunks

std::vector<Chunk> chunk_document(const Document& doc, std::size_t words_per_chunk) {
  if (words_per_chunk == 0) throw std::invalid_argument("chunk_document: W must be >= 1");
  auto spans = word_spans(doc.content);
  std::vector<Chunk> out;
  out.reserve((spans.size() + words_per_chunk - 1) / words_per_chunk);
  for (std::size_t start = 0; start < spans.size(); start += words_per_chunk) {
    std::size_t end = std::min(spans.size(), start + words_per_chunk);
    Chunk c;
    c.doc_key = doc.doc_key;
    c.chunk_index = out.size();
    c.char_span = {spans[start].begin, spans[end - 1].end};
    c.words.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) c.words.emplace_back(spans[i].of(doc.content));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Chunk> chunk_corpus(const Corpus& corpus, std::size_t words_per_chunk, unsigned jobs) {
  auto per_doc = parallel_map(corpus.size(), jobs,
                              [&](std::size_t i) { return chunk_document(corpus.docs()[i], words_per_chunk); });
  std::vector<Chunk> out;
  for (auto& v : per_doc)
    for (auto& c : v) out.push_back(std::move(c));
  return out;
}

json chunk_to_json(const Chunk& c) {
  return {{"doc_key", c.doc_key},
          {"chunk_index", c.chunk_index},
          {"char_span", {c.char_span.begin, c.char_span.end}},
          {"text", c.text()}};
}

Chunk chunk_from_json(const json& j) {
  Chunk c;
  c.doc_key = j.at("doc_key").get<std::string>();
  c.chunk_index = j.at("chunk_index").get<std::size_t>();
  c.char_span = {j.at("char_span").at(0).get<std::size_t>(), j.at("char_span").at(1).get<std::size_t>()};
  const auto text = j.at("text").get<std::string>();
  for (auto w : split_words(text)) c.words.emplace_back(w);
  return c;
}

}  // namespace citeidx
