#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "citeidx/artifact.hpp"
#include "citeidx/model_io.hpp"
#include "citeidx/prompts.hpp"
#include "citeidx/text.hpp"
#include "citeidx/tokenizer.hpp"

namespace citeidx {

enum class Source { wikipedia, commoncrawl, arxiv, repliqa, other };

std::string_view to_string(Source s);
/// Unknown labels map to Source::other.
Source parse_source(std::string_view label);

struct Document {
  std::string doc_key;
  Source source = Source::other;
  std::string title;  // raw until a TitleRegistry is applied
  std::string content;
  std::size_t word_count = 0;
  std::size_t token_count = 0;
};

/// Documents in canonical (source, doc_key) order with unique keys.
class Corpus {
 public:
  /// Throws std::invalid_argument on a duplicate doc_key.
  void add(Document doc);
  void sort_canonical();

  const std::vector<Document>& docs() const { return docs_; }
  std::vector<Document>& docs() { return docs_; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const Document* find(std::string_view doc_key) const;
  std::size_t index_of(std::string_view doc_key) const;  // throws std::out_of_range
  std::size_t total_tokens() const;

 private:
  void reindex();
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_key_;
};

struct IngestStats {
  std::size_t records = 0;
  std::size_t ingested = 0;
  std::size_t skipped_empty = 0;
  std::size_t malformed = 0;
  std::vector<std::string> diagnostics;
};

/// Parses line-delimited records {doc_key?, title?, content, source?}. A record's
/// own source label wins over `default_source`. Missing doc_keys become
/// "<source>-<line>". Throws std::runtime_error if the stream cannot be read.
Corpus ingest(std::istream& in, Source default_source, const Tokenizer& tokenizer, IngestStats& stats);
Corpus ingest(const std::filesystem::path& path, Source default_source, const Tokenizer& tokenizer, IngestStats& stats);

json document_to_json(const Document& doc);
Document document_from_json(const json& j);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus, const std::optional<ArtifactHeader>& header);
Corpus read_corpus(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Titles

struct RenameEntry {
  std::string doc_key;
  std::string old_title;
  std::string new_title;
  int attempt = 0;  // 1-based namer attempt that produced new_title; 0 = integer fallback
  bool operator==(const RenameEntry&) const = default;
};

class TitleRegistry {
 public:
  /// Throws std::invalid_argument if the title or doc_key is already registered.
  void insert(const std::string& title, const std::string& doc_key);

  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::vector<RenameEntry>& rename_log() const { return rename_log_; }
  std::vector<RenameEntry>& rename_log() { return rename_log_; }

  bool contains_title(std::string_view title) const;
  std::optional<std::string> doc_for(std::string_view title) const;
  /// Canonical title of a document; throws std::out_of_range if unknown.
  const std::string& title_of(std::string_view doc_key) const;
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> titles() const;

  bool operator==(const TitleRegistry& o) const {
    return entries_ == o.entries_ && rename_log_ == o.rename_log_;
  }

 private:
  std::map<std::string, std::string> entries_;
  std::map<std::string, std::string, std::less<>> by_doc_;
  std::vector<RenameEntry> rename_log_;
};

struct TitleOptions {
  int max_rename_attempts = 5;
  std::string rename_prompt = PromptSet::defaults().title_rename;
  /// Document prefix (in words) shown to the namer.
  std::size_t prompt_words = 200;
};

/// Sequential pass in corpus order. The first holder of a normalized title keeps
/// it; later holders and untitled documents are renamed by the namer, up to
/// max_rename_attempts, then by the integer fallback "title (k)".
TitleRegistry assign_unique_titles(const Corpus& corpus, const GeneratorClient& namer, const TitleOptions& opts = {});

/// Applies normalized raw titles, then each rename_log entry in order.
std::map<std::string, std::string> replay_rename_log(const Corpus& corpus, const std::vector<RenameEntry>& log);

/// Sets every document's title to its registry title.
void apply_registry(Corpus& corpus, const TitleRegistry& registry);

void write_registry(const std::filesystem::path& path, const TitleRegistry& registry,
                    const std::optional<ArtifactHeader>& header);
TitleRegistry read_registry(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Chunks

struct Chunk {
  std::string doc_key;
  std::size_t chunk_index = 0;
  std::vector<std::string> words;
  ByteSpan char_span;

  std::string text() const { return join(words, " "); }
};

/// ceil(word_count / W) chunks; throws std::invalid_argument when W == 0.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t words_per_chunk);
/// All chunks in corpus order, then chunk_index.
std::vector<Chunk> chunk_corpus(const Corpus& corpus, std::size_t words_per_chunk, unsigned jobs = 1);

json chunk_to_json(const Chunk& c);
Chunk chunk_from_json(const json& j);

}  // namespace citeidx
