#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "citeidx/corpus.hpp"

namespace citeidx::testing {

struct ToyOptions {
  std::size_t docs = 100;
  std::size_t topics = 8;
  std::size_t min_paragraphs = 2;
  std::size_t max_paragraphs = 5;
  double duplicate_title_rate = 0.0;  // fraction of documents reusing an earlier title
  double untitled_rate = 0.0;
  std::uint64_t seed = 1;
};

/// Ingest-ready records {doc_key, title, content, source}: topical English-like
/// prose with capitalized named entities, sentence punctuation and blank-line
/// paragraphs. Documents sharing a topic share vocabulary and entities.
std::vector<json> toy_records(const ToyOptions& opts);
Corpus toy_corpus(const ToyOptions& opts);
void write_toy_jsonl(const std::filesystem::path& path, const ToyOptions& opts);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

/// Whole file as bytes.
std::string slurp(const std::filesystem::path& path);

}  // namespace citeidx::testing
