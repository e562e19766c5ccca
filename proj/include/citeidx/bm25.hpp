#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "citeidx/corpus.hpp"

namespace citeidx {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Stable identity of an indexed chunk; ranking ties break on (doc_key, chunk_index).
struct ChunkRef {
  std::string doc_key;
  std::uint64_t chunk_index = 0;
  auto operator<=>(const ChunkRef&) const = default;
};

struct Posting {
  std::uint32_t chunk;  // position in the index's chunk table
  std::uint32_t tf;
  bool operator==(const Posting&) const = default;
};

struct ScoredChunk {
  std::uint32_t chunk;
  double score;
};

/// Sparse lexical index over chunks (Okapi BM25).
///
/// idf(t) = max(0, ln((N - df + 0.5) / (df + 0.5) + 1))
/// score(q, c) = sum over query terms t (with repetition) of
///               idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(c) / avg_len))
class InvertedIndex {
 public:
  InvertedIndex() = default;

  /// Throws std::invalid_argument for an empty chunk list and std::runtime_error
  /// when no chunk contains a single term.
  static InvertedIndex build(const std::vector<Chunk>& chunks, Bm25Params params = {}, unsigned jobs = 1);

  /// Top-k chunks by descending score; zero scores are excluded. k must be >= 1.
  std::vector<ScoredChunk> retrieve(std::string_view query, std::size_t k) const;
  /// Score of one chunk for a query (0 if no term matches).
  double score(std::string_view query, std::uint32_t chunk) const;

  double idf(std::string_view term) const;
  const std::vector<Posting>* postings(std::string_view term) const;
  std::size_t n_chunks() const { return refs_.size(); }
  std::size_t n_terms() const { return vocab_.size(); }
  const std::vector<std::uint32_t>& doc_lengths() const { return lengths_; }
  double avg_doc_length() const { return avg_len_; }
  const Bm25Params& params() const { return params_; }
  const ChunkRef& ref(std::uint32_t chunk) const { return refs_.at(chunk); }
  /// Lexicographically sorted vocabulary.
  const std::vector<std::string>& vocabulary() const { return vocab_; }

  std::vector<std::uint8_t> serialize() const;
  static InvertedIndex deserialize(const std::vector<std::uint8_t>& container);
  void save(const std::filesystem::path& path) const;
  static InvertedIndex load(const std::filesystem::path& path);
  /// Human-readable "term<TAB>df<TAB>chunk:tf ..." lines, one per term, sorted.
  void dump_postings(std::ostream& out) const;

 private:
  void finalize();

  Bm25Params params_;
  std::vector<ChunkRef> refs_;
  std::vector<std::uint32_t> lengths_;
  double avg_len_ = 0.0;
  std::vector<std::string> vocab_;
  std::vector<std::vector<Posting>> postings_;
  std::unordered_map<std::string, std::uint32_t> term_ids_;
  std::vector<double> norm_;           // k1 * (1 - b + b * len / avg)
  std::vector<std::uint32_t> tie_rank_;  // position of each chunk in (doc_key, chunk_index) order
};

/// Anything that can return ranked chunks for a text query.
class ChunkRetriever {
 public:
  virtual ~ChunkRetriever() = default;
  virtual std::vector<ScoredChunk> retrieve(std::string_view query, std::size_t k) const = 0;
};

class Bm25Retriever final : public ChunkRetriever {
 public:
  explicit Bm25Retriever(const InvertedIndex& index) : index_(index) {}
  std::vector<ScoredChunk> retrieve(std::string_view query, std::size_t k) const override {
    return index_.retrieve(query, k);
  }

 private:
  const InvertedIndex& index_;
};

}  // namespace citeidx
