#include "citeidx/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "citeidx/binio.hpp"
#include "citeidx/parallel.hpp"
#include "citeidx/simd.hpp"

namespace citeidx {

InvertedIndex InvertedIndex::build(const std::vector<Chunk>& chunks, Bm25Params params, unsigned jobs) {
  if (chunks.empty()) throw std::invalid_argument("build_index: no chunks");
  if (chunks.size() > UINT32_MAX) throw std::invalid_argument("build_index: too many chunks");

  using Counts = std::vector<std::pair<std::string, std::uint32_t>>;
  auto per_chunk = parallel_map(chunks.size(), jobs, [&](std::size_t i) {
    std::map<std::string, std::uint32_t> tf;
    for (const auto& w : chunks[i].words)
      for (auto& t : analyze_terms(w)) ++tf[t];
    return Counts(tf.begin(), tf.end());
  });

  InvertedIndex idx;
  idx.params_ = params;
  idx.refs_.reserve(chunks.size());
  idx.lengths_.reserve(chunks.size());
  std::map<std::string, std::vector<Posting>> merged;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    idx.refs_.push_back({chunks[i].doc_key, chunks[i].chunk_index});
    std::uint32_t len = 0;
    for (const auto& [term, tf] : per_chunk[i]) {
      merged[term].push_back({static_cast<std::uint32_t>(i), tf});
      len += tf;
    }
    idx.lengths_.push_back(len);
    total += len;
  }
  if (total == 0) throw std::runtime_error("build_index: corpus has no indexable terms");
  idx.vocab_.reserve(merged.size());
  idx.postings_.reserve(merged.size());
  for (auto& [term, list] : merged) {
    idx.vocab_.push_back(term);
    idx.postings_.push_back(std::move(list));
  }
  idx.finalize();
  return idx;
}

void InvertedIndex::finalize() {
  const std::size_t n = refs_.size();
  std::uint64_t total = std::accumulate(lengths_.begin(), lengths_.end(), std::uint64_t{0});
  avg_len_ = static_cast<double>(total) / static_cast<double>(n);
  norm_.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    norm_[i] = params_.k1 * (1.0 - params_.b + params_.b * static_cast<double>(lengths_[i]) / avg_len_);
  term_ids_.clear();
  for (std::size_t t = 0; t < vocab_.size(); ++t) term_ids_.emplace(vocab_[t], static_cast<std::uint32_t>(t));
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return refs_[a] < refs_[b]; });
  tie_rank_.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) tie_rank_[order[r]] = static_cast<std::uint32_t>(r);
}

const std::vector<Posting>* InvertedIndex::postings(std::string_view term) const {
  auto it = term_ids_.find(std::string(term));
  return it == term_ids_.end() ? nullptr : &postings_[it->second];
}

double InvertedIndex::idf(std::string_view term) const {
  const auto* p = postings(term);
  const double df = p ? static_cast<double>(p->size()) : 0.0;
  const double N = static_cast<double>(refs_.size());
  return std::max(0.0, std::log((N - df + 0.5) / (df + 0.5) + 1.0));
}

std::vector<ScoredChunk> InvertedIndex::retrieve(std::string_view query, std::size_t k) const {
  if (k == 0) throw std::invalid_argument("retrieve: k must be >= 1");
  std::vector<double> scores(refs_.size(), 0.0);
  std::vector<std::uint32_t> tfs;
  std::vector<double> norms, weights;
  const auto& kern = simd::active();
  for (const auto& term : analyze_terms(query)) {
    const auto* list = postings(term);
    if (!list) continue;
    const double w = idf(term);
    if (w <= 0.0) continue;
    const std::size_t m = list->size();
    tfs.resize(m);
    norms.resize(m);
    weights.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      tfs[i] = (*list)[i].tf;
      norms[i] = norm_[(*list)[i].chunk];
    }
    kern.bm25_weights(tfs.data(), norms.data(), m, w, params_.k1, weights.data());
    for (std::size_t i = 0; i < m; ++i) scores[(*list)[i].chunk] += weights[i];
  }
  std::vector<ScoredChunk> hits;
  for (std::uint32_t c = 0; c < scores.size(); ++c)
    if (scores[c] > 0.0) hits.push_back({c, scores[c]});
  auto better = [&](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return tie_rank_[a.chunk] < tie_rank_[b.chunk];
  };
  if (hits.size() > k) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
    hits.resize(k);
  } else {
    std::sort(hits.begin(), hits.end(), better);
  }
  return hits;
}

double InvertedIndex::score(std::string_view query, std::uint32_t chunk) const {
  if (chunk >= refs_.size()) throw std::out_of_range("score: chunk out of range");
  double s = 0.0;
  for (const auto& term : analyze_terms(query)) {
    const auto* list = postings(term);
    if (!list) continue;
    auto it = std::lower_bound(list->begin(), list->end(), chunk,
                               [](const Posting& p, std::uint32_t c) { return p.chunk < c; });
    if (it == list->end() || it->chunk != chunk) continue;
    const double f = static_cast<double>(it->tf);
    s += idf(term) * ((f * (params_.k1 + 1.0)) / (f + norm_[chunk]));
  }
  return s;
}

std::vector<std::uint8_t> InvertedIndex::serialize() const {
  binio::Writer w;
  w.f64(params_.k1);
  w.f64(params_.b);
  w.u64(refs_.size());
  for (std::size_t i = 0; i < refs_.size(); ++i) {
    w.str(refs_[i].doc_key);
    w.u64(refs_[i].chunk_index);
    w.u32(lengths_[i]);
  }
  w.u64(vocab_.size());
  for (std::size_t t = 0; t < vocab_.size(); ++t) {
    w.str(vocab_[t]);
    w.u64(postings_[t].size());
    for (const auto& p : postings_[t]) {
      w.u32(p.chunk);
      w.u32(p.tf);
    }
  }
  return binio::wrap(binio::PayloadKind::bm25_index, w.bytes());
}

InvertedIndex InvertedIndex::deserialize(const std::vector<std::uint8_t>& container) {
  binio::Reader r(binio::unwrap(binio::PayloadKind::bm25_index, container));
  InvertedIndex idx;
  idx.params_.k1 = r.f64();
  idx.params_.b = r.f64();
  const std::uint64_t n = r.u64();
  if (n == 0) throw binio::FormatError("index has no chunks");
  for (std::uint64_t i = 0; i < n; ++i) {
    ChunkRef ref;
    ref.doc_key = r.str();
    ref.chunk_index = r.u64();
    idx.refs_.push_back(std::move(ref));
    idx.lengths_.push_back(r.u32());
  }
  const std::uint64_t terms = r.u64();
  for (std::uint64_t t = 0; t < terms; ++t) {
    idx.vocab_.push_back(r.str());
    const std::uint64_t m = r.u64();
    std::vector<Posting> list;
    list.reserve(m);
    for (std::uint64_t j = 0; j < m; ++j) {
      Posting p{r.u32(), r.u32()};
      if (p.chunk >= n) throw binio::FormatError("posting references unknown chunk");
      list.push_back(p);
    }
    idx.postings_.push_back(std::move(list));
  }
  if (!r.at_end()) throw binio::FormatError("trailing bytes in index payload");
  idx.finalize();
  return idx;
}

void InvertedIndex::save(const std::filesystem::path& path) const { binio::write_file(path, serialize()); }

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) { return deserialize(binio::read_file(path)); }

void InvertedIndex::dump_postings(std::ostream& out) const {
  out << "# chunks=" << refs_.size() << " terms=" << vocab_.size() << " avg_len=" << avg_len_
      << " k1=" << params_.k1 << " b=" << params_.b << '\n';
  for (std::size_t t = 0; t < vocab_.size(); ++t) {
    out << vocab_[t] << '\t' << postings_[t].size() << '\t';
    for (std::size_t j = 0; j < postings_[t].size(); ++j) {
      const auto& p = postings_[t][j];
      if (j) out << ' ';
      out << refs_[p.chunk].doc_key << '#' << refs_[p.chunk].chunk_index << ':' << p.tf;
    }
    out << '\n';
  }
}

}  // namespace citeidx
