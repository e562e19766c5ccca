#include <doctest.h>

#include <sstream>

#include "citeidx/binio.hpp"
#include "citeidx/bm25.hpp"
#include "citeidx/rng.hpp"
#include "oracles.hpp"
#include "toy_corpus.hpp"

using namespace citeidx;

namespace {

Chunk chunk_of(std::string key, std::size_t idx, std::string_view text) {
  Chunk c;
  c.doc_key = std::move(key);
  c.chunk_index = idx;
  for (auto w : split_words(text)) c.words.emplace_back(w);
  return c;
}

std::vector<Chunk> five_chunks() {
  return {chunk_of("a", 0, "the river flows north past the old mill"),
          chunk_of("a", 1, "mill owners built a dam on the river"),
          chunk_of("b", 0, "comets cross the night sky"),
          chunk_of("c", 0, "the castle overlooks the river valley and the mill"),
          chunk_of("d", 0, "orchards of apple and pear")};
}

oracle::Bm25 oracle_for(const std::vector<Chunk>& cs) {
  oracle::Bm25 o;
  for (const auto& c : cs) o.docs.push_back(analyze_terms(c.text()));
  return o;
}

}  // namespace

TEST_SUITE("bm25") {

TEST_CASE("hand-counted postings") {
  auto idx = InvertedIndex::build({chunk_of("x", 0, "a b a")});
  REQUIRE(idx.postings("a"));
  CHECK(*idx.postings("a") == std::vector<Posting>{{0, 2}});
  CHECK(*idx.postings("b") == std::vector<Posting>{{0, 1}});
  CHECK(idx.doc_lengths() == std::vector<std::uint32_t>{3});
}

TEST_CASE("identical chunks have identical lengths") {
  auto idx = InvertedIndex::build({chunk_of("x", 0, "p q r"), chunk_of("y", 0, "p q r")});
  CHECK(idx.doc_lengths()[0] == idx.doc_lengths()[1]);
  CHECK(idx.avg_doc_length() == 3.0);
}

TEST_CASE("scores and idf match the brute-force oracle") {
  auto cs = five_chunks();
  auto idx = InvertedIndex::build(cs);
  auto o = oracle_for(cs);
  for (const auto& term : idx.vocabulary()) CHECK(idx.idf(term) == doctest::Approx(o.idf(term)).epsilon(1e-12));
  for (std::string q : {"river mill", "the the castle", "apple comets", "dam"})
    for (std::uint32_t c = 0; c < cs.size(); ++c)
      CHECK(std::abs(idx.score(q, c) - o.score(analyze_terms(q), c)) < 1e-9);
}

TEST_CASE("ranking equals the oracle ranking") {
  auto cs = five_chunks();
  auto idx = InvertedIndex::build(cs);
  auto o = oracle_for(cs);
  auto hits = idx.retrieve("river mill castle", 3);
  std::vector<std::pair<double, std::uint32_t>> ref;
  for (std::uint32_t c = 0; c < cs.size(); ++c) ref.push_back({-o.score(analyze_terms("river mill castle"), c), c});
  std::sort(ref.begin(), ref.end());
  REQUIRE(hits.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(hits[i].chunk == ref[i].second);
}

TEST_CASE("unique term ranks its chunk first; unknown terms return nothing") {
  auto idx = InvertedIndex::build(five_chunks());
  auto hits = idx.retrieve("orchards", 5);
  REQUIRE(hits.size() == 1);
  CHECK(idx.ref(hits[0].chunk).doc_key == "d");
  CHECK(idx.retrieve("zeppelin", 5).empty());
}

TEST_CASE("ties break on chunk identity") {
  auto idx = InvertedIndex::build({chunk_of("z", 0, "same words"), chunk_of("a", 1, "same words"), chunk_of("a", 0, "same words")});
  auto hits = idx.retrieve("same", 3);
  REQUIRE(hits.size() == 3);
  CHECK(idx.ref(hits[0].chunk) == ChunkRef{"a", 0});
  CHECK(idx.ref(hits[1].chunk) == ChunkRef{"a", 1});
  CHECK(idx.ref(hits[2].chunk) == ChunkRef{"z", 0});
}

TEST_CASE("build rejects degenerate input") {
  CHECK_THROWS_AS(InvertedIndex::build({}), std::invalid_argument);
  CHECK_THROWS(InvertedIndex::build({chunk_of("a", 0, "!!! ???")}));
}

TEST_CASE("parallel build is identical to the serial build") {
  testing::ToyOptions o;
  o.docs = 40;
  auto cs = chunk_corpus(testing::toy_corpus(o), 30);
  CHECK(InvertedIndex::build(cs, {}, 1).serialize() == InvertedIndex::build(cs, {}, 4).serialize());
}

TEST_CASE("binary round trip and corruption detection") {
  auto idx = InvertedIndex::build(five_chunks());
  auto bytes = idx.serialize();
  auto back = InvertedIndex::deserialize(bytes);
  CHECK(back.serialize() == bytes);
  CHECK(back.score("river", 0) == idx.score("river", 0));
  std::ostringstream d1, d2;
  idx.dump_postings(d1);
  back.dump_postings(d2);
  CHECK(d1.str() == d2.str());

  auto bad = bytes;
  bad[bad.size() / 2] ^= 0x5a;
  CHECK_THROWS_AS(InvertedIndex::deserialize(bad), binio::FormatError);
  auto truncated = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 20);
  CHECK_THROWS_AS(InvertedIndex::deserialize(truncated), binio::FormatError);
  auto wrong_kind = binio::wrap(binio::PayloadKind::title_trie, binio::unwrap(binio::PayloadKind::bm25_index, bytes));
  CHECK_THROWS_AS(InvertedIndex::deserialize(wrong_kind), binio::FormatError);
}

TEST_CASE("random corpora agree with the oracle") {
  Rng rng(23);
  for (int t = 0; t < 5; ++t) {
    std::vector<Chunk> cs;
    const std::size_t n = 2 + rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      std::string text;
      for (std::size_t w = 0, len = 1 + rng.below(25); w < len; ++w) text += "t" + std::to_string(rng.below(15)) + " ";
      cs.push_back(chunk_of("doc" + std::to_string(i / 3), i % 3, text));
    }
    Bm25Params p{0.5 + rng.unit(), rng.unit()};
    auto idx = InvertedIndex::build(cs, p);
    auto o = oracle_for(cs);
    o.k1 = p.k1;
    o.b = p.b;
    std::string q = "t1 t3 t3 t9";
    for (std::uint32_t c = 0; c < n; ++c) CHECK(std::abs(idx.score(q, c) - o.score(analyze_terms(q), c)) < 1e-9);
  }
}

}
