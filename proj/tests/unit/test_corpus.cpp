#include <doctest.h>

#include <set>
#include <sstream>

#include "citeidx/corpus.hpp"
#include "citeidx/rng.hpp"
#include "toy_corpus.hpp"

using namespace citeidx;

namespace {

class FixedNamer final : public GeneratorClient {
 public:
  explicit FixedNamer(std::string reply) : reply_(std::move(reply)) {}
  std::string complete_once(std::string_view) const override {
    ++calls;
    return reply_;
  }
  std::string describe() const override { return "fixed"; }
  mutable int calls = 0;

 private:
  std::string reply_;
};

class SuffixNamer final : public GeneratorClient {
 public:
  std::string complete_once(std::string_view prompt) const override {
    auto b = prompt.find("Current title: ");
    auto e = prompt.find('\n', b);
    return std::string(prompt.substr(b + 15, e - b - 15)) + " \xE2\x80\x94 variant";
  }
  std::string describe() const override { return "suffix"; }
};

class BrokenNamer final : public GeneratorClient {
 public:
  std::string complete_once(std::string_view) const override {
    throw ClientError(ClientError::Kind::transport, "down");
  }
  std::string describe() const override { return "broken"; }
};

Corpus corpus_of(const std::vector<std::pair<std::string, std::string>>& titled) {
  Corpus c;
  for (std::size_t i = 0; i < titled.size(); ++i) {
    Document d;
    d.doc_key = "d" + std::to_string(i);
    d.title = titled[i].first;
    d.content = titled[i].second;
    d.word_count = count_words(d.content);
    d.token_count = d.word_count;
    c.add(d);
  }
  return c;
}

Document doc_with_words(std::size_t n) {
  Document d;
  d.doc_key = "k";
  for (std::size_t i = 0; i < n; ++i) d.content += (i ? (i % 7 == 0 ? "\n" : " ") : "") + ("w" + std::to_string(i));
  d.word_count = n;
  return d;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("ingest counts words, skips empty content and malformed lines") {
  std::stringstream in;
  in << R"({"doc_key":"a","title":"A","content":"one two three"})" << "\n"
     << R"({"doc_key":"b","content":"   "})" << "\n"
     << "not json\n"
     << R"({"title":"no content"})" << "\n"
     << R"({"content":"x y","source":"arxiv"})" << "\n"
     << R"({"doc_key":"c","content":"p q r s"})" << "\n";
  IngestStats st;
  Corpus c = ingest(in, Source::wikipedia, WhitespaceTokenizer{}, st);
  CHECK(c.size() == 3);
  CHECK(st.skipped_empty == 1);
  CHECK(st.malformed == 2);
  CHECK(c.find("a")->word_count == 3);
  CHECK(c.find("a")->source == Source::wikipedia);
  CHECK(c.find("arxiv-5") != nullptr);
  CHECK(c.find("arxiv-5")->source == Source::arxiv);
  CHECK(c.total_tokens() == 9);
}

TEST_CASE("already unique titles are left alone") {
  FixedNamer namer("unused");
  auto reg = assign_unique_titles(corpus_of({{"A", "x"}, {"B", "y"}, {"C", "z"}}), namer);
  CHECK(reg.size() == 3);
  CHECK(reg.rename_log().empty());
  CHECK(namer.calls == 0);
}

TEST_CASE("duplicate title renamed by the namer") {
  auto reg = assign_unique_titles(corpus_of({{"A", "x"}, {"A", "y"}}), SuffixNamer{});
  CHECK(reg.title_of("d0") == "A");
  CHECK(reg.title_of("d1") == "A \xE2\x80\x94 variant");
  REQUIRE(reg.rename_log().size() == 1);
  CHECK(reg.rename_log()[0] == RenameEntry{"d1", "A", "A \xE2\x80\x94 variant", 1});
}

TEST_CASE("a namer that never helps falls back to an integer suffix") {
  FixedNamer namer("A");
  TitleOptions opts;
  opts.max_rename_attempts = 3;
  auto reg = assign_unique_titles(corpus_of({{"A", "x"}, {"A", "y"}, {"A", "z"}}), namer, opts);
  CHECK(reg.title_of("d1") == "A (1)");
  CHECK(reg.title_of("d2") == "A (2)");
  CHECK(reg.rename_log()[0].attempt == 0);
  CHECK(namer.calls == 6);
}

TEST_CASE("namer failure goes straight to the fallback") {
  auto reg = assign_unique_titles(corpus_of({{"A", "x"}, {"A", "y"}, {"", "z"}}), BrokenNamer{});
  CHECK(reg.title_of("d1") == "A (1)");
  CHECK(reg.title_of("d2") == "Untitled document (1)");
}

TEST_CASE("registry invariants on a corpus with duplicates and untitled docs") {
  testing::ToyOptions o;
  o.docs = 120;
  o.duplicate_title_rate = 0.15;
  o.untitled_rate = 0.05;
  Corpus c = testing::toy_corpus(o);
  MockGenerator namer(3);
  auto reg = assign_unique_titles(c, namer);
  CHECK(reg.size() == c.size());
  std::set<std::string> keys;
  for (const auto& [t, k] : reg.entries()) {
    CHECK(!t.empty());
    CHECK(t == normalize_title(t));
    keys.insert(k);
  }
  CHECK(keys.size() == c.size());
  CHECK(replay_rename_log(c, reg.rename_log()) == reg.entries());

  apply_registry(c, reg);
  auto again = assign_unique_titles(c, namer);
  CHECK(again.entries() == reg.entries());
  CHECK(again.rename_log().empty());

  auto dir = testing::scratch_dir("registry");
  write_registry(dir / "r.jsonl", reg, std::nullopt);
  CHECK(read_registry(dir / "r.jsonl") == reg);
}

TEST_CASE("chunk boundaries") {
  CHECK(chunk_document(doc_with_words(5), 5).size() == 1);
  auto cs = chunk_document(doc_with_words(2 * 4 + 3), 4);
  REQUIRE(cs.size() == 3);
  CHECK(cs[0].words.size() == 4);
  CHECK(cs[1].words.size() == 4);
  CHECK(cs[2].words.size() == 3);
  CHECK(chunk_document(doc_with_words(0), 3).empty());
  CHECK_THROWS_AS(chunk_document(doc_with_words(3), 0), std::invalid_argument);
}

TEST_CASE("chunks reassemble the document and spans point at their words") {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    Document d = doc_with_words(rng.below(120));
    const std::size_t w = 1 + rng.below(20);
    auto cs = chunk_document(d, w);
    CHECK(cs.size() == (d.word_count + w - 1) / w);
    std::vector<std::string> all;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      CHECK(cs[i].chunk_index == i);
      if (i + 1 < cs.size()) CHECK(cs[i].words.size() == w);
      CHECK(split_words(cs[i].char_span.of(d.content)).size() == cs[i].words.size());
      all.insert(all.end(), cs[i].words.begin(), cs[i].words.end());
      auto back = chunk_from_json(chunk_to_json(cs[i]));
      CHECK(back.words == cs[i].words);
      CHECK(back.char_span == cs[i].char_span);
    }
    std::vector<std::string> words;
    for (auto x : split_words(d.content)) words.emplace_back(x);
    CHECK(all == words);
  }
}

TEST_CASE("corpus file round trip keeps canonical order") {
  testing::ToyOptions o;
  o.docs = 12;
  Corpus c = testing::toy_corpus(o);
  auto dir = testing::scratch_dir("corpus");
  write_corpus(dir / "c.jsonl", c, std::nullopt);
  Corpus back = read_corpus(dir / "c.jsonl");
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back.docs()[i].doc_key == c.docs()[i].doc_key);
    CHECK(back.docs()[i].content == c.docs()[i].content);
  }
}

}
