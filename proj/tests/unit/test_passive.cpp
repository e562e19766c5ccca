#include <doctest.h>

#include "citeidx/passive_index.hpp"
#include "toy_corpus.hpp"

using namespace citeidx;

namespace {

struct Fixture {
  Corpus corpus;
  TitleRegistry registry;

  void add(const std::string& key, const std::string& title, const std::string& content) {
    Document d;
    d.doc_key = key;
    d.title = title;
    d.content = content;
    d.word_count = count_words(content);
    d.token_count = d.word_count;
    corpus.add(d);
    registry.insert(title, key);
  }
};

std::size_t count_of(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

std::string words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
  return s;
}

}  // namespace

TEST_SUITE("passive") {

TEST_CASE("short document gives one record ending in its marker") {
  Fixture f;
  f.add("a", "T", "a short document.");
  WhitespaceTokenizer tok;
  auto rs = emit_passive(f.corpus, f.registry, tok, {});
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].text == "a short document. <|T|>");
  CHECK(rs[0].token_count == 4);
  CHECK(rs[0].doc_keys == std::vector<std::string>{"a"});
}

TEST_CASE("2000 tokens at window 768 gives 3 records") {
  Fixture f;
  f.add("a", "Long Title", words(2000));
  WhitespaceTokenizer tok;
  PassiveAudit audit;
  auto rs = emit_passive(f.corpus, f.registry, tok, {768, {}, 1}, &audit);
  REQUIRE(rs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rs[i].piece_index == i);
    CHECK(rs[i].text.ends_with(" <|Long Title|>"));
  }
  CHECK(rs[0].token_count == 768 + 2);
  CHECK(rs[2].token_count == 2000 - 2 * 768 + 2);
  CHECK(audit.identity_holds());
  CHECK(audit.title_tokens == 6);
}

TEST_CASE("token identity holds over a toy corpus for every tokenizer") {
  testing::ToyOptions o;
  o.docs = 30;
  Corpus c = testing::toy_corpus(o);
  MockGenerator namer;
  auto reg = assign_unique_titles(c, namer);
  for (const char* name : {"whitespace", "char", "byte"}) {
    auto tok = make_tokenizer(name);
    Corpus cc = c;
    for (auto& d : cc.docs()) d.token_count = tok->count(d.content);
    PassiveAudit audit;
    auto rs = emit_passive(cc, reg, *tok, {50, {}, 2}, &audit);
    CHECK(audit.identity_holds());
    CHECK(audit.corpus_tokens == cc.total_tokens());
    for (const auto& r : rs) CHECK(record_markers_valid(r, reg, {}));
  }
}

TEST_CASE("repeat puts a marker after each sentence plus a terminal marker") {
  Fixture f;
  f.add("a", "T", "One fact. Two facts! Three facts?");
  f.add("b", "U", "no sentence punctuation here");
  f.add("c", "V", "   ");
  WhitespaceTokenizer tok;
  auto rs = emit_repeat(f.corpus, f.registry, tok, {});
  REQUIRE(rs.size() == 2);
  CHECK(count_of(rs[0].text, "<|T|>") == 4);
  CHECK(count_of(rs[1].text, "<|U|>") == 1);
  CHECK(rs[1].text.ends_with("<|U|>"));
}

TEST_CASE("repeat+ emits four granularities and dedups coinciding ones") {
  Fixture f;
  f.add("a", "T", "First paragraph here. It has two sentences.\n\nSecond paragraph.\n\nThird paragraph is last.");
  f.add("b", "U", "Only sentence.");
  WhitespaceTokenizer tok;
  auto rs = emit_repeat_plus(f.corpus, f.registry, tok, {{}, 5, 1});
  std::vector<std::string> segs_a, segs_b;
  for (const auto& r : rs) (r.doc_keys[0] == "a" ? segs_a : segs_b).push_back(r.segment);
  CHECK(segs_a == std::vector<std::string>{"full", "third", "paragraph", "sentence"});
  CHECK(segs_b == std::vector<std::string>{"full"});
  for (const auto& r : rs) CHECK(r.text.ends_with(r.doc_keys[0] == "a" ? "<|T|>" : "<|U|>"));
  auto again = emit_repeat_plus(f.corpus, f.registry, tok, {{}, 5, 3});
  REQUIRE(again.size() == rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) CHECK(record_to_json(again[i]) == record_to_json(rs[i]));
}

TEST_CASE("record json round trip") {
  PretrainRecord r{"x <|T|>", {"a", "b"}, Variant::repeat_plus, 2, 3, "sentence"};
  auto back = record_from_json(record_to_json(r));
  CHECK(record_to_json(back) == record_to_json(r));
  CHECK(parse_variant("repeat+") == Variant::repeat_plus);
  CHECK_THROWS_AS(parse_variant("nope"), std::invalid_argument);
}

}
