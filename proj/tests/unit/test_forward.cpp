#include <doctest.h>

#include "citeidx/forward_aug.hpp"
#include "toy_corpus.hpp"

using namespace citeidx;

namespace {

std::size_t count_of(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("forward") {

TEST_CASE("entity list parsing dedups and caps") {
  CHECK(parse_entity_list("Alice\nBob\n\nAlice", 10) == std::vector<std::string>{"Alice", "Bob"});
  CHECK(parse_entity_list("1. Alice\n- Bob\n* alice\n2) Carol", 10) == std::vector<std::string>{"Alice", "Bob", "Carol"});
  std::string twenty;
  for (int i = 0; i < 20; ++i) twenty += "Entity " + std::to_string(i) + "\n";
  auto ents = parse_entity_list(twenty, 10);
  CHECK(ents.size() == 10);
  CHECK(ents.back() == "Entity 9");
}

TEST_CASE("qa block parsing") {
  std::size_t dropped = 0;
  auto one = parse_qa_blocks("Question: Who?\nAnswer: Them.", &dropped);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == std::pair<std::string, std::string>{"Who?", "Them."});
  CHECK(dropped == 0);

  auto four = parse_qa_blocks(
      "**Question 1:** A?\n**Answer 1:** a.\n\nQuestion 2: B?\n\nQuestion 3: C?\nAnswer 3: c.\n\nQ: D?\nA: d.", &dropped);
  CHECK(four.size() == 3);
  CHECK(dropped == 1);
  CHECK(four[2].first == "D?");
}

TEST_CASE("repair: exact title gets wrapped") {
  auto [text, log] = repair_doc_ids("What did Jack Arnold direct?", "Jack Arnold");
  CHECK(text == "What did <|Jack Arnold|> direct?");
  REQUIRE(log.size() == 1);
  CHECK(log[0].kind == "exact");
  CHECK(log[0].raw == "Jack Arnold");
}

TEST_CASE("repair: truncated title is replaced by the canonical one") {
  auto [text, log] = repair_doc_ids("According to Jack Arnold, what year was the film released?", "Jack Arnold (director)");
  CHECK(text == "According to <|Jack Arnold (director)|>, what year was the film released?");
  REQUIRE(log.size() == 1);
  CHECK(log[0].kind == "fuzzy");
}

TEST_CASE("repair: no title-like span means injection") {
  auto [text, log] = repair_doc_ids("When was it finished?", "Stone Bridge");
  CHECK(count_of(text, "<|Stone Bridge|>") == 1);
  REQUIRE(log.size() == 1);
  CHECK(log[0].kind == "injected");
}

TEST_CASE("repair: source tags and duplicate markers collapse to one marker") {
  auto [text, log] = repair_doc_ids("In <source>stone brige</source>, per <|Stone Bridge|>, when?", "Stone Bridge");
  CHECK(count_of(text, "<|Stone Bridge|>") == 1);
  CHECK(text.find("<source>") == std::string::npos);
  CHECK(log[0].kind == "marker");
}

TEST_CASE("repair is idempotent") {
  for (std::string q : {"What did Jack Arnold direct?", "When was it built?", "Per <source>X</source> who?",
                        "Broken <| marker here?", "According to Jack Arnold, what?"}) {
    auto once = repair_doc_ids(q, "Jack Arnold (director)").first;
    auto twice = repair_doc_ids(once, "Jack Arnold (director)").first;
    CHECK(once == twice);
    CHECK(count_of(once, "<|Jack Arnold (director)|>") == 1);
  }
}

TEST_CASE("answers are unwrapped to plain titles") {
  CHECK(unwrap_title_markers("It was <|T|> and <source>t</source>.", "T") == "It was T and T.");
}

TEST_CASE("run_forward over mock output") {
  testing::ToyOptions o;
  o.docs = 6;
  Corpus c = testing::toy_corpus(o);
  MockGenerator gen(1);
  auto reg = assign_unique_titles(c, gen);
  apply_registry(c, reg);
  ForwardOptions opts;
  opts.n_max = 3;
  opts.in_flight = 2;
  ForwardStats st;
  auto qa = run_forward(c, reg, gen, opts, st);
  CHECK(st.documents == 6);
  CHECK(st.entities <= 18);
  CHECK(qa.size() == st.pairs_kept);
  CHECK_FALSE(qa.empty());
  for (const auto& p : qa) {
    const auto& title = reg.title_of(p.doc_key);
    CHECK(count_of(p.question, "<|" + title + "|>") == 1);
    CHECK(markers_well_formed(p.answer, {}));
    CHECK(find_markers(p.answer, {}).empty());
    auto r = forward_record(p, WhitespaceTokenizer{});
    CHECK(r.variant == Variant::forward);
    CHECK(r.text == p.question + "\n\n" + p.answer);
    auto back = forward_qa_from_json(forward_qa_to_json(p));
    CHECK(back.repair_log == p.repair_log);
  }
  ForwardStats st2;
  opts.in_flight = 1;
  auto qa2 = run_forward(c, reg, gen, opts, st2);
  REQUIRE(qa2.size() == qa.size());
  for (std::size_t i = 0; i < qa.size(); ++i) CHECK(forward_qa_to_json(qa[i]) == forward_qa_to_json(qa2[i]));
}

TEST_CASE("documents with no entities are skipped and counted") {
  Corpus c;
  Document d;
  d.doc_key = "a";
  d.title = "A";
  d.content = "some text.";
  c.add(d);
  TitleRegistry reg;
  reg.insert("A", "a");
  MockGenerator gen;
  gen.respond_with([](std::string_view) { return std::optional<std::string>(""); });
  ForwardStats st;
  auto qa = run_forward(c, reg, gen, {}, st);
  CHECK(qa.empty());
  CHECK(st.documents_skipped == 1);
}

}
