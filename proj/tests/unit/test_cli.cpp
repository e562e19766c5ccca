#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pipeline.hpp"
#include "toy_corpus.hpp"

using namespace citeidx;
using testing::cli;
namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += x + "\n";
  return s;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("validation errors exit 1") {
  auto dir = testing::scratch_dir("cli-errors");
  CHECK(cli({"--out", dir.string(), "--bogus", "ingest"}).code == 1);
  CHECK(cli({"--out", dir.string()}).code == 1);
  CHECK(cli({"--out", dir.string(), "ingest", (dir / "missing.jsonl").string()}).code == 1);
  auto r = cli({"--out", dir.string(), "chunk"});
  CHECK(r.code == 1);
  CHECK(r.err.find("ingest") != std::string::npos);

  std::ofstream(dir / "bad.yaml") << "bm25:\n  k3: 1\n";
  r = cli({"--config", (dir / "bad.yaml").string(), "--out", dir.string(), "report"});
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown key: bm25.k3") != std::string::npos);
  CHECK(cli({"--out", dir.string(), "hybrid", "--quality", "2"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  fs::remove_all(dir);
}

TEST_CASE("pipeline is deterministic across job counts and reports cleanly") {
  auto dir = testing::scratch_dir("cli-pipeline");
  testing::ToyOptions opts;
  opts.docs = 30;
  opts.duplicate_title_rate = 0.1;
  testing::write_toy_jsonl(dir / "corpus.jsonl", opts);

  auto one = testing::run_mock_pipeline(dir / "corpus.jsonl", dir / "one", 1);
  INFO(join(one.failed_steps));
  CHECK(one.failed_steps.empty());
  auto three = testing::run_mock_pipeline(dir / "corpus.jsonl", dir / "three", 3);
  CHECK(three.failed_steps.empty());

  REQUIRE(one.artifacts.size() == three.artifacts.size());
  for (const auto& [name, bytes] : one.artifacts) {
    INFO(name);
    REQUIRE(three.artifacts.count(name));
    CHECK(three.artifacts.at(name) == bytes);
  }
  for (auto name : {"corpus.jsonl", "registry.jsonl", "titles.trie", "chunks.jsonl", "index.bin", "passive.jsonl",
                    "repeat.jsonl", "repeat_plus.jsonl", "forward_pairs.jsonl", "backward_pairs.jsonl",
                    "trainset.jsonl", "trainset_report.txt", "metrics.jsonl", "probe_full_doc.jsonl",
                    "distinctiveness.jsonl", "hybrid.jsonl", "slices.txt"})
    CHECK_MESSAGE(one.artifacts.count(name), name);

  auto ok = cli({"--out", (dir / "one").string(), "report"});
  CHECK(ok.code == 0);

  // A header whose hash no longer matches its config is caught.
  auto path = dir / "one" / "chunks.jsonl";
  std::string text = testing::slurp(path);
  auto pos = text.find("\"config_hash\":\"");
  REQUIRE(pos != std::string::npos);
  text[pos + 15] = text[pos + 15] == '0' ? '1' : '0';
  std::ofstream(path, std::ios::binary | std::ios::trunc) << text;
  auto bad = cli({"--out", (dir / "one").string(), "report"});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("chunks.jsonl") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("titles check") {
  auto dir = testing::scratch_dir("cli-check");
  testing::ToyOptions opts;
  opts.docs = 5;
  testing::write_toy_jsonl(dir / "c.jsonl", opts);
  const auto out = (dir / "out").string();
  REQUIRE(cli({"--out", out, "ingest", (dir / "c.jsonl").string()}).code == 0);
  REQUIRE(cli({"--out", out, "titles"}).code == 0);
  std::string title = testing::toy_records(opts)[0]["title"];
  std::ofstream(dir / "good.txt") << "fine <|" << title << "|>\n";
  std::ofstream(dir / "bad.txt") << "fine <|" << title << "|>\nbad <|Nowhere Land|>\n";
  std::ofstream(dir / "broken.txt") << "broken <|" << title << "\n";
  CHECK(cli({"--out", out, "titles", "check", (dir / "good.txt").string()}).code == 0);
  auto bad = cli({"--out", out, "titles", "check", (dir / "bad.txt").string()});
  CHECK(bad.code == 1);
  CHECK((bad.out + bad.err).find("Nowhere Land") != std::string::npos);
  CHECK(cli({"--out", out, "titles", "check", (dir / "broken.txt").string()}).code == 1);
  fs::remove_all(dir);
}

}
