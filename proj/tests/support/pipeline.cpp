#include "pipeline.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "toy_corpus.hpp"

namespace citeidx::testing {

namespace fs = std::filesystem;

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = citeidx::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  return files;
}

PipelineRun run_mock_pipeline(const fs::path& corpus_jsonl, const fs::path& out, unsigned jobs, std::uint64_t seed) {
  PipelineRun run;
  const std::vector<std::string> globals = {"--out", out.string(), "--jobs", std::to_string(jobs), "--seed",
                                            std::to_string(seed), "--client", "mock"};
  auto step = [&](std::vector<std::string> args) {
    std::vector<std::string> full = globals;
    full.insert(full.end(), args.begin(), args.end());
    auto r = cli(full);
    run.log += r.out + r.err;
    if (r.code != 0) run.failed_steps.push_back(args.front() + " (exit " + std::to_string(r.code) + "): " + r.err);
  };

  step({"ingest", corpus_jsonl.string()});
  step({"titles"});
  step({"chunk", "--words", "64"});
  step({"index"});
  step({"emit-passive", "--variant", "passive", "--window", "128"});
  step({"emit-passive", "--variant", "repeat", "--window", "128"});
  step({"emit-passive", "--variant", "repeat+", "--window", "128"});
  step({"augment-forward", "--n-max", "3"});
  step({"augment-backward"});
  step({"emit-trainset"});

  const fs::path items = out.parent_path() / (out.filename().string() + "-items.jsonl");
  {
    std::vector<std::string> titles;
    std::ifstream reg(out / "registry.jsonl");
    std::string line;
    while (std::getline(reg, line) && titles.size() < 4) {
      auto j = nlohmann::json::parse(line);
      if (j.contains("title")) titles.push_back(j["title"]);
    }
    std::ofstream w(items);
    for (std::size_t i = 0; i < titles.size(); ++i) {
      nlohmann::json item = {{"id", "q" + std::to_string(i)},
                             {"question", "What is known about " + titles[i] + "?"},
                             {"model_answer", "It is described in the record. <|" + titles[i] + "|>"},
                             {"gold_answers", {"record"}}};
      w << item.dump() << "\n";
    }
  }
  step({"evaluate", "--items", items.string()});
  step({"probe", "--mode", "full_doc", "--k", "5", "--candidates", "20"});
  step({"probe", "--mode", "gold_qa", "--k", "5", "--candidates", "20"});
  step({"distinctiveness", "--bins", "3,30"});
  step({"hybrid", "--quality", "0.5", "--trials", "2"});
  step({"report"});
  fs::remove(items);
  run.artifacts = snapshot(out);
  return run;
}

}  // namespace citeidx::testing
