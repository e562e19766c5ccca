#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace citeidx::testing {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args);

struct PipelineRun {
  std::vector<std::string> failed_steps;
  std::map<std::string, std::string> artifacts;  // path relative to the out dir -> bytes
  std::string log;
};

/// Every stage of the CLI with mock clients, in dependency order.
PipelineRun run_mock_pipeline(const std::filesystem::path& corpus_jsonl, const std::filesystem::path& out,
                              unsigned jobs, std::uint64_t seed = 7);

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir);

}  // namespace citeidx::testing
