#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

namespace citeidx {

using nlohmann::json;

/// First line of every line-delimited artifact:
///   {"_header": {"tool": "citeidx", "format": 1, "kind": K, "config_hash": H, "seed": S, "config": {...}}}
struct ArtifactHeader {
  std::string kind;
  std::string config_hash;
  std::uint64_t seed = 0;
  json config = json::object();

  json to_json() const;
  static std::optional<ArtifactHeader> from_line(const json& line);
};

/// Line-delimited JSON writer; compact single-line records, '\n' terminated.
class JsonlWriter {
 public:
  JsonlWriter(const std::filesystem::path& path, const std::optional<ArtifactHeader>& header);
  void write(const json& record);
  std::size_t records() const { return records_; }
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t records_ = 0;
};

/// Calls fn(record, line_number) for each non-empty line, skipping the header.
/// Lines that fail to parse go to on_error (or throw std::runtime_error if none).
std::optional<ArtifactHeader> read_jsonl(const std::filesystem::path& path,
                                         const std::function<void(const json&, std::size_t)>& fn,
                                         const std::function<void(std::size_t, const std::string&)>& on_error = {});

std::optional<ArtifactHeader> read_header(const std::filesystem::path& path);

/// Canonical config hash: FNV-1a 64 over the compact dump (keys sorted by json's map).
std::string config_hash(const json& config);

}  // namespace citeidx
