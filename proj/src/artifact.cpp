#include "citeidx/artifact.hpp"

#include <stdexcept>

#include "citeidx/text.hpp"

namespace citeidx {

json ArtifactHeader::to_json() const {
  return {{"_header",
           {{"tool", "citeidx"}, {"format", 1}, {"kind", kind}, {"config_hash", config_hash}, {"seed", seed},
            {"config", config}}}};
}

std::optional<ArtifactHeader> ArtifactHeader::from_line(const json& line) {
  if (!line.is_object() || !line.contains("_header")) return std::nullopt;
  const auto& h = line.at("_header");
  ArtifactHeader out;
  out.kind = h.value("kind", "");
  out.config_hash = h.value("config_hash", "");
  out.seed = h.value("seed", std::uint64_t{0});
  out.config = h.value("config", json::object());
  return out;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, const std::optional<ArtifactHeader>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
  if (header) out_ << header->to_json().dump() << '\n';
}

void JsonlWriter::write(const json& record) {
  out_ << record.dump() << '\n';
  ++records_;
}

void JsonlWriter::close() {
  out_.flush();
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
  out_.close();
}

std::optional<ArtifactHeader> read_jsonl(const std::filesystem::path& path,
                                         const std::function<void(const json&, std::size_t)>& fn,
                                         const std::function<void(std::size_t, const std::string&)>& on_error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::optional<ArtifactHeader> header;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      if (on_error) {
        on_error(line_no, e.what());
        continue;
      }
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (line_no == 1) {
      if (auto h = ArtifactHeader::from_line(rec)) {
        header = std::move(h);
        continue;
      }
    }
    fn(rec, line_no);
  }
  if (in.bad()) throw std::runtime_error("read failed: " + path.string());
  return header;
}

std::optional<ArtifactHeader> read_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  try {
    return ArtifactHeader::from_line(json::parse(line));
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

std::string config_hash(const json& config) { return hex64(fnv1a64(config.dump())); }

}  // namespace citeidx
