#include "citeidx/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "citeidx/text.hpp"

namespace citeidx::binio {

namespace {
constexpr char kMagic[8] = {'C', 'I', 'T', 'E', 'I', 'D', 'X', '\0'};

std::uint64_t checksum(const std::uint8_t* p, std::size_t n) {
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(p), n));
}
}  // namespace

void Writer::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void Reader::need(std::size_t n) const {
  if (buf_.size() - pos_ < n) throw FormatError("truncated payload");
}

std::uint8_t Reader::u8() {
  need(1);
  return buf_[pos_++];
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string Reader::str() {
  std::uint32_t n = u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<std::uint8_t> wrap(PayloadKind kind, const std::vector<std::uint8_t>& payload) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(kind));
  w.u64(payload.size());
  std::vector<std::uint8_t> out = w.bytes();
  out.insert(out.end(), payload.begin(), payload.end());
  Writer tail;
  tail.u64(checksum(payload.data(), payload.size()));
  out.insert(out.end(), tail.bytes().begin(), tail.bytes().end());
  return out;
}

std::vector<std::uint8_t> unwrap(PayloadKind kind, const std::vector<std::uint8_t>& container) {
  constexpr std::size_t header = 8 + 4 + 4 + 8;
  if (container.size() < header + 8) throw FormatError("container too small");
  if (std::memcmp(container.data(), kMagic, 8) != 0) throw FormatError("bad magic");
  Reader r(std::vector<std::uint8_t>(container.begin() + 8, container.begin() + header));
  std::uint32_t version = r.u32();
  if (version != kFormatVersion) throw FormatError("unsupported container version " + std::to_string(version));
  std::uint32_t got_kind = r.u32();
  if (got_kind != static_cast<std::uint32_t>(kind)) throw FormatError("unexpected payload kind " + std::to_string(got_kind));
  std::uint64_t len = r.u64();
  if (container.size() != header + len + 8) throw FormatError("length mismatch");
  std::vector<std::uint8_t> payload(container.begin() + header, container.begin() + static_cast<std::ptrdiff_t>(header + len));
  Reader tail(std::vector<std::uint8_t>(container.end() - 8, container.end()));
  if (tail.u64() != checksum(payload.data(), payload.size())) throw FormatError("checksum mismatch");
  return payload;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace citeidx::binio
