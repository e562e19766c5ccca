#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace citeidx::binio {

// Container layout (all integers little-endian):
//   magic    8 bytes  "CITEIDX\0"
//   version  u32      kFormatVersion
//   kind     u32      PayloadKind
//   length   u64      payload byte count
//   payload  length bytes
//   checksum u64      FNV-1a 64 of payload

inline constexpr std::uint32_t kFormatVersion = 1;

enum class PayloadKind : std::uint32_t { bm25_index = 1, title_trie = 2 };

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v);
  void str(std::string_view s);

  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> bytes) : buf_(std::move(bytes)) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64();
  std::string str();
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const;
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> wrap(PayloadKind kind, const std::vector<std::uint8_t>& payload);
/// Validates header, kind and checksum; returns the payload.
std::vector<std::uint8_t> unwrap(PayloadKind kind, const std::vector<std::uint8_t>& container);

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace citeidx::binio
