#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "citeidx/text.hpp"

namespace citeidx {

/// Delimiter pair wrapped around a document title inside training or model text.
struct MarkerFormat {
  std::string open = "<|";
  std::string close = "|>";

  std::string wrap(std::string_view title) const { return open + std::string(title) + close; }
  static MarkerFormat canonical() { return {}; }
  static MarkerFormat source_tags() { return {"<source>", "</source>"}; }
};

class MarkerError : public std::runtime_error {
 public:
  MarkerError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct MarkerSpan {
  ByteSpan outer;  // including delimiters
  ByteSpan inner;  // title text only
};

/// All marker spans in order. Throws MarkerError on an unclosed, stray or
/// nested delimiter.
std::vector<MarkerSpan> find_markers(std::string_view text, const MarkerFormat& fmt);
bool markers_well_formed(std::string_view text, const MarkerFormat& fmt);

/// Removes every marker (delimiters and title), collapsing the gap to one space.
std::string strip_markers(std::string_view text, const MarkerFormat& fmt);

}  // namespace citeidx
