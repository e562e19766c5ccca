#include "citeidx/markers.hpp"

namespace citeidx {

std::vector<MarkerSpan> find_markers(std::string_view text, const MarkerFormat& fmt) {
  std::vector<MarkerSpan> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t o = text.find(fmt.open, pos);
    std::size_t c = text.find(fmt.close, pos);
    if (o == std::string_view::npos && c == std::string_view::npos) break;
    if (c != std::string_view::npos && (o == std::string_view::npos || c < o))
      throw MarkerError("closing marker without opening marker", c);
    std::size_t inner_begin = o + fmt.open.size();
    std::size_t close = text.find(fmt.close, inner_begin);
    if (close == std::string_view::npos) throw MarkerError("unclosed marker", o);
    std::size_t nested = text.find(fmt.open, inner_begin);
    if (nested != std::string_view::npos && nested < close) throw MarkerError("nested marker", nested);
    out.push_back({{o, close + fmt.close.size()}, {inner_begin, close}});
    pos = close + fmt.close.size();
  }
  return out;
}

bool markers_well_formed(std::string_view text, const MarkerFormat& fmt) {
  try {
    find_markers(text, fmt);
    return true;
  } catch (const MarkerError&) {
    return false;
  }
}

std::string strip_markers(std::string_view text, const MarkerFormat& fmt) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& m : find_markers(text, fmt)) {
    out.append(text.substr(pos, m.outer.begin - pos));
    out.push_back(' ');
    pos = m.outer.end;
  }
  out.append(text.substr(pos));
  return collapse_whitespace(out);
}

}  // namespace citeidx
