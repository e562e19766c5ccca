#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "citeidx/artifact.hpp"
#include "citeidx/passive_index.hpp"

namespace citeidx {

/// Token totals per variant against the base corpus.
struct Bookkeeping {
  std::size_t base_tokens = 0;
  std::map<Variant, std::size_t> tokens;
  std::map<Variant, std::size_t> records;

  void add(const PretrainRecord& r);
  std::size_t augmented_tokens() const;  // forward + backward
  /// tokens / base_tokens (0 when the base is empty).
  double multiplier(Variant v) const;
  double combined_multiplier() const;

  json to_json() const;
};

/// "1.28B", "390M", "12.3K", "512".
std::string format_token_count(std::size_t n);

/// Lines in the style "Forward augmentation: 1.28B augmented tokens (3.3x the original corpus)".
std::string format_bookkeeping(const Bookkeeping& b);

}  // namespace citeidx
