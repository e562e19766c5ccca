#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace citeidx {

/// Seeded generator with platform-stable sampling. std::mt19937_64 output is fixed
/// by the standard; the standard distributions are not, so bounded draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  /// Uniform double in [0, 1).
  double unit();
  bool bernoulli(double p) { return unit() < p; }

  /// k distinct indices from [0, n), returned in ascending order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Stable per-key seed derivation: independent streams per (seed, key).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

}  // namespace citeidx
