#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops: embedding dot products, similarity rank counting and
// BM25 posting-list weights. Each kernel has a scalar reference and a vector variant
// chosen once at startup. The scalar reference accumulates in the same 4-lane order
// as the vector code, so both produce bit-identical results.

namespace citeidx::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// out[r] = dot(rows[r*dim .. r*dim+dim), x)
  void (*gemv)(const double* rows, std::size_t n_rows, std::size_t dim, const double* x, double* out);
  /// Number of values strictly greater than threshold.
  std::size_t (*count_greater)(const double* values, std::size_t n, double threshold);
  /// out[i] = idf * tf[i] * (k1 + 1) / (tf[i] + norm[i])
  void (*bm25_weights)(const std::uint32_t* tf, const double* norm, std::size_t n, double idf, double k1,
                       double* out);
};

bool isa_supported(Isa isa);
const KernelTable& kernels_for(Isa isa);

/// Best supported ISA, overridable with CITEIDX_SIMD=scalar|avx2.
const KernelTable& active();

double dot(std::span<const double> a, std::span<const double> b);
void gemv(std::span<const double> rows, std::size_t dim, std::span<const double> x, std::span<double> out);
std::size_t count_greater(std::span<const double> values, double threshold);

namespace detail {
extern const KernelTable scalar_table;
#if defined(CITEIDX_HAVE_AVX2_TU)
extern const KernelTable avx2_table;
#endif
}  // namespace detail

}  // namespace citeidx::simd
