#include "citeidx/simd.hpp"

namespace citeidx::simd {
namespace {

// Four interleaved accumulators mirror the AVX2 register layout.
double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int l = 0; l < 4; ++l) acc[l] = acc[l] + a[i + l] * b[i + l];
  }
  double sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (; i < n; ++i) sum = sum + a[i] * b[i];
  return sum;
}

void gemv_scalar(const double* rows, std::size_t n_rows, std::size_t dim, const double* x, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_scalar(rows + r * dim, x, dim);
}

std::size_t count_greater_scalar(const double* values, std::size_t n, double threshold) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += values[i] > threshold ? 1 : 0;
  return count;
}

void bm25_weights_scalar(const std::uint32_t* tf, const double* norm, std::size_t n, double idf, double k1,
                         double* out) {
  const double k1p1 = k1 + 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = static_cast<double>(tf[i]);
    out[i] = idf * ((f * k1p1) / (f + norm[i]));
  }
}

}  // namespace

namespace detail {
const KernelTable scalar_table{Isa::scalar, dot_scalar, gemv_scalar, count_greater_scalar, bm25_weights_scalar};
}

}  // namespace citeidx::simd
