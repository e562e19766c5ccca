#include <immintrin.h>

#include "citeidx/simd.hpp"

namespace citeidx::simd {
namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // mul + add, not fma: must match the scalar rounding.
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) sum = sum + a[i] * b[i];
  return sum;
}

void gemv_avx2(const double* rows, std::size_t n_rows, std::size_t dim, const double* x, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_avx2(rows + r * dim, x, dim);
}

std::size_t count_greater_avx2(const double* values, std::size_t n, double threshold) {
  const __m256d t = _mm256_set1_pd(threshold);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gt = _mm256_cmp_pd(_mm256_loadu_pd(values + i), t, _CMP_GT_OQ);
    count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(gt))));
  }
  for (; i < n; ++i) count += values[i] > threshold ? 1 : 0;
  return count;
}

void bm25_weights_avx2(const std::uint32_t* tf, const double* norm, std::size_t n, double idf, double k1,
                       double* out) {
  const __m256d vidf = _mm256_set1_pd(idf);
  const __m256d vk1p1 = _mm256_set1_pd(k1 + 1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m128i raw = _mm_loadu_si128(reinterpret_cast<const __m128i*>(tf + i));
    // tf values fit in int32; counts never reach 2^31.
    __m256d f = _mm256_cvtepi32_pd(raw);
    __m256d num = _mm256_mul_pd(f, vk1p1);
    __m256d den = _mm256_add_pd(f, _mm256_loadu_pd(norm + i));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vidf, _mm256_div_pd(num, den)));
  }
  const double k1p1 = k1 + 1.0;
  for (; i < n; ++i) {
    const double f = static_cast<double>(tf[i]);
    out[i] = idf * ((f * k1p1) / (f + norm[i]));
  }
}

}  // namespace

namespace detail {
const KernelTable avx2_table{Isa::avx2, dot_avx2, gemv_avx2, count_greater_avx2, bm25_weights_avx2};
}

}  // namespace citeidx::simd
