#include <cstdlib>
#include <stdexcept>
#include <string>

#include "citeidx/simd.hpp"

namespace citeidx::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(CITEIDX_HAVE_AVX2_TU)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) throw std::runtime_error("SIMD variant not supported here: " + std::string(isa_name(isa)));
#if defined(CITEIDX_HAVE_AVX2_TU)
  if (isa == Isa::avx2) return detail::avx2_table;
#endif
  return detail::scalar_table;
}

namespace {
const KernelTable& select() {
  if (const char* env = std::getenv("CITEIDX_SIMD")) {
    std::string want(env);
    if (want == "scalar") return detail::scalar_table;
    if (want == "avx2" && isa_supported(Isa::avx2)) return kernels_for(Isa::avx2);
  }
  if (isa_supported(Isa::avx2)) return kernels_for(Isa::avx2);
  return detail::scalar_table;
}
}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("simd::dot: dimension mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

void gemv(std::span<const double> rows, std::size_t dim, std::span<const double> x, std::span<double> out) {
  if (x.size() != dim || rows.size() != out.size() * dim)
    throw std::invalid_argument("simd::gemv: dimension mismatch");
  active().gemv(rows.data(), out.size(), dim, x.data(), out.data());
}

std::size_t count_greater(std::span<const double> values, double threshold) {
  return active().count_greater(values.data(), values.size(), threshold);
}

}  // namespace citeidx::simd
