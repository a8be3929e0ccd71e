#include "sparse_armax/kernels.hpp"

#include <cmath>

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define SPARSE_ARMAX_HAVE_AVX2 1
#include <immintrin.h>
#else
#define SPARSE_ARMAX_HAVE_AVX2 0
#endif

namespace sparse_armax::kernels::detail {

#if SPARSE_ARMAX_HAVE_AVX2

#define AVX2_FN __attribute__((target("avx2,fma")))

namespace {

AVX2_FN inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

AVX2_FN double dot_raw(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

AVX2_FN void axpy_raw(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

AVX2_FN double dot_avx2(std::span<const double> x, std::span<const double> y) {
  return dot_raw(x.data(), y.data(), x.size());
}

AVX2_FN void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y) {
  axpy_raw(alpha, x.data(), y.data(), x.size());
}

AVX2_FN void symv_avx2(std::span<const double> a, std::size_t n, std::span<const double> x,
                       std::span<double> y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = dot_raw(a.data() + i * n, x.data(), n);
}

AVX2_FN void ger_avx2(std::span<double> a, std::size_t rows, std::size_t cols, double alpha,
                      std::span<const double> x, std::span<const double> y) {
  for (std::size_t j = 0; j < cols; ++j) {
    const double s = alpha * y[j];
    if (s == 0.0) continue;
    axpy_raw(s, x.data(), a.data() + j * rows, rows);
  }
}

// |x| - t, zeroed when negative, with the sign of x restored.  sgn(0) = +1
// never matters because a zero input always yields a zero output.
AVX2_FN inline __m256d shrink_lanes(__m256d theta, __m256d mag, __m256d t) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d r = _mm256_max_pd(_mm256_sub_pd(mag, t), _mm256_setzero_pd());
  const __m256d positive = _mm256_cmp_pd(r, _mm256_setzero_pd(), _CMP_GT_OQ);
  const __m256d signed_r = _mm256_or_pd(r, _mm256_and_pd(theta, sign_mask));
  return _mm256_and_pd(signed_r, positive);
}

AVX2_FN void soft_threshold_avx2(std::span<const double> theta, std::span<double> out,
                                 double gamma) {
  const std::size_t n = theta.size();
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d g = _mm256_set1_pd(gamma);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_loadu_pd(theta.data() + i);
    _mm256_storeu_pd(out.data() + i, shrink_lanes(t, _mm256_and_pd(t, abs_mask), g));
  }
  for (; i < n; ++i) {
    const double r = std::abs(theta[i]) - gamma;
    out[i] = r > 0.0 ? (theta[i] < 0.0 ? -r : r) : 0.0;
  }
}

AVX2_FN void adaptive_shrink_avx2(std::span<const double> theta, std::span<double> out,
                                  double scaled_lambda, double offset, double floor) {
  const std::size_t n = theta.size();
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d lam = _mm256_set1_pd(scaled_lambda);
  const __m256d off = _mm256_set1_pd(offset);
  const __m256d flo = _mm256_set1_pd(floor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_loadu_pd(theta.data() + i);
    const __m256d mag = _mm256_and_pd(t, abs_mask);
    const __m256d denom = _mm256_add_pd(mag, off);
    const __m256d keep = _mm256_cmp_pd(denom, flo, _CMP_GT_OQ);
    const __m256d r = shrink_lanes(t, mag, _mm256_div_pd(lam, denom));
    _mm256_storeu_pd(out.data() + i, _mm256_and_pd(r, keep));
  }
  for (; i < n; ++i) {
    const double mag = std::abs(theta[i]);
    const double denom = mag + offset;
    const double r = mag - scaled_lambda / denom;
    out[i] = (denom <= floor || r <= 0.0) ? 0.0 : (theta[i] < 0.0 ? -r : r);
  }
}

constexpr KernelTable kAvx2{Isa::avx2,        dot_avx2,    axpy_avx2,
                            symv_avx2,        ger_avx2,    soft_threshold_avx2,
                            adaptive_shrink_avx2};

}  // namespace

const KernelTable& avx2_impl() { return kAvx2; }

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

#else

const KernelTable& avx2_impl() { return scalar_table(); }
bool cpu_has_avx2() { return false; }

#endif

}  // namespace sparse_armax::kernels::detail
