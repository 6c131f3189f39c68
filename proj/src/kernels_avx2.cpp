// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma;
// it must only be entered through the dispatch table after a cpuid check.

#include "fairpost/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <cmath>

namespace fairpost::kernels::detail {
namespace {

inline double reduce_add(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                              acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail = std::fma(a[i], b[i], tail);
    return reduce_add(acc) + tail;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

double hinge_sum_avx2(const double* margin, const double* slope, double lambda,
                      std::size_t n) {
    const __m256d vl = _mm256_set1_pd(lambda);
    const __m256d zero = _mm256_setzero_pd();
    __m256d acc = zero;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_fnmadd_pd(vl, _mm256_loadu_pd(slope + i),
                                     _mm256_loadu_pd(margin + i));
        acc = _mm256_add_pd(acc, _mm256_max_pd(v, zero));
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        const double v = std::fma(-lambda, slope[i], margin[i]);
        if (v > 0.0) tail += v;
    }
    return reduce_add(acc) + tail;
}

double indicator_weighted_sum_avx2(const double* margin, const double* slope,
                                   const double* w, double lambda,
                                   std::size_t n) {
    const __m256d vl = _mm256_set1_pd(lambda);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // margin > lambda*slope evaluated as margin - lambda*slope > 0 would
        // change rounding; compare against the exact product instead.
        __m256d prod = _mm256_mul_pd(vl, _mm256_loadu_pd(slope + i));
        __m256d mask =
            _mm256_cmp_pd(_mm256_loadu_pd(margin + i), prod, _CMP_GT_OQ);
        acc = _mm256_add_pd(acc, _mm256_and_pd(mask, _mm256_loadu_pd(w + i)));
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        if (margin[i] > lambda * slope[i]) tail += w[i];
    }
    return reduce_add(acc) + tail;
}

}  // namespace

const Backend* avx2_backend() {
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma"))
        return nullptr;
    static const Backend backend{dot_avx2, axpy_avx2, hinge_sum_avx2,
                                 indicator_weighted_sum_avx2, "avx2"};
    return &backend;
}

}  // namespace fairpost::kernels::detail

#else

namespace fairpost::kernels::detail {
const Backend* avx2_backend() { return nullptr; }
}  // namespace fairpost::kernels::detail

#endif
