#if defined(__x86_64__) || defined(_M_X64)

#include "fairprice/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace fairprice::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double avx2_sum_abs_diff(const double* a, const double* b, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_add_pd(acc0, _mm256_andnot_pd(sign_mask, d0));
        acc1 = _mm256_add_pd(acc1, _mm256_andnot_pd(sign_mask, d1));
    }
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_add_pd(acc0, _mm256_andnot_pd(sign_mask, d));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += std::fabs(a[i] - b[i]);
    return acc;
}

double avx2_sum_sq_diff(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(d, d, acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void avx2_outer_accum(double* dst, const double* a, std::size_t na,
                      const double* b, std::size_t nb) {
    for (std::size_t i = 0; i < na; ++i) {
        const __m256d ai = _mm256_set1_pd(a[i]);
        double* row = dst + i * nb;
        std::size_t j = 0;
        for (; j + 4 <= nb; j += 4) {
            __m256d r = _mm256_loadu_pd(row + j);
            r = _mm256_fmadd_pd(ai, _mm256_loadu_pd(b + j), r);
            _mm256_storeu_pd(row + j, r);
        }
        for (; j < nb; ++j) row[j] += a[i] * b[j];
    }
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops{avx2_sum_abs_diff, avx2_sum_sq_diff, avx2_outer_accum,
                         "avx2"};
    return ops;
}

bool avx2_supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

}  // namespace fairprice::kernels

#else

#include "fairprice/kernels.hpp"

namespace fairprice::kernels {

const Ops& avx2_ops() { return scalar_ops(); }
bool avx2_supported() { return false; }

}  // namespace fairprice::kernels

#endif
