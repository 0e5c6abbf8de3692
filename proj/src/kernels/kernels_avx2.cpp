// AVX2/FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the dispatcher has confirmed CPU support.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "fedgat/kernels.hpp"

namespace fedgat::kernels {
namespace {

constexpr std::size_t kWidth = 4;  // doubles per 256-bit register

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_avx2(const double* a, double c, double* out, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(vc, _mm256_loadu_pd(a + i)));
    }
    for (; i < n; ++i) out[i] = c * a[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 * kWidth <= n; i += 2 * kWidth) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + kWidth), _mm256_loadu_pd(b + i + kWidth), acc1);
    }
    for (; i + kWidth <= n; i += kWidth) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double total = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += a[i];
    return total;
}

}  // namespace

const Backend& avx2_backend() {
    static const Backend b{
        "avx2", add_avx2, sub_avx2, mul_avx2, scale_avx2, axpy_avx2, dot_avx2, sum_avx2,
    };
    return b;
}

}  // namespace fedgat::kernels

#endif  // x86_64
