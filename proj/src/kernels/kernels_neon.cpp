// NEON kernels for aarch64. Advanced SIMD is architecturally guaranteed
// there, so no runtime feature probe is needed beyond the arch check.

#if defined(__aarch64__)

#include <arm_neon.h>

#include "fedgat/kernels.hpp"

namespace fedgat::kernels {
namespace {

constexpr std::size_t kWidth = 2;  // doubles per 128-bit register

void add_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_neon(const double* a, double c, double* out, std::size_t n) {
    const float64x2_t vc = vdupq_n_f64(c);
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        vst1q_f64(out + i, vmulq_f64(vc, vld1q_f64(a + i)));
    }
    for (; i < n; ++i) out[i] = c * a[i];
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double total = vaddvq_f64(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

double sum_neon(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        acc = vaddq_f64(acc, vld1q_f64(a + i));
    }
    double total = vaddvq_f64(acc);
    for (; i < n; ++i) total += a[i];
    return total;
}

}  // namespace

const Backend& neon_backend() {
    static const Backend b{
        "neon", add_neon, sub_neon, mul_neon, scale_neon, axpy_neon, dot_neon, sum_neon,
    };
    return b;
}

}  // namespace fedgat::kernels

#endif  // aarch64
