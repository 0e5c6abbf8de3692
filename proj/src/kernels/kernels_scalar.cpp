#include "fedgat/kernels.hpp"

// Reference kernels. Plain loops, one accumulator, no reassociation: these
// define the semantics the SIMD variants are tested against.

namespace fedgat::kernels {
namespace {

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_scalar(const double* a, double c, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = c * a[i];
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

}  // namespace

const Backend& scalar_backend() {
    static const Backend b{
        "scalar", add_scalar, sub_scalar, mul_scalar, scale_scalar, axpy_scalar, dot_scalar, sum_scalar,
    };
    return b;
}

}  // namespace fedgat::kernels
