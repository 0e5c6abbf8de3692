#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fedgat::kernels {

// Dense double-precision primitives behind every tensor op. Each backend
// provides the same contract; results may differ across backends only by
// floating-point reassociation (FMA, vector partial sums). Within one
// backend the summation order is fixed, so repeated calls are bit-identical.
struct Backend {
    const char* name;

    // out[i] = a[i] (+,-,*) b[i]
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);

    // out[i] = c * a[i]
    void (*scale)(const double* a, double c, double* out, std::size_t n);

    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
};

const Backend& scalar_backend();
#if defined(__x86_64__) || defined(_M_X64)
const Backend& avx2_backend();
#endif
#if defined(__aarch64__)
const Backend& neon_backend();
#endif

// Active backend. Chosen once: FEDGAT_KERNELS=scalar|avx2|neon|auto wins,
// otherwise the widest ISA the CPU reports.
const Backend& active();

// Force a backend by name ("scalar", "avx2", "neon", "auto"). Throws on an
// unknown name or one this CPU cannot run. Intended for tests and the CLI.
void select(const std::string& name);

std::vector<std::string> available_backends();

// Row-major matrix product C(m x n) = A(m x k) * B(k x n), built on axpy so
// it inherits the active backend. C is overwritten.
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

}  // namespace fedgat::kernels
