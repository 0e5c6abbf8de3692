#include "fedgat/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

#if defined(__x86_64__) || defined(_M_X64)
#include <cpuid.h>
#endif

namespace fedgat::kernels {
namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(_M_X64)
    unsigned eax = 0, ebx = 0, ecx = 0, edx = 0;
    if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
    const bool fma = (ecx & (1u << 12)) != 0;
    const bool osxsave = (ecx & (1u << 27)) != 0;
    if (!fma || !osxsave) return false;
    if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
    return (ebx & (1u << 5)) != 0;  // AVX2
#else
    return false;
#endif
}

const Backend* pick(const std::string& name) {
    if (name == "scalar") return &scalar_backend();
#if defined(__x86_64__) || defined(_M_X64)
    if (name == "avx2") {
        if (!cpu_has_avx2_fma()) throw std::runtime_error("kernels: CPU does not support avx2+fma");
        return &avx2_backend();
    }
#endif
#if defined(__aarch64__)
    if (name == "neon") return &neon_backend();
#endif
    if (name == "auto") {
#if defined(__x86_64__) || defined(_M_X64)
        if (cpu_has_avx2_fma()) return &avx2_backend();
#endif
#if defined(__aarch64__)
        return &neon_backend();
#endif
        return &scalar_backend();
    }
    throw std::runtime_error("kernels: unknown backend '" + name + "'");
}

const Backend* initial_backend() {
    if (const char* env = std::getenv("FEDGAT_KERNELS"); env != nullptr && *env != '\0') {
        return pick(env);
    }
    return pick("auto");
}

const Backend*& active_slot() {
    static const Backend* b = initial_backend();
    return b;
}

}  // namespace

const Backend& active() { return *active_slot(); }

void select(const std::string& name) { active_slot() = pick(name); }

std::vector<std::string> available_backends() {
    std::vector<std::string> out{"scalar"};
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2_fma()) out.emplace_back("avx2");
#endif
#if defined(__aarch64__)
    out.emplace_back("neon");
#endif
    return out;
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    const Backend& kb = active();
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            kb.axpy(arow[l], b + l * n, crow, n);
        }
    }
}

}  // namespace fedgat::kernels
