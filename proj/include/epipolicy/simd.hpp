#pragma once

// Data-parallel inner loops used by the linear algebra and the bootstrap.
//
// Every kernel exists as a scalar reference implementation plus vectorized
// variants (AVX2+FMA on x86-64, NEON on AArch64). The variant is picked once
// at startup from the CPU's capabilities; EPIPOLICY_SIMD=scalar|avx2|neon
// overrides the choice. Vector variants reassociate sums, so they agree with
// the reference to rounding, not bit for bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace epipolicy::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
    Isa isa;
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    void (*scale)(double alpha, double* x, std::size_t n);
    // sum_i w[i] * a[i] * b[i]
    double (*weighted_dot)(const double* w, const double* a, const double* b, std::size_t n);
};

std::string_view name(Isa isa) noexcept;
bool supported(Isa isa) noexcept;

// Throws ParameterError when `isa` is not compiled in or not supported by the CPU.
const KernelTable& table(Isa isa);

const KernelTable& active() noexcept;
void select(Isa isa);
Isa best_available() noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}
inline void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }
inline double weighted_dot(std::span<const double> w, std::span<const double> a,
                           std::span<const double> b) {
    std::size_t n = w.size();
    if (a.size() < n) n = a.size();
    if (b.size() < n) n = b.size();
    return active().weighted_dot(w.data(), a.data(), b.data(), n);
}

}  // namespace epipolicy::simd
