#include "epipolicy/error.hpp"
#include "kernel_tables.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace epipolicy::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(EPIPOLICY_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* initial_table() noexcept {
    if (const char* env = std::getenv("EPIPOLICY_SIMD")) {
        const std::string want(env);
        if (want == "scalar") return &detail::kScalarTable;
        if (want == "avx2" && supported(Isa::Avx2)) return &table(Isa::Avx2);
        if (want == "neon" && supported(Isa::Neon)) return &table(Isa::Neon);
    }
    return &table(best_available());
}

std::atomic<const KernelTable*>& current() noexcept {
    static std::atomic<const KernelTable*> ptr{initial_table()};
    return ptr;
}

}  // namespace

std::string_view name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2: return cpu_has_avx2();
        case Isa::Neon:
#if defined(EPIPOLICY_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& table(Isa isa) {
    if (!supported(isa))
        throw ParameterError("SIMD variant '" + std::string(name(isa)) + "' is not available on this machine");
    switch (isa) {
#if defined(EPIPOLICY_HAVE_AVX2)
        case Isa::Avx2: return detail::kAvx2Table;
#endif
#if defined(EPIPOLICY_HAVE_NEON)
        case Isa::Neon: return detail::kNeonTable;
#endif
        default: return detail::kScalarTable;
    }
}

Isa best_available() noexcept {
    if (supported(Isa::Avx2)) return Isa::Avx2;
    if (supported(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

}  // namespace epipolicy::simd
