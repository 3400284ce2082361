#include "wns/row_kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace wns {

namespace {

// ---- scalar reference kernels ----

void step_sites_scalar(std::uint64_t* next, const std::uint64_t* cur,
                       const std::uint64_t* go_right, const std::uint64_t* go_left,
                       std::size_t nwords, StepPhase phase) {
    if (phase == StepPhase::Down) {
        // right keeps j, left j+1 -> j
        for (std::size_t i = 0; i < nwords; ++i) {
            const std::uint64_t movers_r = cur[i] & go_right[i];
            std::uint64_t movers_l = (cur[i] & go_left[i]) >> 1;
            if (i + 1 < nwords) movers_l |= (cur[i + 1] & go_left[i + 1]) << 63;
            next[i] = movers_r | movers_l;
        }
    } else {
        // right j -> j+1, left keeps j
        for (std::size_t i = 0; i < nwords; ++i) {
            const std::uint64_t movers_l = cur[i] & go_left[i];
            std::uint64_t movers_r = (cur[i] & go_right[i]) << 1;
            if (i > 0) movers_r |= (cur[i - 1] & go_right[i - 1]) >> 63;
            next[i] = movers_l | movers_r;
        }
    }
}

double evolve_mass_scalar(double* next, const double* cur, const double* omega,
                          std::size_t n, StepPhase phase) {
    if (n == 0) return 0.0;
    double lost;
    if (phase == StepPhase::Down) {
        // next[j] = cur[j]*w[j] + cur[j+1]*(1-w[j+1]); cur[0]'s left move leaves
        for (std::size_t j = 0; j < n; ++j) {
            const double from_right = (j + 1 < n) ? cur[j + 1] * (1.0 - omega[j + 1]) : 0.0;
            next[j] = std::fma(cur[j], omega[j], from_right);
        }
        lost = cur[0] * (1.0 - omega[0]);
    } else {
        // next[j] = cur[j-1]*w[j-1] + cur[j]*(1-w[j]); cur[n-1]'s right move leaves
        for (std::size_t j = 0; j < n; ++j) {
            const double from_left = (j > 0) ? cur[j - 1] * omega[j - 1] : 0.0;
            next[j] = std::fma(cur[j], 1.0 - omega[j], from_left);
        }
        lost = cur[n - 1] * omega[n - 1];
    }
    return lost;
}

const RowKernels kScalar = {step_sites_scalar, evolve_mass_scalar, "scalar"};

}  // namespace

const RowKernels& row_kernels_scalar() { return kScalar; }

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

#if !defined(WNS_HAVE_AVX2)
const RowKernels& row_kernels_avx2() {
    throw std::runtime_error("AVX2 kernels were not built");
}
#endif

const RowKernels& row_kernels() {
    static const RowKernels& chosen = []() -> const RowKernels& {
        const char* force = std::getenv("WNS_SIMD");
        if (force && std::strcmp(force, "scalar") == 0) return kScalar;
#if defined(WNS_HAVE_AVX2)
        if (cpu_has_avx2()) return row_kernels_avx2();
#endif
        if (force && std::strcmp(force, "avx2") == 0)
            throw std::runtime_error("WNS_SIMD=avx2 requested but AVX2 is unavailable");
        return kScalar;
    }();
    return chosen;
}

}  // namespace wns
