// AVX2 variants of the row kernels. Compiled with -mavx2 -mfma and entered
// only after a runtime cpu check. Kept bit-for-bit equivalent to the scalar
// reference (same per-element operation order, fma in both).

#include "wns/row_kernels.hpp"

#if defined(WNS_HAVE_AVX2)

#include <immintrin.h>

namespace wns {

namespace {

void step_sites_avx2(std::uint64_t* next, const std::uint64_t* cur,
                     const std::uint64_t* go_right, const std::uint64_t* go_left,
                     std::size_t nwords, StepPhase phase) {
    if (nwords == 0) return;
    if (phase == StepPhase::Down) {
        // next[i] = (cur[i]&R[i]) | ((cur[i]&L[i])>>1) | ((cur[i+1]&L[i+1])<<63)
        std::size_t i = 0;
        for (; i + 4 < nwords; i += 4) {
            const __m256i c0 = _mm256_loadu_si256((const __m256i*)(cur + i));
            const __m256i r0 = _mm256_loadu_si256((const __m256i*)(go_right + i));
            const __m256i l0 = _mm256_loadu_si256((const __m256i*)(go_left + i));
            const __m256i c1 = _mm256_loadu_si256((const __m256i*)(cur + i + 1));
            const __m256i l1 = _mm256_loadu_si256((const __m256i*)(go_left + i + 1));
            const __m256i stay = _mm256_and_si256(c0, r0);
            const __m256i dn = _mm256_srli_epi64(_mm256_and_si256(c0, l0), 1);
            const __m256i carry = _mm256_slli_epi64(_mm256_and_si256(c1, l1), 63);
            _mm256_storeu_si256((__m256i*)(next + i),
                                _mm256_or_si256(stay, _mm256_or_si256(dn, carry)));
        }
        for (; i < nwords; ++i) {
            std::uint64_t w = (cur[i] & go_right[i]) | ((cur[i] & go_left[i]) >> 1);
            if (i + 1 < nwords) w |= (cur[i + 1] & go_left[i + 1]) << 63;
            next[i] = w;
        }
    } else {
        // next[i] = (cur[i]&L[i]) | ((cur[i]&R[i])<<1) | ((cur[i-1]&R[i-1])>>63)
        next[0] = (cur[0] & go_left[0]) | ((cur[0] & go_right[0]) << 1);
        std::size_t i = 1;
        for (; i + 4 <= nwords; i += 4) {
            const __m256i c0 = _mm256_loadu_si256((const __m256i*)(cur + i));
            const __m256i r0 = _mm256_loadu_si256((const __m256i*)(go_right + i));
            const __m256i l0 = _mm256_loadu_si256((const __m256i*)(go_left + i));
            const __m256i cm = _mm256_loadu_si256((const __m256i*)(cur + i - 1));
            const __m256i rm = _mm256_loadu_si256((const __m256i*)(go_right + i - 1));
            const __m256i stay = _mm256_and_si256(c0, l0);
            const __m256i up = _mm256_slli_epi64(_mm256_and_si256(c0, r0), 1);
            const __m256i carry = _mm256_srli_epi64(_mm256_and_si256(cm, rm), 63);
            _mm256_storeu_si256((__m256i*)(next + i),
                                _mm256_or_si256(stay, _mm256_or_si256(up, carry)));
        }
        for (; i < nwords; ++i) {
            next[i] = (cur[i] & go_left[i]) | ((cur[i] & go_right[i]) << 1) |
                      ((cur[i - 1] & go_right[i - 1]) >> 63);
        }
    }
}

double evolve_mass_avx2(double* next, const double* cur, const double* omega,
                        std::size_t n, StepPhase phase) {
    if (n == 0) return 0.0;
    const __m256d one = _mm256_set1_pd(1.0);
    double lost;
    if (phase == StepPhase::Down) {
        std::size_t j = 0;
        for (; j + 4 < n; j += 4) {
            const __m256d c0 = _mm256_loadu_pd(cur + j);
            const __m256d w0 = _mm256_loadu_pd(omega + j);
            const __m256d c1 = _mm256_loadu_pd(cur + j + 1);
            const __m256d w1 = _mm256_loadu_pd(omega + j + 1);
            const __m256d from_right = _mm256_mul_pd(c1, _mm256_sub_pd(one, w1));
            _mm256_storeu_pd(next + j, _mm256_fmadd_pd(c0, w0, from_right));
        }
        for (; j < n; ++j) {
            const double from_right = (j + 1 < n) ? cur[j + 1] * (1.0 - omega[j + 1]) : 0.0;
            next[j] = __builtin_fma(cur[j], omega[j], from_right);
        }
        lost = cur[0] * (1.0 - omega[0]);
    } else {
        next[0] = __builtin_fma(cur[0], 1.0 - omega[0], 0.0);
        std::size_t j = 1;
        for (; j + 4 <= n; j += 4) {
            const __m256d c0 = _mm256_loadu_pd(cur + j);
            const __m256d w0 = _mm256_loadu_pd(omega + j);
            const __m256d cm = _mm256_loadu_pd(cur + j - 1);
            const __m256d wm = _mm256_loadu_pd(omega + j - 1);
            const __m256d from_left = _mm256_mul_pd(cm, wm);
            _mm256_storeu_pd(next + j, _mm256_fmadd_pd(c0, _mm256_sub_pd(one, w0), from_left));
        }
        for (; j < n; ++j)
            next[j] = __builtin_fma(cur[j], 1.0 - omega[j], cur[j - 1] * omega[j - 1]);
        lost = cur[n - 1] * omega[n - 1];
    }
    return lost;
}

const RowKernels kAvx2 = {step_sites_avx2, evolve_mass_avx2, "avx2"};

}  // namespace

const RowKernels& row_kernels_avx2() { return kAvx2; }

}  // namespace wns

#endif  // WNS_HAVE_AVX2
