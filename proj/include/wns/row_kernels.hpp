#pragma once

// Data-parallel inner loops shared by the lattice engines.
//
// Two kernels carry essentially all of the Monte Carlo cost:
//
//   step_sites    - one time step of site-set evolution, 1 bit per site.
//                   Used for coalescing/branching point sets, reachability
//                   and the ordered-pair DP.
//   evolve_mass   - one time step of the measure recursion
//                   rho'(y) = rho(y-1) w(y-1) + rho(y+1) (1 - w(y+1)),
//                   in the staggered site indexing. Used for transition
//                   kernels and the measure-valued process.
//
// Each has a scalar reference implementation and an AVX2 variant selected at
// runtime. Variants are bit-for-bit equivalent (the scalar path uses fma so
// both round identically), which the test suite asserts; results therefore do
// not depend on the machine the run happens to land on.
//
// Site indexing: site j in a row of epoch parity p stands for x = x0 + 2j + p.
// Moving to the next row flips p. With p = 0 ("down phase") a right move keeps
// j and a left move goes to j-1; with p = 1 ("up phase") a right move goes to
// j+1 and a left move keeps j. Bits beyond n are kept zero by the caller.

#include <cstddef>
#include <cstdint>

namespace wns {

enum class StepPhase : int { Down = 0, Up = 1 };

struct RowKernels {
    // occupied_next[j] = OR of occupied sources moving into j, masked by
    // go_right / go_left (per-site arrow availability). Word arrays of
    // length nwords; logical site count n = bits in use.
    void (*step_sites)(std::uint64_t* next, const std::uint64_t* cur,
                       const std::uint64_t* go_right, const std::uint64_t* go_left,
                       std::size_t nwords, StepPhase phase);

    // next[j] = sum of mass moving into j; omega gives per-site right-jump
    // probabilities. Returns mass lost over the row ends.
    double (*evolve_mass)(double* next, const double* cur, const double* omega,
                          std::size_t n, StepPhase phase);

    const char* name;
};

const RowKernels& row_kernels_scalar();
const RowKernels& row_kernels_avx2();   // valid only if cpu_has_avx2()
bool cpu_has_avx2();

// Active kernel set: AVX2 when available unless WNS_SIMD=scalar is set in the
// environment (WNS_SIMD=avx2 forces a hard error if unsupported).
const RowKernels& row_kernels();

}  // namespace wns
