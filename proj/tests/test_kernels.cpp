#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "wns/rng.hpp"
#include "wns/row_kernels.hpp"

using namespace wns;

namespace {

// independent per-site reference for step_sites
void step_sites_naive(std::vector<std::uint64_t>& next, const std::vector<std::uint64_t>& cur,
                      const std::vector<std::uint64_t>& right,
                      const std::vector<std::uint64_t>& left, std::size_t n, StepPhase phase) {
    const auto get = [](const std::vector<std::uint64_t>& v, std::size_t j) {
        return (v[j / 64] >> (j % 64)) & 1;
    };
    const auto set = [](std::vector<std::uint64_t>& v, std::size_t j) {
        v[j / 64] |= std::uint64_t(1) << (j % 64);
    };
    std::fill(next.begin(), next.end(), 0);
    for (std::size_t j = 0; j < n; ++j) {
        if (!get(cur, j)) continue;
        if (phase == StepPhase::Down) {
            if (get(right, j)) set(next, j);
            if (get(left, j) && j > 0) set(next, j - 1);
        } else {
            if (get(right, j) && j + 1 < n) set(next, j + 1);
            if (get(left, j)) set(next, j);
        }
    }
}

std::vector<std::uint64_t> random_words(SeedSpec seed, int tag, std::size_t nwords,
                                        std::size_t n_sites) {
    std::vector<std::uint64_t> v(nwords);
    for (std::size_t i = 0; i < nwords; ++i) v[i] = draw_u64(seed, Draw::Generic, tag, int(i));
    const std::size_t rem = n_sites % 64;
    if (rem) v[nwords - 1] &= (std::uint64_t(1) << rem) - 1;
    return v;
}

}  // namespace

TEST_CASE("step_sites matches the per-site reference on both phases") {
    const SeedSpec seed{77, 0};
    for (const std::size_t n : {1u, 5u, 63u, 64u, 65u, 129u, 300u, 1000u}) {
        const std::size_t nw = (n + 63) / 64;
        for (int phase = 0; phase < 2; ++phase) {
            const auto cur = random_words(seed, int(n) * 2 + phase, nw, n);
            const auto right = random_words(seed, int(n) * 2 + phase + 7000, nw, n);
            auto left = random_words(seed, int(n) * 2 + phase + 9000, nw, n);
            // make some sites have both, some neither
            std::vector<std::uint64_t> got(nw), want(nw);
            row_kernels_scalar().step_sites(got.data(), cur.data(), right.data(), left.data(), nw,
                                            StepPhase(phase));
            step_sites_naive(want, cur, right, left, n, StepPhase(phase));
            // bits beyond n are zero in inputs so only in-range bits matter
            const std::size_t rem = n % 64;
            if (rem) got[nw - 1] &= (std::uint64_t(1) << rem) - 1;
            CHECK(got == want);
        }
    }
}

TEST_CASE("avx2 kernels agree bit for bit with scalar") {
    if (!cpu_has_avx2()) return;
    const RowKernels& simd = row_kernels_avx2();
    const RowKernels& ref = row_kernels_scalar();
    const SeedSpec seed{78, 0};
    for (const std::size_t n : {1u, 64u, 65u, 255u, 256u, 257u, 2049u}) {
        const std::size_t nw = (n + 63) / 64;
        for (int phase = 0; phase < 2; ++phase) {
            const auto cur = random_words(seed, int(n) + phase, nw, n);
            const auto right = random_words(seed, int(n) + phase + 31, nw, n);
            const auto left = random_words(seed, int(n) + phase + 77, nw, n);
            std::vector<std::uint64_t> a(nw), b(nw);
            ref.step_sites(a.data(), cur.data(), right.data(), left.data(), nw, StepPhase(phase));
            simd.step_sites(b.data(), cur.data(), right.data(), left.data(), nw, StepPhase(phase));
            CHECK(a == b);

            std::vector<double> mass(n), omega(n), ma(n), mb(n);
            for (std::size_t j = 0; j < n; ++j) {
                mass[j] = draw_unit(seed, Draw::Generic, int(j), 1234 + phase);
                omega[j] = draw_unit(seed, Draw::Generic, int(j), 4321 + phase);
            }
            const double la = ref.evolve_mass(ma.data(), mass.data(), omega.data(), n,
                                              StepPhase(phase));
            const double lb = simd.evolve_mass(mb.data(), mass.data(), omega.data(), n,
                                               StepPhase(phase));
            CHECK(la == lb);
            CHECK(ma == mb);  // exact: same fma per element
        }
    }
}

TEST_CASE("evolve_mass conserves mass up to the reported edge loss") {
    const auto& K = row_kernels();
    const SeedSpec seed{79, 0};
    const std::size_t n = 513;
    std::vector<double> mass(n), omega(n), next(n);
    double before = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        mass[j] = draw_unit(seed, Draw::Generic, int(j), 1);
        omega[j] = draw_unit(seed, Draw::Generic, int(j), 2);
        before += mass[j];
    }
    for (int phase = 0; phase < 2; ++phase) {
        const double lost = K.evolve_mass(next.data(), mass.data(), omega.data(), n,
                                          StepPhase(phase));
        double after = 0.0;
        for (double v : next) after += v;
        CHECK(std::abs(before - after - lost) < 1e-10);
    }
}

TEST_CASE("runtime dispatch names a valid kernel set") {
    const auto& K = row_kernels();
    CHECK((std::string(K.name) == "scalar" || std::string(K.name) == "avx2"));
}
