#pragma once

// Counter-based random streams (Philox4x32-10).
//
// Every random quantity in the library is addressed by
// (master_seed, stream_id, purpose, a, b, k) -> 128 bits, so replicas and
// per-site draws reproduce bit-identically no matter how the surrounding
// loops are ordered or parallelised.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace wns {

struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;  // replica index

    SeedSpec with_stream(std::uint64_t s) const { return {master_seed, s}; }
};

// Draw domains. Adding a new consumer means adding a tag here; reusing a tag
// for two different quantities at the same (a, b, k) would correlate them.
enum class Draw : std::uint32_t {
    WebArrow = 1,
    NetArrow = 2,
    KillArrow = 3,
    EnvOmega = 4,
    EnvArrow = 5,   // sample_web_from_env direction
    SignFlip = 6,   // web-in-net sign at a branch site
    SwitchUp = 7,   // web->net upgrade
    TracePick = 8,  // UniformRandom trace policy
    RowWeb = 9,     // streaming row engine, word-addressed
    RowNetDir = 10,
    RowNetBranch = 11,
    RowSign = 12,
    WalkOmega = 13,  // shared environment draw for n-point walkers
    Gauss = 14,
    TsawTie = 15,
    MeetStep = 16,
    MassOmega = 17,  // streaming environment for measure evolution
    WalkStep = 18,   // per-walker move given the shared environment
    Generic = 19,
};

namespace detail {

inline void philox_round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
    constexpr std::uint32_t kMulA = 0xD2511F53u;
    constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    const std::uint64_t prod0 = std::uint64_t(kMulA) * ctr[0];
    const std::uint64_t prod1 = std::uint64_t(kMulB) * ctr[2];
    const std::uint32_t hi0 = std::uint32_t(prod0 >> 32), lo0 = std::uint32_t(prod0);
    const std::uint32_t hi1 = std::uint32_t(prod1 >> 32), lo1 = std::uint32_t(prod1);
    std::uint32_t out[4];
    out[0] = hi1 ^ ctr[1] ^ key[0];
    out[1] = lo1;
    out[2] = hi0 ^ ctr[3] ^ key[1];
    out[3] = lo0;
    ctr[0] = out[0];
    ctr[1] = out[1];
    ctr[2] = out[2];
    ctr[3] = out[3];
}

}  // namespace detail

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    constexpr std::uint32_t kWeylB = 0xBB67AE85u;
    std::uint32_t c[4] = {ctr[0], ctr[1], ctr[2], ctr[3]};
    std::uint32_t k[2] = {key[0], key[1]};
    for (int r = 0; r < 10; ++r) {
        detail::philox_round(c, k);
        k[0] += kWeylA;
        k[1] += kWeylB;
    }
    return {c[0], c[1], c[2], c[3]};
}

// One 128-bit block for a (purpose, a, b, k) address within a stream.
// a is typically a spatial coordinate (or word index), b a time coordinate,
// k a sub-draw counter. k must stay below 2^24.
inline std::array<std::uint64_t, 2> draw128(const SeedSpec& seed, Draw purpose,
                                            std::int64_t a, std::int64_t b,
                                            std::uint32_t k = 0) {
    const std::array<std::uint32_t, 4> ctr = {
        std::uint32_t(a),
        std::uint32_t(b),
        std::uint32_t(seed.stream_id) ^ (std::uint32_t(seed.stream_id >> 32) * 0x85EBCA6Bu),
        (std::uint32_t(purpose) << 24) | (k & 0xFFFFFFu),
    };
    const std::array<std::uint32_t, 2> key = {std::uint32_t(seed.master_seed),
                                              std::uint32_t(seed.master_seed >> 32)};
    const auto out = philox4x32(ctr, key);
    return {std::uint64_t(out[0]) | (std::uint64_t(out[1]) << 32),
            std::uint64_t(out[2]) | (std::uint64_t(out[3]) << 32)};
}

inline std::uint64_t draw_u64(const SeedSpec& seed, Draw purpose, std::int64_t a,
                              std::int64_t b, std::uint32_t k = 0) {
    return draw128(seed, purpose, a, b, k)[0];
}

// [0,1) with 53 random bits.
inline double to_unit(std::uint64_t u) { return double(u >> 11) * 0x1.0p-53; }

// (0,1], safe under log().
inline double to_unit_pos(std::uint64_t u) { return double((u >> 11) + 1) * 0x1.0p-53; }

inline double draw_unit(const SeedSpec& seed, Draw purpose, std::int64_t a, std::int64_t b,
                        std::uint32_t k = 0) {
    return to_unit(draw_u64(seed, purpose, a, b, k));
}

inline bool draw_bernoulli(const SeedSpec& seed, Draw purpose, std::int64_t a, std::int64_t b,
                           double p, std::uint32_t k = 0) {
    return to_unit(draw_u64(seed, purpose, a, b, k)) < p;
}

// Box-Muller pair from one block.
inline std::array<double, 2> draw_gauss_pair(const SeedSpec& seed, std::int64_t a,
                                             std::int64_t b, std::uint32_t k = 0) {
    const auto blk = draw128(seed, Draw::Gauss, a, b, k);
    const double u1 = to_unit_pos(blk[0]);
    const double u2 = to_unit(blk[1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(th), r * std::sin(th)};
}

// Sequential gaussian source for the SDE solvers: one stream per replica,
// draws addressed by an incrementing counter.
class GaussSource {
  public:
    explicit GaussSource(SeedSpec seed, std::int64_t lane = 0) : seed_(seed), lane_(lane) {}

    double next() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        const auto pair = draw_gauss_pair(seed_, lane_, std::int64_t(idx_++));
        spare_ = pair[1];
        have_ = true;
        return pair[0];
    }

  private:
    SeedSpec seed_;
    std::int64_t lane_;
    std::uint64_t idx_ = 0;
    double spare_ = 0.0;
    bool have_ = false;
};

}  // namespace wns
