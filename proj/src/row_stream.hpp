#pragma once

// Streaming generation of arrow-mask rows for the large Monte Carlo engines.
// Word-addressed counter draws: one 128-bit block covers two 64-site words of
// direction bits; branch sites are placed by geometric gap skipping, so a row
// costs O(sites/64 + eps * sites) blocks. Same laws as the materialized
// per-site generators, independent streams.

#include <cmath>
#include <cstdint>
#include <vector>

#include "wns/rng.hpp"

namespace wns {

struct RowMasks {
    std::vector<std::uint64_t> go_right;
    std::vector<std::uint64_t> go_left;
    std::size_t n_sites = 0;
    std::uint64_t tail_mask = 0;  // valid bits of the last word

    explicit RowMasks(std::size_t sites)
        : go_right((sites + 63) / 64), go_left((sites + 63) / 64), n_sites(sites) {
        const std::size_t rem = sites % 64;
        tail_mask = rem ? ((std::uint64_t(1) << rem) - 1) : ~std::uint64_t(0);
    }
    std::size_t nwords() const { return go_right.size(); }
};

// direction words: bit = 1 means the site's single arrow points right
inline void fill_direction_words(const SeedSpec& seed, Draw purpose, std::int64_t t,
                                 std::uint64_t* words, std::size_t nwords) {
    for (std::size_t k = 0; 2 * k < nwords; ++k) {
        const auto blk = draw128(seed, purpose, std::int64_t(k), t);
        words[2 * k] = blk[0];
        if (2 * k + 1 < nwords) words[2 * k + 1] = blk[1];
    }
}

inline void mask_tail(std::uint64_t* words, std::size_t nwords, std::uint64_t tail) {
    if (nwords) words[nwords - 1] &= tail;
}

inline void fill_web_row(const SeedSpec& seed, std::int64_t t, RowMasks& row) {
    fill_direction_words(seed, Draw::RowWeb, t, row.go_right.data(), row.nwords());
    mask_tail(row.go_right.data(), row.nwords(), row.tail_mask);
    for (std::size_t i = 0; i < row.nwords(); ++i) row.go_left[i] = ~row.go_right[i];
    mask_tail(row.go_left.data(), row.nwords(), row.tail_mask);
}

// visit branch-site indices: Bernoulli(eps) per site via geometric gaps
template <class Fn>
inline void for_each_branch_site(const SeedSpec& seed, Draw purpose, std::int64_t t, double eps,
                                 std::size_t n_sites, Fn&& fn) {
    if (eps <= 0.0) return;
    if (eps >= 1.0) {
        for (std::size_t j = 0; j < n_sites; ++j) fn(j);
        return;
    }
    const double log1m = std::log1p(-eps);
    std::uint32_t k = 0;
    std::size_t pos = 0;
    while (true) {
        const double u = to_unit_pos(draw_u64(seed, purpose, t, 0, k++));
        pos += std::size_t(std::floor(std::log(u) / log1m));
        if (pos >= n_sites) break;
        fn(pos);
        ++pos;
    }
}

inline void fill_net_row(const SeedSpec& seed, std::int64_t t, double eps, RowMasks& row) {
    fill_direction_words(seed, Draw::RowNetDir, t, row.go_right.data(), row.nwords());
    mask_tail(row.go_right.data(), row.nwords(), row.tail_mask);
    for (std::size_t i = 0; i < row.nwords(); ++i) row.go_left[i] = ~row.go_right[i];
    mask_tail(row.go_left.data(), row.nwords(), row.tail_mask);
    for_each_branch_site(seed, Draw::RowNetBranch, t, eps, row.n_sites, [&](std::size_t j) {
        row.go_right[j / 64] |= std::uint64_t(1) << (j % 64);
        row.go_left[j / 64] |= std::uint64_t(1) << (j % 64);
    });
}

// net row with every branch site resolved by an independent fair sign: the
// web-in-net composition, streamed
inline void fill_web_in_net_row(const SeedSpec& seed, std::int64_t t, double eps, RowMasks& row) {
    fill_direction_words(seed, Draw::RowNetDir, t, row.go_right.data(), row.nwords());
    std::uint32_t k = 0;
    for_each_branch_site(seed, Draw::RowNetBranch, t, eps, row.n_sites, [&](std::size_t j) {
        const bool right = draw_u64(seed, Draw::RowSign, t, std::int64_t(j), k++) >> 63;
        if (right)
            row.go_right[j / 64] |= std::uint64_t(1) << (j % 64);
        else
            row.go_right[j / 64] &= ~(std::uint64_t(1) << (j % 64));
    });
    mask_tail(row.go_right.data(), row.nwords(), row.tail_mask);
    for (std::size_t i = 0; i < row.nwords(); ++i) row.go_left[i] = ~row.go_right[i];
    mask_tail(row.go_left.data(), row.nwords(), row.tail_mask);
}

}  // namespace wns
