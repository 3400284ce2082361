#include "wns/tsaw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wns/parallel.hpp"

namespace wns {

std::int64_t default_l0(std::int64_t e) {
    // l0({2x, 2x+1}) = 1 and l0({2x-1, 2x}) = 0 for x >= 0, mirror on the left:
    // l0({-x-1, -x}) = l0({x, x+1})
    if (e < 0) e = -e - 1;
    return (e % 2 == 0) ? 1 : 0;
}

std::int64_t zero_l0(std::int64_t) { return 0; }

std::int64_t TsawState::local_time(std::int64_t e) const {
    const std::int64_t idx = e - edge_base;
    if (idx < 0 || idx >= std::int64_t(edge_lt.size()))
        throw std::out_of_range("TsawState: edge outside allocated range");
    return edge_lt[std::size_t(idx)];
}

namespace {

struct Walker {
    std::vector<std::int64_t> lt;
    std::int64_t base;

    Walker(std::uint64_t n_steps, L0Fn l0) {
        // |X_n| grows like n^{2/3}; allocate with headroom and a hard cap
        const double est = 64.0 + 32.0 * std::pow(double(n_steps) + 1.0, 2.0 / 3.0);
        const std::int64_t half = std::min<std::int64_t>(std::int64_t(est) + 8,
                                                         std::int64_t(n_steps) + 2);
        base = -half;
        lt.resize(std::size_t(2 * half));
        for (std::int64_t e = base; e < half; ++e) lt[std::size_t(e - base)] = l0(e);
    }
    std::int64_t& at(std::int64_t e) { return lt[std::size_t(e - base)]; }
};

}  // namespace

TsawState run_tsaw(std::uint64_t n_steps, L0Fn l0, SeedSpec seed,
                   std::vector<std::int64_t>* trajectory) {
    Walker w(n_steps, l0);
    TsawState st;
    st.edge_base = w.base;
    st.initial_edge_mass = 0;
    for (std::int64_t v : w.lt) st.initial_edge_mass += v;
    if (trajectory) {
        trajectory->clear();
        trajectory->reserve(n_steps);
    }

    std::int64_t x = 0;
    std::int64_t lo = 0, hi = 0;
    std::uint64_t ties = 0, tie_lefts = 0;
    for (std::uint64_t n = 0; n < n_steps; ++n) {
        const std::int64_t l_left = w.at(x - 1);
        const std::int64_t l_right = w.at(x);
        bool go_left;
        if (l_left < l_right) {
            go_left = true;
        } else if (l_right < l_left) {
            go_left = false;
        } else {
            go_left = draw_u64(seed, Draw::TsawTie, std::int64_t(n), 0) >> 63;
            ++ties;
            if (go_left) ++tie_lefts;
        }
        if (go_left) {
            ++w.at(x - 1);
            --x;
        } else {
            ++w.at(x);
            ++x;
        }
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        if (trajectory) trajectory->push_back(x);
    }
    st.pos = x;
    st.n_steps = n_steps;
    st.edge_lt = std::move(w.lt);
    st.min_visited = lo;
    st.max_visited = hi;
    st.ties = ties;
    st.tie_lefts = tie_lefts;
    return st;
}

ProfileReport profile_check(const TsawState& st) {
    ProfileReport rep;
    std::int64_t mass = 0;
    for (std::int64_t v : st.edge_lt) mass += v;
    rep.area_ok = (mass - st.initial_edge_mass) == std::int64_t(st.n_steps);
    // The profile is a +-1 path across the visited region, except at the
    // walker itself: the seam pair at X_n carries an even difference (the
    // initial condition already has its flat apex at X_0 = 0).
    rep.step_profile_ok = true;
    for (std::int64_t x = st.min_visited; x <= st.max_visited; ++x) {
        const std::int64_t diff = st.local_time(x) - st.local_time(x - 1);
        if (x == st.pos) {
            if (diff != 0 && diff != 2 && diff != -2) {
                rep.step_profile_ok = false;
                ++rep.violations;
            }
            continue;
        }
        if (diff != 1 && diff != -1) {
            rep.step_profile_ok = false;
            ++rep.violations;
        }
    }
    return rep;
}

ScalingReport scaling_exponent(std::uint64_t n_max, int seeds, SeedSpec seed, bool control,
                               int workers) {
    if (n_max < 10000) throw std::invalid_argument("scaling_exponent: n_max >= 1e4");
    if (seeds < 4) throw std::invalid_argument("scaling_exponent: too few seeds");

    std::vector<std::uint64_t> checkpoints;
    for (std::uint64_t n = 1024; n < n_max; n *= 2) checkpoints.push_back(n);
    checkpoints.push_back(n_max);

    std::vector<std::vector<double>> abs_at(checkpoints.size(),
                                            std::vector<double>(std::size_t(seeds)));
    parallel_replicas(seeds, workers, [&](int rep) {
        const SeedSpec s = seed.with_stream(seed.stream_id + std::uint64_t(rep));
        if (control) {
            // plain simple random walk, 64 steps per draw
            std::int64_t x = 0;
            std::uint64_t n = 0;
            std::size_t ck = 0;
            std::int64_t blk = 0;
            while (n < n_max) {
                std::uint64_t bits = draw_u64(s, Draw::TsawTie, blk++, 1);
                for (int b = 0; b < 64 && n < n_max; ++b, bits >>= 1) {
                    x += (bits & 1) ? 1 : -1;
                    ++n;
                    while (ck < checkpoints.size() && n == checkpoints[ck]) {
                        abs_at[ck][std::size_t(rep)] = double(std::llabs(x));
                        ++ck;
                    }
                }
            }
        } else {
            Walker w(n_max, default_l0);
            std::int64_t x = 0;
            std::size_t ck = 0;
            for (std::uint64_t n = 0; n < n_max; ++n) {
                const std::int64_t l_left = w.at(x - 1);
                const std::int64_t l_right = w.at(x);
                bool go_left;
                if (l_left < l_right)
                    go_left = true;
                else if (l_right < l_left)
                    go_left = false;
                else
                    go_left = draw_u64(s, Draw::TsawTie, std::int64_t(n), 0) >> 63;
                if (go_left) {
                    ++w.at(x - 1);
                    --x;
                } else {
                    ++w.at(x);
                    ++x;
                }
                while (ck < checkpoints.size() && n + 1 == checkpoints[ck]) {
                    abs_at[ck][std::size_t(rep)] = double(std::llabs(x));
                    ++ck;
                }
            }
        }
    });

    ScalingReport out;
    out.seeds = seeds;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        out.ns.push_back(double(checkpoints[i]));
        double m = 0.0;
        for (double v : abs_at[i]) m += v;
        out.mean_abs.push_back(m / double(seeds));
    }
    // fit over the top range; keep the lower range as a finite-size reference
    const std::size_t nf = out.ns.size();
    const std::size_t split = nf / 2;
    out.fit = loglog_slope(std::span(out.ns).subspan(split), std::span(out.mean_abs).subspan(split));
    out.fit_low =
        loglog_slope(std::span(out.ns).first(split + 1), std::span(out.mean_abs).first(split + 1));
    return out;
}

}  // namespace wns
