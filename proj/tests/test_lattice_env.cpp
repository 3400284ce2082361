#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wns/lattice_env.hpp"
#include "wns/path_engine.hpp"

using namespace wns;

namespace {

const LatticeWindow kBig{-700, 700, 0, 1420, Parity::Even};  // ~1e6 sites
const LatticeWindow kSmall{-12, 12, 0, 10, Parity::Even};

template <class Fn>
void for_sites(const LatticeWindow& w, Fn&& fn) {
    for (std::int32_t t = w.t_min; t <= w.t_max; ++t)
        for (std::int32_t x = w.row_first_x(t); x <= w.x_max; x += 2) fn(x, t);
}

double binom_3sigma(double p, double n) { return 3.0 * std::sqrt(p * (1.0 - p) / n); }

// every forward path against every dual path: no sign change of the gap
bool non_crossing(const ArrowField& fwd, const ArrowField& dual, const TracePolicy& fp,
                  const TracePolicy& dp) {
    const LatticeWindow& w = fwd.window();
    for (std::int32_t xs = w.row_first_x(w.t_min); xs <= w.x_max; xs += 2) {
        const LatticePath pi = trace_path(fwd, {xs, w.t_min}, fp, 1 << 20);
        const LatticeWindow& dw = dual.window();
        for (std::int32_t xd = dw.row_first_x(dw.t_max); xd <= dw.x_max; xd += 2) {
            // dual paths run downward: trace on the reversed-time field
            std::int32_t x = xd;
            std::vector<std::int32_t> dpos{x};
            for (std::int32_t t = dw.t_max; t > dw.t_min; --t) {
                const Arrow a = dual.arrow(x, t);
                const Arrow dir = (a == Arrow::Both)
                                      ? (dp.kind == TracePolicy::Kind::Leftmost ? Arrow::Left
                                                                                : Arrow::Right)
                                      : a;
                x += (dir == Arrow::Right) ? 1 : -1;
                if (x < dw.x_min || x > dw.x_max) break;
                dpos.push_back(x);
            }
            // dpos[i] = dual position at time dw.t_max - i
            int sign_seen = 0;
            for (std::size_t i = 0; i < dpos.size(); ++i) {
                const std::int32_t t = dw.t_max - std::int32_t(i);
                if (t < pi.start.t || t > pi.end_t()) continue;
                const std::int32_t gap = pi.position_at(t) - dpos[i];
                const int sgn = (gap > 0) - (gap < 0);
                if (sgn == 0) continue;
                if (sign_seen == 0) sign_seen = sgn;
                else if (sign_seen != sgn) return false;
            }
        }
    }
    return true;
}

}  // namespace

TEST_CASE("gen_web_field: determinism, invariant, marginal") {
    const SeedSpec seed{101, 3};
    const ArrowField a = gen_web_field(kBig, seed);
    const ArrowField b = gen_web_field(kBig, seed);
    CHECK(a == b);
    CHECK(gen_web_field(kBig, {101, 4}).cells() != a.cells());

    std::int64_t rights = 0, total = 0;
    for (std::uint8_t c : a.cells()) {
        const Arrow ar = Arrow(c);
        REQUIRE((ar == Arrow::Left || ar == Arrow::Right));
        rights += (ar == Arrow::Right);
        ++total;
    }
    CHECK(total > 990000);
    CHECK(std::abs(double(rights) / double(total) - 0.5) < binom_3sigma(0.5, double(total)));
}

TEST_CASE("gen_net_field: degenerate cases and branch fraction") {
    const SeedSpec seed{102, 0};
    CHECK_THROWS_AS(gen_net_field(kSmall, 1.5, seed), std::invalid_argument);

    const ArrowField n0 = gen_net_field(kSmall, 0.0, seed);
    for_sites(kSmall, [&](std::int32_t x, std::int32_t t) {
        const Arrow a = n0.arrow(x, t);
        CHECK((a == Arrow::Left || a == Arrow::Right));
    });
    const ArrowField n1 = gen_net_field(kSmall, 1.0, seed);
    for_sites(kSmall, [&](std::int32_t x, std::int32_t t) { CHECK(n1.arrow(x, t) == Arrow::Both); });

    const ArrowField n = gen_net_field(kBig, 0.05, seed);
    std::int64_t both = 0;
    for (std::uint8_t c : n.cells()) both += (Arrow(c) == Arrow::Both);
    const double frac = double(both) / double(n.n_sites());
    CHECK(std::abs(frac - 0.05) < binom_3sigma(0.05, double(n.n_sites())));
}

TEST_CASE("gen_kill_field: parameter law and oriented-percolation case") {
    const SeedSpec seed{103, 0};
    CHECK_THROWS_AS(gen_kill_field(kSmall, 0.7, 0.4, seed), std::invalid_argument);

    const ArrowField k = gen_kill_field(kBig, 0.1, 0.2, seed);
    std::int64_t none = 0, both = 0;
    for (std::uint8_t c : k.cells()) {
        none += (Arrow(c) == Arrow::None);
        both += (Arrow(c) == Arrow::Both);
    }
    const double n = double(k.n_sites());
    CHECK(std::abs(none / n - 0.2) < binom_3sigma(0.2, n));
    CHECK(std::abs(both / n - 0.1) < binom_3sigma(0.1, n));

    // b = p^2, kappa = (1-p)^2 gives the oriented-percolation arrow law:
    // single arrows carry probability p(1-p) each
    const double p = 0.6;
    CHECK((1.0 - p * p - (1 - p) * (1 - p)) / 2.0 == doctest::Approx(p * (1 - p)));
    const ArrowField op = gen_kill_field(kBig, p * p, (1 - p) * (1 - p), seed);
    std::int64_t left = 0;
    for (std::uint8_t c : op.cells()) left += (Arrow(c) == Arrow::Left);
    CHECK(std::abs(left / n - p * (1 - p)) < binom_3sigma(p * (1 - p), n));

    // kappa = 0 reduces to the net generator's site law
    const ArrowField nk = gen_kill_field(kBig, 0.05, 0.0, seed);
    std::int64_t nk_both = 0, nk_none = 0;
    for (std::uint8_t c : nk.cells()) {
        nk_both += (Arrow(c) == Arrow::Both);
        nk_none += (Arrow(c) == Arrow::None);
    }
    CHECK(nk_none == 0);
    CHECK(std::abs(nk_both / n - 0.05) < binom_3sigma(0.05, n));
}

TEST_CASE("gen_environment marginals") {
    const SeedSpec seed{104, 0};
    const Environment half = gen_environment(kSmall, mu_delta(0.5), seed);
    for_sites(kSmall, [&](std::int32_t x, std::int32_t t) { CHECK(half.omega(x, t) == 0.5); });

    const Environment u = gen_environment(kBig, mu_uniform(), seed);
    double mean = 0.0, meansq = 0.0;
    for (double v : u.values()) {
        mean += v;
        meansq += v * v;
    }
    const double n = double(u.n_sites());
    mean /= n;
    meansq /= n;
    CHECK(std::abs(mean - 0.5) < 3.0 / std::sqrt(12.0 * n));
    CHECK(std::abs(meansq - 1.0 / 3.0) < 3.0 * std::sqrt((0.2 - 1.0 / 9.0) / n));

    const Environment tp = gen_environment(kSmall, mu_two_point(0.5, 0.5), seed);
    for_sites(kSmall, [&](std::int32_t x, std::int32_t t) {
        const double v = tp.omega(x, t);
        CHECK((v == 0.0 || v == 1.0));
    });
}

TEST_CASE("sample_web_from_env: deterministic, symmetric, tower property") {
    const SeedSpec seed{105, 0};
    Environment ones(kSmall);
    for_sites(kSmall, [&](std::int32_t x, std::int32_t t) { ones.set_omega(x, t, 1.0); });
    const ArrowField right = sample_web_from_env(ones, seed);
    for_sites(kSmall, [&](std::int32_t x, std::int32_t t) { CHECK(right.arrow(x, t) == Arrow::Right); });

    // unconditional right-fraction = E[omega] = 1/2 for uniform environments
    const Environment u = gen_environment(kBig, mu_uniform(), seed);
    const ArrowField w = sample_web_from_env(u, seed.with_stream(9));
    std::int64_t rights = 0;
    for (std::uint8_t c : w.cells()) rights += (Arrow(c) == Arrow::Right);
    const double n = double(w.n_sites());
    CHECK(std::abs(rights / n - 0.5) < binom_3sigma(0.5, n));
    CHECK(w.kind() == FieldKind::Web);
}

TEST_CASE("dual_field: mirror rule, double dual, law preservation") {
    const SeedSpec seed{106, 0};
    const ArrowField web = gen_web_field(kSmall, seed);
    const ArrowField dual = dual_field(web);
    CHECK(dual.kind() == FieldKind::Dual);
    CHECK(dual.window().parity == Parity::Odd);

    // mirror rule cell by cell, e.g. forward Right at (0,0) -> dual Left at (0,1)
    const LatticeWindow& dw = dual.window();
    for (std::int32_t t = dw.t_min; t <= dw.t_max; ++t)
        for (std::int32_t x = dw.row_first_x(t); x <= dw.x_max; x += 2) {
            const Arrow f = web.arrow(x, t - 1);
            const Arrow d = dual.arrow(x, t);
            CHECK(d == (f == Arrow::Right ? Arrow::Left
                                          : f == Arrow::Left ? Arrow::Right : Arrow::Both));
        }

    // the double dual is the forward field shifted two rows up
    const ArrowField dd = dual_field(dual);
    const LatticeWindow& ddw = dd.window();
    CHECK(ddw.parity == Parity::Even);
    for (std::int32_t t = ddw.t_min; t <= ddw.t_max; ++t)
        for (std::int32_t x = ddw.row_first_x(t); x <= ddw.x_max; x += 2)
            CHECK(dd.arrow(x, t) == web.arrow(x, t - 2));

    // dual of a net has the same branch fraction (equally distributed)
    const ArrowField net = gen_net_field(kBig, 0.05, seed);
    const ArrowField dnet = dual_field(net);
    std::int64_t both = 0;
    for (std::uint8_t c : dnet.cells()) both += (Arrow(c) == Arrow::Both);
    CHECK(std::abs(double(both) / double(dnet.n_sites()) - 0.05) <
          binom_3sigma(0.05, double(dnet.n_sites())));

    CHECK_THROWS_AS(dual_field(gen_kill_field(kSmall, 0.1, 0.2, seed)), std::invalid_argument);
}

TEST_CASE("web duality: strict non-crossing on small windows") {
    for (std::uint64_t s = 0; s < 12; ++s) {
        const ArrowField web = gen_web_field(kSmall, {107, s});
        const ArrowField dual = dual_field(web);
        CHECK(non_crossing(web, dual, TracePolicy::leftmost(), TracePolicy::leftmost()));
    }
}

TEST_CASE("net duality: one-directional crossing constraints") {
    // Paths of the net never cross the dual of the leftmost web from right to
    // left, nor the dual of the rightmost web from left to right. The dual
    // webs come from collapsing the branch sites before taking the dual.
    for (std::uint64_t s = 0; s < 10; ++s) {
        const ArrowField net = gen_net_field(kSmall, 0.3, {108, s});
        ArrowField left_web(net.window(), FieldKind::Web);
        ArrowField right_web(net.window(), FieldKind::Web);
        for (std::int32_t t = kSmall.t_min; t <= kSmall.t_max; ++t)
            for (std::int32_t x = kSmall.row_first_x(t); x <= kSmall.x_max; x += 2) {
                const Arrow a = net.arrow(x, t);
                left_web.set_arrow(x, t, has_left(a) ? Arrow::Left : Arrow::Right);
                right_web.set_arrow(x, t, has_right(a) ? Arrow::Right : Arrow::Left);
            }
        const ArrowField dual_left = dual_field(left_web);
        const ArrowField dual_right = dual_field(right_web);

        // enumerate all net paths from all starts; compare against each dual
        // path of the collapsed webs (the duals are webs: unique tracing)
        const LatticeWindow& w = net.window();
        for (std::int32_t xs = w.row_first_x(w.t_min); xs <= w.x_max; xs += 2) {
            std::vector<std::vector<std::int32_t>> stack{{xs}};
            while (!stack.empty()) {
                auto pos = std::move(stack.back());
                stack.pop_back();
                const std::int32_t t = w.t_min + std::int32_t(pos.size()) - 1;
                if (t < w.t_max) {
                    const Arrow a = net.arrow(pos.back(), t);
                    if (has_left(a) && pos.back() - 1 >= w.x_min) {
                        auto nx = pos;
                        nx.push_back(pos.back() - 1);
                        stack.push_back(std::move(nx));
                    }
                    if (has_right(a) && pos.back() + 1 <= w.x_max) {
                        auto nx = pos;
                        nx.push_back(pos.back() + 1);
                        stack.push_back(std::move(nx));
                    }
                    continue;
                }
                // complete path: check against all dual paths
                for (int which = 0; which < 2; ++which) {
                    const ArrowField& dual = which ? dual_right : dual_left;
                    const LatticeWindow& dw = dual.window();
                    for (std::int32_t xd = dw.row_first_x(dw.t_max); xd <= dw.x_max; xd += 2) {
                        std::int32_t x = xd;
                        bool crossed_bad = false;
                        int prev_sign = 0;
                        for (std::int32_t td = dw.t_max; td >= dw.t_min; --td) {
                            if (td - w.t_min >= 0 &&
                                std::size_t(td - w.t_min) < pos.size()) {
                                const std::int32_t gap = pos[std::size_t(td - w.t_min)] - x;
                                const int sgn = (gap > 0) - (gap < 0);
                                if (sgn != 0 && prev_sign != 0 && sgn != prev_sign) {
                                    // sign changed along decreasing time; in
                                    // forward time the path crossed the dual
                                    // from sgn side to prev_sign side
                                    const bool right_to_left = (prev_sign < 0);
                                    if (!which && right_to_left) crossed_bad = true;
                                    if (which && !right_to_left) crossed_bad = true;
                                }
                                if (sgn != 0) prev_sign = sgn;
                            }
                            if (td > dw.t_min) {
                                const Arrow a = dual.arrow(x, td);
                                x += (a == Arrow::Right) ? 1 : -1;
                                if (x < dw.x_min || x > dw.x_max) break;
                            }
                        }
                        CHECK_FALSE(crossed_bad);
                    }
                }
            }
        }
    }
}
