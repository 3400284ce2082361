#include "wns/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#include "wns/closed_forms.hpp"
#include "wns/lattice_env.hpp"
#include "wns/parallel.hpp"
#include "wns/row_kernels.hpp"
#include "wns/stats.hpp"

namespace wns {

std::pair<ArrowField, SignTable> sample_web_in_net(const ArrowField& net, SeedSpec seed) {
    if (net.kind() != FieldKind::Net)
        throw std::invalid_argument("sample_web_in_net: input must be a net field");
    const LatticeWindow& w = net.window();
    ArrowField web(w, FieldKind::Web);
    SignTable table;
    table.law = SignLaw::Fair;
    for (std::int32_t t = w.t_min; t <= w.t_max; ++t) {
        for (std::int32_t x = w.row_first_x(t); x <= w.x_max; x += 2) {
            const Arrow a = net.arrow(x, t);
            if (a == Arrow::Both) {
                const bool right = draw_u64(seed, Draw::SignFlip, x, t) >> 63;
                table.set(x, t, right ? +1 : -1);
                web.set_arrow(x, t, right ? Arrow::Right : Arrow::Left);
            } else {
                web.set_arrow(x, t, a);
            }
        }
    }
    return {std::move(web), std::move(table)};
}

std::pair<ArrowField, SignTable> sample_web_in_net(const ArrowField& net, const Environment& omega,
                                                   SeedSpec seed) {
    if (net.kind() != FieldKind::Net)
        throw std::invalid_argument("sample_web_in_net: input must be a net field");
    const LatticeWindow& w = net.window();
    ArrowField web(w, FieldKind::Web);
    SignTable table;
    table.law = SignLaw::OmegaWeighted;
    for (std::int32_t t = w.t_min; t <= w.t_max; ++t) {
        for (std::int32_t x = w.row_first_x(t); x <= w.x_max; x += 2) {
            const Arrow a = net.arrow(x, t);
            if (a == Arrow::Both) {
                const bool right =
                    draw_unit(seed, Draw::SignFlip, x, t) < omega.omega(x, t);
                table.set(x, t, right ? +1 : -1);
                web.set_arrow(x, t, right ? Arrow::Right : Arrow::Left);
            } else {
                web.set_arrow(x, t, a);
            }
        }
    }
    return {std::move(web), std::move(table)};
}

ArrowField switch_web_to_net(const ArrowField& web, double eps, SeedSpec seed) {
    if (web.kind() != FieldKind::Web)
        throw std::invalid_argument("switch_web_to_net: input must be a web field");
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("switch_web_to_net: eps in [0,1]");
    const LatticeWindow& w = web.window();
    ArrowField net(w, FieldKind::Net);
    for (std::int32_t t = w.t_min; t <= w.t_max; ++t) {
        for (std::int32_t x = w.row_first_x(t); x <= w.x_max; x += 2) {
            const bool up = draw_unit(seed, Draw::SwitchUp, x, t) < eps;
            net.set_arrow(x, t, up ? Arrow::Both : web.arrow(x, t));
        }
    }
    return net;
}

// ---- relevant separation points & finite graph ----

namespace {

// Everything below works on the cone convention: the bottom row is trimmed by
// U - S on both sides, so every traced object provably stays inside the
// window and the graph propositions hold exactly (no boundary censoring).

struct ReachTable {
    // reach[dt] = occupied mask over site indices of row S + dt
    std::vector<std::vector<std::uint64_t>> rows;
    bool get(const LatticeWindow& w, std::int32_t x, std::int32_t t, std::int32_t S) const {
        const std::int64_t j = (x - w.row_first_x(t)) / 2;
        return (rows[std::size_t(t - S)][std::size_t(j / 64)] >> (j % 64)) & 1;
    }
};

ReachTable reach_from_trimmed_row(const ArrowField& f, std::int32_t S, std::int32_t U) {
    const LatticeWindow& w = f.window();
    const std::int32_t margin = U - S;
    ReachTable reach;
    reach.rows.resize(std::size_t(U - S) + 1);

    const std::int64_t n0 = w.row_size(S);
    std::vector<std::uint64_t> cur(std::size_t((n0 + 63) / 64), 0);
    const std::int32_t fx = w.row_first_x(S);
    for (std::int32_t x = fx; x <= w.x_max; x += 2) {
        if (x < w.x_min + margin || x > w.x_max - margin) continue;
        const std::int64_t j = (x - fx) / 2;
        cur[std::size_t(j / 64)] |= std::uint64_t(1) << (j % 64);
    }
    reach.rows[0] = cur;

    const auto& K = row_kernels();
    for (std::int32_t t = S; t < U; ++t) {
        const std::int64_t n = w.row_size(t);
        const std::int64_t n_next = w.row_size(t + 1);
        const std::size_t nw =
            std::size_t(std::max((n + 63) / 64, (n_next + 63) / 64));
        std::vector<std::uint64_t> right(nw, 0), left(nw, 0), next(nw, 0);
        const std::uint8_t* row = f.row(t);
        for (std::int64_t j = 0; j < n; ++j) {
            const Arrow a = Arrow(row[j]);
            if (has_right(a)) right[std::size_t(j / 64)] |= std::uint64_t(1) << (j % 64);
            if (has_left(a)) left[std::size_t(j / 64)] |= std::uint64_t(1) << (j % 64);
        }
        cur.resize(nw, 0);
        const StepPhase phase =
            (w.row_first_x(t + 1) > w.row_first_x(t)) ? StepPhase::Down : StepPhase::Up;
        K.step_sites(next.data(), cur.data(), right.data(), left.data(), nw, phase);
        const std::int64_t rem = n_next % 64;
        next.resize(std::size_t((n_next + 63) / 64));
        if (rem && !next.empty()) next.back() &= (std::uint64_t(1) << rem) - 1;
        reach.rows[std::size_t(t + 1 - S)] = next;
        cur = std::move(next);
    }
    return reach;
}

inline std::int32_t leftmost_step(const ArrowField& f, std::int32_t x, std::int32_t t) {
    return has_left(f.arrow(x, t)) ? -1 : +1;
}
inline std::int32_t rightmost_step(const ArrowField& f, std::int32_t x, std::int32_t t) {
    return has_right(f.arrow(x, t)) ? +1 : -1;
}

// Trace the (leftmost, rightmost) pair from z, both taking `first` as their
// first step (the branch choice, or the single arrow of a non-branch site).
// Returns positions l, r at times z.t+1 .. U and the last time they coincide
// (or -1 if they never do after the start).
struct PairTrace {
    std::vector<std::int32_t> l, r;  // positions, index i = time z.t + 1 + i
    std::int32_t last_meet_t = -1;   // latest t in [z.t+1, U] with l = r
};

PairTrace trace_pair(const ArrowField& f, Site z, std::int32_t first, std::int32_t U) {
    PairTrace out;
    std::int32_t lx = z.x + first, rx = z.x + first;
    for (std::int32_t t = z.t + 1; t <= U; ++t) {
        out.l.push_back(lx);
        out.r.push_back(rx);
        if (lx == rx) out.last_meet_t = t;
        if (t == U) break;
        const std::int32_t nl = lx + leftmost_step(f, lx, t);
        const std::int32_t nr = rx + rightmost_step(f, rx, t);
        lx = nl;
        rx = nr;
    }
    return out;
}

}  // namespace

std::vector<Site> relevant_separation_points(const ArrowField& net, std::int32_t S,
                                             std::int32_t U) {
    if (S >= U) throw std::invalid_argument("relevant_separation_points: need S < U");
    const LatticeWindow& w = net.window();
    if (S < w.t_min || U > w.t_max)
        throw std::invalid_argument("relevant_separation_points: [S,U] outside window");
    if (w.x_min + (U - S) > w.x_max - (U - S))
        throw std::invalid_argument("relevant_separation_points: window too narrow for the cone");
    const ReachTable reach = reach_from_trimmed_row(net, S, U);

    std::vector<Site> out;
    for (std::int32_t t = S + 1; t < U; ++t) {
        for (std::int32_t x = w.row_first_x(t); x <= w.x_max; x += 2) {
            if (net.arrow(x, t) != Arrow::Both) continue;
            if (!reach.get(w, x, t, S)) continue;
            // leftmost continuation along the left branch, rightmost along the
            // right branch; relevant iff they stay apart strictly before U
            std::int32_t lx = x - 1, rx = x + 1;
            bool meet_before_U = false;
            for (std::int32_t s = t + 1; s < U; ++s) {
                if (lx == rx) {
                    meet_before_U = true;
                    break;
                }
                lx += leftmost_step(net, lx, s);
                rx += rightmost_step(net, rx, s);
            }
            // coincidence exactly at U is allowed
            if (!meet_before_U) out.push_back({x, t});
        }
    }
    return out;
}

std::vector<std::int32_t> FiniteGraphRep::out_edges(std::int32_t v) const {
    std::vector<std::int32_t> out;
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (edges[i].src == v) out.push_back(std::int32_t(i));
    return out;
}

FiniteGraphRep finite_graph(const ArrowField& net, std::int32_t S, std::int32_t U) {
    if (S >= U) throw std::invalid_argument("finite_graph: need S < U");
    const LatticeWindow& w = net.window();
    if (S < w.t_min || U > w.t_max) throw std::invalid_argument("finite_graph: [S,U] in window");
    const std::int32_t margin = U - S;
    if (w.x_min + margin > w.x_max - margin)
        throw std::invalid_argument("finite_graph: window too narrow for the cone");

    FiniteGraphRep g;
    g.time_lo = S;
    g.time_hi = U;

    const std::vector<Site> relevant = relevant_separation_points(net, S, U);
    const ReachTable reach = reach_from_trimmed_row(net, S, U);

    std::map<std::pair<std::int32_t, std::int32_t>, std::int32_t> vertex_at;  // (t,x) -> idx
    const auto add_vertex = [&](Site s, FiniteGraphRep::Vertex::Layer layer,
                                bool bottom_branch = false) {
        const std::int32_t idx = std::int32_t(g.vertices.size());
        g.vertices.push_back({s, layer, bottom_branch});
        vertex_at[{s.t, s.x}] = idx;
        return idx;
    };

    // bottom layer: trimmed time-S row
    for (std::int32_t x = w.row_first_x(S); x <= w.x_max; x += 2) {
        if (x < w.x_min + margin || x > w.x_max - margin) continue;
        add_vertex({x, S}, FiniteGraphRep::Vertex::Layer::Bottom,
                   net.arrow(x, S) == Arrow::Both);
    }
    // interior layer
    for (const Site& z : relevant) add_vertex(z, FiniteGraphRep::Vertex::Layer::Interior);
    // top layer: reachable time-U sites
    for (std::int32_t x = w.row_first_x(U); x <= w.x_max; x += 2) {
        if (reach.get(w, x, U, S))
            add_vertex({x, U}, FiniteGraphRep::Vertex::Layer::Top);
    }

    const auto vertex_index = [&](std::int32_t x, std::int32_t t) {
        const auto it = vertex_at.find({t, x});
        if (it == vertex_at.end())
            throw std::logic_error("finite_graph: edge target is not a vertex");
        return it->second;
    };

    const auto emit_edge = [&](std::int32_t src, Site z, std::int32_t first, char branch) {
        const PairTrace tr = trace_pair(net, z, first, U);
        Site target;
        if (tr.l.back() == tr.r.back()) {
            target = {tr.l.back(), U};
        } else {
            if (tr.last_meet_t < 0) throw std::logic_error("finite_graph: pair never together");
            target = {tr.l[std::size_t(tr.last_meet_t - z.t - 1)], tr.last_meet_t};
        }
        FiniteGraphRep::Edge e;
        e.src = src;
        e.dst = vertex_index(target.x, target.t);
        e.branch = branch;
        const std::size_t len = std::size_t(target.t - z.t);
        e.left_steps.reserve(len);
        e.right_steps.reserve(len);
        std::int32_t px = z.x, qx = z.x;
        for (std::size_t i = 0; i < len; ++i) {
            e.left_steps.push_back(std::int8_t(tr.l[i] - px));
            e.right_steps.push_back(std::int8_t(tr.r[i] - qx));
            px = tr.l[i];
            qx = tr.r[i];
        }
        g.edges.push_back(std::move(e));
    };

    for (std::int32_t v = 0; v < std::int32_t(g.vertices.size()); ++v) {
        const auto& vx = g.vertices[std::size_t(v)];
        if (vx.layer == FiniteGraphRep::Vertex::Layer::Top) continue;
        const Site z = vx.site;
        const Arrow a = net.arrow(z.x, z.t);
        if (vx.layer == FiniteGraphRep::Vertex::Layer::Bottom && a != Arrow::Both) {
            emit_edge(v, z, a == Arrow::Right ? +1 : -1, a == Arrow::Right ? 'R' : 'L');
        } else {
            emit_edge(v, z, -1, 'L');
            emit_edge(v, z, +1, 'R');
        }
    }
    return g;
}

// ---- common-ancestor census ----

PmrcaCensus pmrca_census(const ArrowField& field, std::int64_t horizon) {
    const LatticeWindow& w = field.window();
    const std::int32_t t0 = w.t_min;
    const std::int32_t T = std::int32_t(std::min<std::int64_t>(horizon, w.t_max - t0));

    // max row size across the strip
    std::int64_t n_max = 0;
    for (std::int32_t t = t0; t <= t0 + T; ++t) n_max = std::max(n_max, w.row_size(t));
    const std::size_t nw = std::size_t((n_max + 63) / 64);

    // D[j1] = bitset over j2 > j1: an ordered pair of paths from the bottom
    // row, strictly ordered at every time since (and including) the first
    // step. Same-start pairs enter as branch splits at the first transition.
    std::vector<std::vector<std::uint64_t>> D(std::size_t(n_max),
                                              std::vector<std::uint64_t>(nw, 0));
    std::vector<std::vector<std::uint64_t>> Dn(std::size_t(n_max),
                                               std::vector<std::uint64_t>(nw, 0));
    const std::int64_t n0 = w.row_size(t0);
    for (std::int64_t j = 0; j < n0; ++j) {
        auto& bits = D[std::size_t(j)];
        for (std::int64_t k = j + 1; k < n0; ++k)
            bits[std::size_t(k / 64)] |= std::uint64_t(1) << (k % 64);
    }

    const auto& K = row_kernels();
    PmrcaCensus census;
    census.rows = T;
    census.sites_per_row = n_max;

    std::vector<std::uint64_t> right(nw), left(nw), stepped(nw);
    for (std::int32_t step = 0; step < T; ++step) {
        const std::int32_t t = t0 + step;
        const std::int64_t n = w.row_size(t);
        const std::int64_t n_next = w.row_size(t + 1);
        std::fill(right.begin(), right.end(), 0);
        std::fill(left.begin(), left.end(), 0);
        const std::uint8_t* row = field.row(t);
        for (std::int64_t j = 0; j < n; ++j) {
            const Arrow a = Arrow(row[j]);
            if (has_right(a)) right[std::size_t(j / 64)] |= std::uint64_t(1) << (j % 64);
            if (has_left(a)) left[std::size_t(j / 64)] |= std::uint64_t(1) << (j % 64);
        }
        const bool down = w.row_first_x(t + 1) > w.row_first_x(t);
        const StepPhase phase = down ? StepPhase::Down : StepPhase::Up;

        for (auto& bits : Dn) std::fill(bits.begin(), bits.end(), 0);

        for (std::int64_t p1 = 0; p1 < n; ++p1) {
            auto& bits = D[std::size_t(p1)];
            bool any = false;
            for (std::uint64_t v : bits)
                if (v) {
                    any = true;
                    break;
                }
            if (!any) continue;
            K.step_sites(stepped.data(), bits.data(), right.data(), left.data(), nw, phase);
            const bool can_r = (right[std::size_t(p1 / 64)] >> (p1 % 64)) & 1;
            const bool can_l = (left[std::size_t(p1 / 64)] >> (p1 % 64)) & 1;
            // walker-1 targets in the next row's indexing
            const std::int64_t tr = down ? p1 : p1 + 1;     // right move
            const std::int64_t tl = down ? p1 - 1 : p1;     // left move
            if (can_r && tr >= 0 && tr < n_next) {
                auto& dst = Dn[std::size_t(tr)];
                for (std::size_t i = 0; i < nw; ++i) dst[i] |= stepped[i];
            }
            if (can_l && tl >= 0 && tl < n_next) {
                auto& dst = Dn[std::size_t(tl)];
                for (std::size_t i = 0; i < nw; ++i) dst[i] |= stepped[i];
            }
        }

        // a Both-site splits a single path into a strictly ordered pair;
        // only the first row feeds same-start pairs (later splits coincide at
        // a time inside (0,t) and never qualify)
        if (step == 0) {
            for (std::int64_t j = 0; j < n; ++j) {
                if (Arrow(row[j]) != Arrow::Both) continue;
                const std::int64_t tr2 = down ? j : j + 1;
                const std::int64_t tl2 = down ? j - 1 : j;
                if (tl2 >= 0 && tr2 < n_next)
                    Dn[std::size_t(tl2)][std::size_t(tr2 / 64)] |= std::uint64_t(1) << (tr2 % 64);
            }
        }

        // clamp to the next row, record diagonal meetings, enforce strict order
        const std::uint64_t tail =
            (n_next % 64) ? ((std::uint64_t(1) << (n_next % 64)) - 1) : ~std::uint64_t(0);
        const std::int32_t fx_next = w.row_first_x(t + 1);
        for (std::int64_t j1 = 0; j1 < n_next; ++j1) {
            auto& bits = Dn[std::size_t(j1)];
            for (std::size_t i = std::size_t((n_next + 63) / 64); i < nw; ++i) bits[i] = 0;
            if (!bits.empty()) bits[std::size_t((n_next - 1) / 64)] &= tail;
            if ((bits[std::size_t(j1 / 64)] >> (j1 % 64)) & 1)
                census.points.push_back({fx_next + 2 * std::int32_t(j1), t + 1});
            // keep only j2 > j1
            for (std::size_t i = 0; i < std::size_t(j1 / 64); ++i) bits[i] = 0;
            bits[std::size_t(j1 / 64)] &= ~((j1 % 64 == 63) ? ~std::uint64_t(0)
                                                            : ((std::uint64_t(1) << (j1 % 64 + 1)) - 1));
        }
        // rows beyond n_next carry nothing
        for (std::int64_t j1 = n_next; j1 < n_max; ++j1)
            std::fill(Dn[std::size_t(j1)].begin(), Dn[std::size_t(j1)].end(), 0);
        D.swap(Dn);
    }
    return census;
}


// ---- checking and experiment drivers ----

namespace {

struct ChainWalk {
    std::vector<std::int32_t> edge_seq;
    bool ok = true;
};

// walk the chain induced by one enumerated path (positions indexed from S)
ChainWalk chain_of_path(const FiniteGraphRep& g,
                        const std::vector<std::vector<std::int32_t>>& out_edge_idx,
                        const std::unordered_map<std::uint64_t, std::int32_t>& vertex_of,
                        const std::vector<std::int32_t>& pos, std::int32_t S) {
    ChainWalk cw;
    const auto vkey = [](std::int32_t x, std::int32_t t) {
        return (std::uint64_t(std::uint32_t(x)) << 32) | std::uint32_t(t);
    };
    const auto it0 = vertex_of.find(vkey(pos[0], S));
    if (it0 == vertex_of.end()) {
        cw.ok = false;
        return cw;
    }
    std::int32_t v = it0->second;
    while (g.vertices[std::size_t(v)].layer != FiniteGraphRep::Vertex::Layer::Top) {
        const auto& outs = out_edge_idx[std::size_t(v)];
        const Site z = g.vertices[std::size_t(v)].site;
        if (std::size_t(z.t - S) >= pos.size() || pos[std::size_t(z.t - S)] != z.x) {
            cw.ok = false;
            return cw;
        }
        std::int32_t chosen = -1;
        if (outs.size() == 1) {
            chosen = outs[0];
        } else {
            if (z.t + 1 > S + std::int32_t(pos.size()) - 1) {
                cw.ok = false;
                return cw;
            }
            const std::int32_t step = pos[std::size_t(z.t - S + 1)] - pos[std::size_t(z.t - S)];
            for (std::int32_t e : outs)
                if ((g.edges[std::size_t(e)].branch == 'R') == (step > 0)) chosen = e;
        }
        if (chosen < 0) {
            cw.ok = false;
            return cw;
        }
        const auto& e = g.edges[std::size_t(chosen)];
        // containment between the bounding pair up to the edge target
        std::int32_t lx = z.x, rx = z.x;
        for (std::size_t i = 0; i < e.left_steps.size(); ++i) {
            lx += e.left_steps[i];
            rx += e.right_steps[i];
            const std::size_t k = std::size_t(z.t - S) + 1 + i;
            if (k >= pos.size()) {
                cw.ok = false;
                return cw;
            }
            if (pos[k] < lx || pos[k] > rx) {
                cw.ok = false;
                return cw;
            }
        }
        const Site target = g.vertices[std::size_t(e.dst)].site;
        if (pos[std::size_t(target.t - S)] != target.x) {
            cw.ok = false;
            return cw;
        }
        cw.edge_seq.push_back(chosen);
        v = e.dst;
    }
    return cw;
}

}  // namespace

GraphCheckReport finite_graph_check(const ArrowField& net, std::int32_t S, std::int32_t U,
                                    std::int64_t max_paths) {
    const FiniteGraphRep g = finite_graph(net, S, U);
    GraphCheckReport rep;

    std::vector<std::vector<std::int32_t>> out_edge_idx(g.vertices.size());
    for (std::size_t i = 0; i < g.edges.size(); ++i)
        out_edge_idx[std::size_t(g.edges[i].src)].push_back(std::int32_t(i));

    std::unordered_map<std::uint64_t, std::int32_t> vertex_of;
    const auto vkey = [](std::int32_t x, std::int32_t t) {
        return (std::uint64_t(std::uint32_t(x)) << 32) | std::uint32_t(t);
    };
    for (std::size_t i = 0; i < g.vertices.size(); ++i)
        vertex_of[vkey(g.vertices[i].site.x, g.vertices[i].site.t)] = std::int32_t(i);

    std::unordered_map<std::uint64_t, bool> interior_site;
    for (const auto& v : g.vertices)
        if (v.layer == FiniteGraphRep::Vertex::Layer::Interior)
            interior_site[vkey(v.site.x, v.site.t)] = true;

    // (a) and (b): degrees, ordering, distinct targets, no skipped vertices
    for (std::size_t vi = 0; vi < g.vertices.size(); ++vi) {
        const auto& v = g.vertices[vi];
        const auto& outs = out_edge_idx[vi];
        if (v.layer == FiniteGraphRep::Vertex::Layer::Top) {
            if (!outs.empty()) ++rep.v_pair_structure;
            continue;
        }
        const bool branching = (v.layer == FiniteGraphRep::Vertex::Layer::Interior) ||
                               v.bottom_branch;
        if (!branching) {
            if (outs.size() != 1) ++rep.v_bottom_degree;
        } else {
            if (outs.size() != 2) {
                ++rep.v_pair_structure;
                continue;
            }
            const auto& el = g.edges[std::size_t(outs[0])];
            const auto& er = g.edges[std::size_t(outs[1])];
            const auto& left_e = (el.branch == 'L') ? el : er;
            const auto& right_e = (el.branch == 'L') ? er : el;
            if (left_e.branch != 'L' || right_e.branch != 'R') ++rep.v_pair_structure;
            // l <= r' < l' <= r immediately after z
            if (!(left_e.left_steps[0] == -1 && left_e.right_steps[0] == -1 &&
                  right_e.left_steps[0] == 1 && right_e.right_steps[0] == 1))
                ++rep.v_pair_structure;
            if (v.layer == FiniteGraphRep::Vertex::Layer::Interior &&
                left_e.dst == right_e.dst) {
                // distinct targets unless both pairs run to the same top site,
                // which happens only when the outer pair meets exactly at U
                if (g.vertices[std::size_t(left_e.dst)].site.t == U)
                    ++rep.boundary_meets;
                else
                    ++rep.v_pair_structure;
            }
        }
        // An edge may not skip an interior vertex sitting on its pair. One
        // exception: a coincidence whose pair re-opens and closes again only
        // at U is itself a relevant separation point, yet the routing rule
        // sends the edge to the top layer; that is a lattice boundary
        // degeneracy (the pair meets exactly at U), waived and counted.
        for (std::int32_t ei : outs) {
            const auto& e = g.edges[std::size_t(ei)];
            std::vector<std::pair<std::int32_t, std::int32_t>> coincidences;  // (t, x)
            std::int32_t lx = v.site.x, rx = v.site.x;
            for (std::size_t i = 0; i + 1 < e.left_steps.size(); ++i) {
                lx += e.left_steps[i];
                rx += e.right_steps[i];
                if (lx == rx)
                    coincidences.emplace_back(v.site.t + std::int32_t(i) + 1, lx);
            }
            const std::int32_t target_t = g.vertices[std::size_t(e.dst)].site.t;
            for (std::size_t c = 0; c < coincidences.size(); ++c) {
                const auto [ct, cx] = coincidences[c];
                if (!interior_site.count(vkey(cx, ct))) continue;
                const std::int32_t next_meet =
                    (c + 1 < coincidences.size()) ? coincidences[c + 1].first : target_t;
                if (next_meet == U)
                    ++rep.boundary_meets;
                else
                    ++rep.v_pair_structure;
            }
            if (target_t <= v.site.t) ++rep.v_pair_structure;
        }
    }

    // enumerate all arrow-following paths from the trimmed bottom row
    std::set<std::vector<std::int32_t>> realized;
    std::vector<std::int32_t> pos;
    std::int64_t n_paths = 0;
    const std::function<void()> dfs_extend = [&]() {
        const std::int32_t t = S + std::int32_t(pos.size()) - 1;
        if (t == U) {
            ++n_paths;
            if (n_paths > max_paths)
                throw std::runtime_error("finite_graph_check: path enumeration too large");
            const ChainWalk cw = chain_of_path(g, out_edge_idx, vertex_of, pos, S);
            if (!cw.ok)
                ++rep.v_path_to_chain;
            else
                realized.insert(cw.edge_seq);
            return;
        }
        const Arrow a = net.arrow(pos.back(), t);
        if (has_left(a)) {
            pos.push_back(pos.back() - 1);
            dfs_extend();
            pos.pop_back();
        }
        if (has_right(a)) {
            pos.push_back(pos.back() + 1);
            dfs_extend();
            pos.pop_back();
        }
    };
    for (const auto& v : g.vertices) {
        if (v.layer != FiniteGraphRep::Vertex::Layer::Bottom) continue;
        pos.assign(1, v.site.x);
        dfs_extend();
    }
    rep.paths_checked = n_paths;

    // (d): every directed bottom-to-top chain is realized by some path
    std::vector<std::int32_t> chain;
    const std::function<void(std::int32_t)> dfs_graph = [&](std::int32_t v) {
        if (g.vertices[std::size_t(v)].layer == FiniteGraphRep::Vertex::Layer::Top) {
            ++rep.graph_paths;
            if (!realized.count(chain)) ++rep.v_chain_to_path;
            return;
        }
        for (std::int32_t ei : out_edge_idx[std::size_t(v)]) {
            chain.push_back(ei);
            dfs_graph(g.edges[std::size_t(ei)].dst);
            chain.pop_back();
        }
    };
    for (std::size_t vi = 0; vi < g.vertices.size(); ++vi)
        if (g.vertices[vi].layer == FiniteGraphRep::Vertex::Layer::Bottom) {
            chain.clear();
            dfs_graph(std::int32_t(vi));
        }

    return rep;
}

RelsepDensityResult relsep_density_experiment(double eps, double band_lo, double band_hi,
                                              int x_units, int reps, SeedSpec seed,
                                              int workers) {
    if (!(0.0 < band_lo && band_lo < band_hi && band_hi < 1.0))
        throw std::invalid_argument("relsep_density_experiment: band inside (0,1)");
    if (eps <= 0.0 || eps > 0.05)
        throw std::invalid_argument("relsep_density_experiment: need eps in (0, 0.05]");
    const std::int32_t steps = std::int32_t(std::llround(1.0 / (eps * eps)));
    const std::int32_t count_x = std::int32_t(std::llround(double(x_units) / eps));
    // two cones of margin so that reachability and pair tracing in the
    // counting region are unaffected by the window edges
    const std::int32_t width = count_x + 4 * steps;
    LatticeWindow w{0, width, 0, steps, Parity::Even};

    const std::int32_t row_lo = std::int32_t(std::llround(band_lo * steps));
    const std::int32_t row_hi = std::int32_t(std::llround(band_hi * steps));
    const std::int32_t x_lo = 2 * steps, x_hi = 2 * steps + count_x;

    std::vector<double> per_rep(std::size_t(reps), 0.0);
    parallel_replicas(reps, workers, [&](int rep) {
        const ArrowField net =
            gen_net_field(w, eps, seed.with_stream(seed.stream_id + std::uint64_t(rep)));
        const auto pts = relevant_separation_points(net, 0, steps);
        std::int64_t count = 0;
        for (const Site& z : pts)
            if (z.x >= x_lo && z.x < x_hi && z.t >= row_lo && z.t < row_hi) ++count;
        const double area = double(x_units) * (band_hi - band_lo);
        per_rep[std::size_t(rep)] = double(count) / area;
    });

    RelsepDensityResult out;
    out.density = mean_ci(per_rep);
    out.target = relevant_separation_band_average(0.0, 1.0, band_lo, band_hi);
    out.band_lo = band_lo;
    out.band_hi = band_hi;
    out.eps = eps;
    out.reps = reps;
    return out;
}

namespace {

EstimateCI census_band_density(bool web, double eps, int scale, double t_lo, double t_hi,
                               int units, int reps, SeedSpec seed, int workers) {
    const std::int32_t steps =
        web ? std::int32_t(std::llround(t_hi * double(scale) * double(scale)))
            : std::int32_t(std::llround(t_hi / (eps * eps)));
    const double unit_x = web ? double(scale) : 1.0 / eps;
    const std::int32_t count_x = std::int32_t(std::llround(double(units) * unit_x));
    const std::int32_t margin = std::int32_t(std::ceil(4.0 * std::sqrt(double(steps))));
    const std::int32_t width = count_x + 2 * margin;
    LatticeWindow w{0, width, 0, steps, Parity::Even};
    const std::int32_t row_lo = web ? std::int32_t(std::llround(t_lo * scale * double(scale)))
                                    : std::int32_t(std::llround(t_lo / (eps * eps)));

    std::vector<double> per_rep(std::size_t(reps), 0.0);
    parallel_replicas(reps, workers, [&](int rep) {
        const SeedSpec s = seed.with_stream(seed.stream_id + std::uint64_t(rep));
        const ArrowField f = web ? gen_web_field(w, s) : gen_net_field(w, eps, s);
        const PmrcaCensus census = pmrca_census(f, steps);
        std::int64_t count = 0;
        for (const Site& z : census.points)
            if (z.x >= margin && z.x < margin + count_x && z.t >= row_lo && z.t <= steps)
                ++count;
        per_rep[std::size_t(rep)] = double(count) / double(units);
    });
    return mean_ci(per_rep);
}

}  // namespace

CensusBandResult pmrca_web_experiment(int scale, double t_lo, double t_hi, int units,
                                      int reps, SeedSpec seed, int workers) {
    CensusBandResult out;
    out.t_lo = t_lo;
    out.t_hi = t_hi;
    out.reps = reps;
    out.per_length = census_band_density(true, 0.0, scale, t_lo, t_hi, units, reps, seed, workers);
    out.per_length_wide = census_band_density(true, 0.0, scale, t_lo, t_hi, 2 * units, reps,
                                              seed.with_stream(seed.stream_id + 1000003), workers);
    out.window_stable = out.per_length.ci_lo <= out.per_length_wide.ci_hi &&
                        out.per_length_wide.ci_lo <= out.per_length.ci_hi;
    return out;
}

EstimateCI pmrca_net_experiment(double eps, double t_lo, double t_hi, int units, int reps,
                                SeedSpec seed, int workers) {
    EstimateCI per_len = census_band_density(false, eps, 0, t_lo, t_hi, units, reps, seed, workers);
    // report per unit area
    const double band = t_hi - t_lo;
    return {per_len.mean / band, per_len.ci_lo / band, per_len.ci_hi / band, per_len.n_samples};
}

}  // namespace wns
