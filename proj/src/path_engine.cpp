#include "wns/path_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "row_stream.hpp"
#include "wns/coupling.hpp"
#include "wns/parallel.hpp"
#include "wns/row_kernels.hpp"

namespace wns {

namespace {

Arrow policy_pick(const TracePolicy& policy, std::int32_t x, std::int32_t t) {
    switch (policy.kind) {
        case TracePolicy::Kind::Leftmost: return Arrow::Left;
        case TracePolicy::Kind::Rightmost: return Arrow::Right;
        case TracePolicy::Kind::UniformRandom:
            return (draw_u64(policy.seed, Draw::TracePick, x, t) >> 63) ? Arrow::Right
                                                                        : Arrow::Left;
        case TracePolicy::Kind::SignDriven: {
            if (!policy.signs) throw std::invalid_argument("trace_path: SignDriven without table");
            return policy.signs->pick(x, t);
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace

LatticePath trace_path(const ArrowField& field, Site start, const TracePolicy& policy,
                       std::int64_t horizon) {
    if (horizon < 0) throw std::invalid_argument("trace_path: horizon must be >= 0");
    const LatticeWindow& w = field.window();
    if (!w.contains(start.x, start.t))
        throw std::invalid_argument("trace_path: start off-lattice or wrong parity");
    LatticePath path;
    path.start = start;
    std::int32_t x = start.x, t = start.t;
    const std::int64_t steps = std::min<std::int64_t>(horizon, w.t_max - start.t);
    path.steps.reserve(std::size_t(steps));
    path.terminated_by = Termination::Horizon;
    for (std::int64_t i = 0; i < steps; ++i) {
        const Arrow a = field.arrow(x, t);
        if (a == Arrow::None) {
            path.terminated_by = Termination::Killed;
            return path;
        }
        const Arrow dir = (a == Arrow::Both) ? policy_pick(policy, x, t) : a;
        const std::int32_t nx = x + (dir == Arrow::Right ? 1 : -1);
        if (nx < w.x_min || nx > w.x_max) {
            path.terminated_by = Termination::Boundary;
            return path;
        }
        path.steps.push_back(dir == Arrow::Right ? 1 : -1);
        x = nx;
        ++t;
    }
    return path;
}

namespace {

// masks for one row of a materialized field; site j <-> x = first + 2j
struct FieldRowMasks {
    std::vector<std::uint64_t> right, left;
};

void build_row_masks(const ArrowField& f, std::int32_t t, FieldRowMasks& m) {
    const LatticeWindow& w = f.window();
    const std::int64_t n = w.row_size(t);
    const std::size_t nw = std::size_t((n + 63) / 64);
    m.right.assign(nw, 0);
    m.left.assign(nw, 0);
    const std::uint8_t* row = f.row(t);
    for (std::int64_t j = 0; j < n; ++j) {
        const Arrow a = Arrow(row[j]);
        if (has_right(a)) m.right[std::size_t(j / 64)] |= std::uint64_t(1) << (j % 64);
        if (has_left(a)) m.left[std::size_t(j / 64)] |= std::uint64_t(1) << (j % 64);
    }
}

StepPhase phase_of(const LatticeWindow& w, std::int32_t t) {
    return (w.row_first_x(t + 1) > w.row_first_x(t)) ? StepPhase::Down : StepPhase::Up;
}

}  // namespace

PointSet point_set(const ArrowField& field, std::span<const std::int32_t> starts_x,
                   std::int32_t t) {
    const LatticeWindow& w = field.window();
    if (t < 0 || w.t_min + t > w.t_max) throw std::invalid_argument("point_set: t beyond window");
    const std::int32_t t0 = w.t_min;
    const std::int64_t n0 = w.row_size(t0);
    std::vector<std::uint64_t> cur(std::size_t((n0 + 63) / 64), 0), next;
    for (std::int32_t x : starts_x) {
        if (!w.contains(x, t0))
            throw std::invalid_argument("point_set: start outside window at time t_min");
        const std::int64_t j = (x - w.row_first_x(t0)) / 2;
        cur[std::size_t(j / 64)] |= std::uint64_t(1) << (j % 64);
    }
    const auto& K = row_kernels();
    FieldRowMasks masks;
    for (std::int32_t step = 0; step < t; ++step) {
        const std::int32_t rt = t0 + step;
        build_row_masks(field, rt, masks);
        const std::int64_t n_next = w.row_size(rt + 1);
        next.assign(std::size_t((n_next + 63) / 64), 0);
        // rows may differ in word count by one; kernel sees the larger span
        const std::size_t nw = std::max(masks.right.size(), next.size());
        cur.resize(nw, 0);
        next.resize(nw, 0);
        masks.right.resize(nw, 0);
        masks.left.resize(nw, 0);
        K.step_sites(next.data(), cur.data(), masks.right.data(), masks.left.data(), nw,
                     phase_of(w, rt));
        // clamp to the next row's true size
        const std::int64_t rem = n_next % 64;
        next.resize(std::size_t((n_next + 63) / 64));
        if (rem && !next.empty()) next.back() &= (std::uint64_t(1) << rem) - 1;
        cur = next;
    }
    PointSet out;
    out.time = t0 + t;
    const std::int32_t fx = w.row_first_x(out.time);
    for (std::size_t wd = 0; wd < cur.size(); ++wd) {
        std::uint64_t bits = cur[wd];
        while (bits) {
            const int b = __builtin_ctzll(bits);
            bits &= bits - 1;
            out.positions.push_back(fx + 2 * (std::int32_t(wd) * 64 + b));
        }
    }
    return out;
}

std::optional<std::int64_t> meeting_time(const ArrowField& field, Site a, Site b,
                                         std::int64_t horizon) {
    if (a.t != b.t) throw std::invalid_argument("meeting_time: different start times");
    if (field.kind() != FieldKind::Web)
        throw std::invalid_argument("meeting_time: web fields only (unique tracing)");
    if (a.x == b.x) return 0;
    const LatticeWindow& w = field.window();
    std::int32_t xa = a.x, xb = b.x, t = a.t;
    for (std::int64_t n = 1; n <= horizon && t < w.t_max; ++n) {
        xa += has_right(field.arrow(xa, t)) ? 1 : -1;
        xb += has_right(field.arrow(xb, t)) ? 1 : -1;
        ++t;
        if (xa < w.x_min || xa > w.x_max || xb < w.x_min || xb > w.x_max) return std::nullopt;
        if (xa == xb) return n;
    }
    return std::nullopt;
}

MeetingPointsResult meeting_points(const ArrowField& field, std::span<const std::int32_t> starts_x,
                                   std::int64_t horizon, const TracePolicy& policy) {
    if (starts_x.empty()) throw std::invalid_argument("meeting_points: empty start set");
    const LatticeWindow& w = field.window();
    std::vector<std::int32_t> pos(starts_x.begin(), starts_x.end());
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    for (std::int32_t x : pos)
        if (!w.contains(x, w.t_min)) throw std::invalid_argument("meeting_points: bad start");

    MeetingPointsResult out;
    std::int32_t t = w.t_min;
    std::vector<std::int32_t> next;
    const std::int64_t steps = std::min<std::int64_t>(horizon, w.t_max - w.t_min);
    for (std::int64_t n = 0; n < steps && !pos.empty(); ++n) {
        next.clear();
        for (std::int32_t x : pos) {
            const Arrow a = field.arrow(x, t);
            if (a == Arrow::None) continue;  // killed walker
            const Arrow dir = (a == Arrow::Both) ? policy_pick(policy, x, t) : a;
            const std::int32_t nx = x + (dir == Arrow::Right ? 1 : -1);
            if (nx < w.x_min || nx > w.x_max) {
                ++out.absorbed;
                continue;
            }
            next.push_back(nx);
        }
        std::sort(next.begin(), next.end());
        ++t;
        std::vector<std::int32_t> dedup;
        dedup.reserve(next.size());
        for (std::size_t i = 0; i < next.size();) {
            std::size_t j = i;
            while (j < next.size() && next[j] == next[i]) ++j;
            if (j - i >= 2) out.points.push_back({next[i], t});
            dedup.push_back(next[i]);
            i = j;
        }
        pos.swap(dedup);
    }
    out.survivors = std::int64_t(pos.size());
    return out;
}

// ---- streaming density engines ----

namespace {

enum class StreamKind { Web, Net, WebInNet };

struct StreamJob {
    StreamKind kind;
    double eps = 0.0;                      // net branch probability
    std::size_t n_sites = 0;
    std::size_t lo = 0, hi = 0;            // counting range, [lo, hi)
    std::vector<std::int64_t> checkpoints; // ascending row indices
};

std::int64_t popcount_range(const std::vector<std::uint64_t>& bits, std::size_t lo,
                            std::size_t hi) {
    std::int64_t n = 0;
    const std::size_t w0 = lo / 64, w1 = (hi - 1) / 64;
    for (std::size_t w = w0; w <= w1; ++w) {
        std::uint64_t v = bits[w];
        if (w == w0) v &= ~std::uint64_t(0) << (lo % 64);
        if (w == w1 && (hi % 64)) v &= (std::uint64_t(1) << (hi % 64)) - 1;
        n += __builtin_popcountll(v);
    }
    return n;
}

// run one replica; emit occupied count at each checkpoint; optionally collect
// occupied site indices (within [lo,hi)) at the last checkpoint
void stream_replica(const SeedSpec& seed, const StreamJob& job,
                    std::vector<std::int64_t>& counts_out,
                    std::vector<std::int64_t>* final_sites) {
    RowMasks row(job.n_sites);
    const std::size_t nw = row.nwords();
    std::vector<std::uint64_t> cur(nw, ~std::uint64_t(0)), next(nw, 0);
    mask_tail(cur.data(), nw, row.tail_mask);

    const auto& K = row_kernels();
    counts_out.assign(job.checkpoints.size(), 0);
    std::size_t ck = 0;
    const std::int64_t last = job.checkpoints.empty() ? 0 : job.checkpoints.back();
    for (std::int64_t t = 0; t <= last; ++t) {
        while (ck < job.checkpoints.size() && job.checkpoints[ck] == t) {
            counts_out[ck] = popcount_range(cur, job.lo, job.hi);
            if (ck + 1 == job.checkpoints.size() && final_sites) {
                final_sites->clear();
                for (std::size_t w = job.lo / 64; w < nw; ++w) {
                    std::uint64_t bits = cur[w];
                    while (bits) {
                        const int b = __builtin_ctzll(bits);
                        bits &= bits - 1;
                        const std::size_t j = w * 64 + std::size_t(b);
                        if (j >= job.lo && j < job.hi)
                            final_sites->push_back(std::int64_t(j));
                    }
                }
            }
            ++ck;
        }
        if (ck == job.checkpoints.size()) break;
        switch (job.kind) {
            case StreamKind::Web: fill_web_row(seed, t, row); break;
            case StreamKind::Net: fill_net_row(seed, t, job.eps, row); break;
            case StreamKind::WebInNet: fill_web_in_net_row(seed, t, job.eps, row); break;
        }
        // alternate the staggering phase each row
        K.step_sites(next.data(), cur.data(), row.go_right.data(), row.go_left.data(), nw,
                     (t % 2 == 0) ? StepPhase::Down : StepPhase::Up);
        mask_tail(next.data(), nw, row.tail_mask);
        cur.swap(next);
    }
}

struct DensityGrid {
    StreamJob job;
    std::vector<double> ts;       // continuum times, aligned with checkpoints
    double site_length = 1.0;     // continuum length of one site spacing
};

DensityGrid make_web_grid(std::span<const double> ts, int scale, int count_units) {
    if (scale < 2) throw std::invalid_argument("web_density: scale too small");
    DensityGrid g;
    g.job.kind = StreamKind::Web;
    std::vector<double> sorted(ts.begin(), ts.end());
    std::sort(sorted.begin(), sorted.end());
    for (double t : sorted) {
        if (t <= 0.0) throw std::invalid_argument("web_density: t must be positive");
        g.job.checkpoints.push_back(std::llround(t * double(scale) * double(scale)));
        g.ts.push_back(t);
    }
    const std::int64_t horizon = g.job.checkpoints.back();
    const std::size_t margin = std::size_t(std::ceil(4.0 * std::sqrt(double(horizon)) / 2.0));
    const std::size_t count_sites = std::size_t(count_units) * std::size_t(scale) / 2;
    g.job.n_sites = count_sites + 2 * margin;
    g.job.lo = margin;
    g.job.hi = margin + count_sites;
    g.site_length = 2.0 / double(scale);
    return g;
}

DensityGrid make_net_grid(std::span<const double> ts, double eps, int count_units) {
    if (eps <= 0.0 || eps >= 0.5) throw std::invalid_argument("net_density: need eps in (0, 0.5)");
    DensityGrid g;
    g.job.kind = StreamKind::Net;
    g.job.eps = eps;
    std::vector<double> sorted(ts.begin(), ts.end());
    std::sort(sorted.begin(), sorted.end());
    for (double t : sorted) {
        if (t <= 0.0) throw std::invalid_argument("net_density: t must be positive");
        g.job.checkpoints.push_back(std::llround(t / (eps * eps)));
        g.ts.push_back(t);
    }
    const std::int64_t horizon = g.job.checkpoints.back();
    const std::size_t margin = std::size_t(std::ceil(4.0 * std::sqrt(double(horizon)) / 2.0));
    const std::size_t count_sites = std::size_t(std::llround(double(count_units) / (2.0 * eps)));
    g.job.n_sites = count_sites + 2 * margin;
    g.job.lo = margin;
    g.job.hi = margin + count_sites;
    g.site_length = 2.0 * eps;
    return g;
}

std::vector<DensityEstimate> run_density(const DensityGrid& grid, const DensityOptions& opt) {
    if (opt.reps < 2) throw std::invalid_argument("density: need reps >= 2");
    const std::size_t nt = grid.job.checkpoints.size();
    std::vector<std::vector<double>> per_rep(nt, std::vector<double>(std::size_t(opt.reps)));
    const double region_len = double(grid.job.hi - grid.job.lo) * grid.site_length;
    parallel_replicas(opt.reps, opt.workers, [&](int rep) {
        std::vector<std::int64_t> counts;
        stream_replica(opt.seed.with_stream(opt.seed.stream_id + std::uint64_t(rep)), grid.job,
                       counts, nullptr);
        for (std::size_t i = 0; i < nt; ++i)
            per_rep[i][std::size_t(rep)] = double(counts[i]) / region_len;
    });
    std::vector<DensityEstimate> out(nt);
    for (std::size_t i = 0; i < nt; ++i) out[i] = {grid.ts[i], mean_ci(per_rep[i])};
    return out;
}

}  // namespace

std::vector<DensityEstimate> web_density(std::span<const double> ts, int scale,
                                         const DensityOptions& opt) {
    return run_density(make_web_grid(ts, scale, opt.count_units), opt);
}

std::vector<DensityEstimate> net_density(std::span<const double> ts, double eps,
                                         const DensityOptions& opt) {
    return run_density(make_net_grid(ts, eps, opt.count_units), opt);
}

std::vector<DensityEstimate> web_in_net_density(std::span<const double> ts, int scale,
                                                double eps, const DensityOptions& opt) {
    DensityGrid g = make_web_grid(ts, scale, opt.count_units);
    g.job.kind = StreamKind::WebInNet;
    g.job.eps = eps;
    return run_density(g, opt);
}

DensityEstimate density_estimate(DensityKind kind, double eps, double t, int reps, int scale,
                                 SeedSpec seed) {
    DensityOptions opt;
    opt.reps = reps;
    opt.seed = seed;
    const double ts[1] = {t};
    if (kind == DensityKind::Web) return web_density(ts, scale, opt)[0];
    return net_density(ts, eps, opt)[0];
}

BackboneReport backbone_density(double eps, double burn_in, int window_units, int reps,
                                SeedSpec seed, int workers) {
    if (burn_in <= 0.0) throw std::invalid_argument("backbone_density: burn_in must be positive");
    const double ts[2] = {burn_in / 2.0, burn_in};
    DensityOptions opt;
    opt.reps = reps;
    opt.workers = workers;
    opt.count_units = window_units;
    opt.seed = seed;
    DensityGrid g = make_net_grid(ts, eps, window_units);

    const std::size_t nt = g.job.checkpoints.size();
    std::vector<std::vector<double>> per_rep(nt, std::vector<double>(std::size_t(reps)));
    std::vector<std::vector<std::int64_t>> finals(static_cast<std::size_t>(reps));
    const double region_len = double(g.job.hi - g.job.lo) * g.site_length;
    parallel_replicas(reps, workers, [&](int rep) {
        std::vector<std::int64_t> counts;
        stream_replica(seed.with_stream(seed.stream_id + std::uint64_t(rep)), g.job, counts,
                       &finals[std::size_t(rep)]);
        for (std::size_t i = 0; i < nt; ++i)
            per_rep[i][std::size_t(rep)] = double(counts[i]) / region_len;
    });

    BackboneReport rep;
    rep.eps = eps;
    rep.burn_in = burn_in;
    rep.density_half = mean_ci(per_rep[0]);
    rep.density = mean_ci(per_rep[1]);
    rep.plateau = rep.density.ci_lo <= rep.density_half.ci_hi &&
                  rep.density_half.ci_lo <= rep.density.ci_hi;
    if (!rep.plateau)
        throw std::runtime_error("backbone_density: plateau not reached at configured burn_in");
    for (const auto& sites : finals)
        for (std::size_t i = 1; i < sites.size(); ++i)
            rep.gaps.push_back(double(sites[i] - sites[i - 1]) * g.site_length);
    rep.gap_ks = ks_test_exponential_gaps(rep.gaps, g.site_length, 500,
                                          seed.with_stream(seed.stream_id + 0x9E3779B9u));
    return rep;
}

MeetingTailReport meeting_tail(std::int64_t reps, std::int64_t n_max, SeedSpec seed,
                               int workers) {
    if (reps < 100) throw std::invalid_argument("meeting_tail: too few replicas");
    std::vector<std::int64_t> tau(std::size_t(reps), -1);  // -1 = censored
    parallel_replicas(int(reps), workers, [&](int rep) {
        const SeedSpec s = seed.with_stream(seed.stream_id + std::uint64_t(rep));
        // difference walk of two independent walkers started two sites apart:
        // D/2 moves -1,0,+1 with probabilities 1/4, 1/2, 1/4
        std::int64_t d = 1;
        std::int64_t n = 0;
        std::int64_t blk = 0;
        while (n < n_max) {
            std::uint64_t bits = draw_u64(s, Draw::MeetStep, blk++, 0);
            for (int i = 0; i < 32 && n < n_max; ++i) {
                d += std::int64_t(bits & 1) - std::int64_t((bits >> 1) & 1);
                bits >>= 2;
                ++n;
                if (d == 0) {
                    tau[std::size_t(rep)] = n;
                    n = n_max;
                    break;
                }
            }
        }
    });
    MeetingTailReport out;
    out.reps = reps;
    for (std::int64_t n = 100; n <= n_max; n *= 2) {
        std::int64_t surv = 0;
        for (std::int64_t t : tau)
            if (t < 0 || t > n) ++surv;
        out.ns.push_back(double(n));
        out.survival.push_back(double(surv) / double(reps));
    }
    out.fit = loglog_slope(out.ns, out.survival);
    out.taus = std::move(tau);
    return out;
}

}  // namespace wns
