#pragma once

// Path tracing, coalescing/branching-coalescing point sets, meeting
// statistics, and the Monte Carlo density estimators.

#include <optional>
#include <span>
#include <vector>

#include "wns/lattice.hpp"
#include "wns/rng.hpp"
#include "wns/stats.hpp"

namespace wns {

enum class Termination { Horizon, Boundary, Killed };

struct LatticePath {
    Site start;
    std::vector<std::int8_t> steps;  // +1 / -1 per time step
    Termination terminated_by = Termination::Horizon;

    std::int32_t position_at(std::int32_t t) const {
        std::int32_t x = start.x;
        for (std::int32_t i = 0; i < t - start.t; ++i) x += steps[std::size_t(i)];
        return x;
    }
    std::int32_t end_x() const {
        std::int32_t x = start.x;
        for (auto s : steps) x += s;
        return x;
    }
    std::int32_t end_t() const { return start.t + std::int32_t(steps.size()); }
};

struct SignTable;  // defined in coupling.hpp

struct TracePolicy {
    enum class Kind { Leftmost, Rightmost, UniformRandom, SignDriven };
    Kind kind = Kind::Leftmost;
    SeedSpec seed;                      // UniformRandom: per-site fair picks
    const SignTable* signs = nullptr;   // SignDriven

    static TracePolicy leftmost() { return {Kind::Leftmost, {}, nullptr}; }
    static TracePolicy rightmost() { return {Kind::Rightmost, {}, nullptr}; }
    static TracePolicy uniform(SeedSpec s) { return {Kind::UniformRandom, s, nullptr}; }
    static TracePolicy sign_driven(const SignTable& t) {
        return {Kind::SignDriven, {}, &t};
    }
};

// Follow arrows from start for up to `horizon` steps (capped by the window
// top, still reported as Horizon). Both-sites defer to the policy; a None
// site kills the path; leaving the window sideways absorbs it.
LatticePath trace_path(const ArrowField& field, Site start, const TracePolicy& policy,
                       std::int64_t horizon);

struct PointSet {
    std::int32_t time = 0;
    std::vector<std::int32_t> positions;  // strictly increasing
};

// Exact set of sites reachable by arrow-following from A x {t_min} at window
// time t (breadth-first over arrows, both branches at Both-sites).
PointSet point_set(const ArrowField& field, std::span<const std::int32_t> starts_x,
                   std::int32_t t);

// First step at which the two traced paths coincide; nullopt if censored at
// the horizon (or boundary). Web fields only.
std::optional<std::int64_t> meeting_time(const ArrowField& field, Site a, Site b,
                                         std::int64_t horizon);

struct MeetingPointsResult {
    std::vector<Site> points;   // first-coincidence sites of distinct traced paths
    std::int64_t absorbed = 0;  // walkers lost to the spatial boundary
    std::int64_t survivors = 0;
};

MeetingPointsResult meeting_points(const ArrowField& field, std::span<const std::int32_t> starts_x,
                                   std::int64_t horizon,
                                   const TracePolicy& policy = TracePolicy::leftmost());

// ---- density estimators ----

struct DensityEstimate {
    double t = 0.0;
    EstimateCI density;  // per unit continuum length
};

struct DensityOptions {
    int reps = 200;
    int workers = 1;
    int count_units = 48;  // continuum length of the counting region
    SeedSpec seed;
};

// Coalescing point set started from the whole line, diffusive units: t maps
// to round(t scale^2) lattice steps and densities are reported per unit
// continuum length (lattice density x scale). One evolution serves all ts.
std::vector<DensityEstimate> web_density(std::span<const double> ts, int scale,
                                         const DensityOptions& opt);

// Branching-coalescing point set: t maps to round(t / eps^2) steps, densities
// per unit continuum length (lattice density / eps).
std::vector<DensityEstimate> net_density(std::span<const double> ts, double eps,
                                         const DensityOptions& opt);

// Density of the web sampled inside a net by fair signs (streamed
// composition; same law as sampling a web field).
std::vector<DensityEstimate> web_in_net_density(std::span<const double> ts, int scale,
                                                double eps, const DensityOptions& opt);

enum class DensityKind { Web, Net };

// Single-point wrapper.
DensityEstimate density_estimate(DensityKind kind, double eps, double t, int reps, int scale,
                                 SeedSpec seed);

// ---- backbone ----

struct BackboneReport {
    EstimateCI density;        // at burn_in, per unit continuum length
    EstimateCI density_half;   // at burn_in / 2, plateau check
    bool plateau = false;      // CIs overlap
    KsResult gap_ks;           // inter-point gaps vs fitted exponential
    std::vector<double> gaps;  // pooled continuum gaps at the final time
    double eps = 0.0;
    double burn_in = 0.0;
};

// Stationary density of the branching-coalescing point set started from the
// whole line far in the past. Throws if the plateau check fails.
BackboneReport backbone_density(double eps, double burn_in, int window_units, int reps,
                                SeedSpec seed, int workers = 1);

// ---- meeting-time tail ----

struct MeetingTailReport {
    std::vector<double> ns;          // dyadic horizons
    std::vector<double> survival;    // P(tau > n) estimates
    SlopeFit fit;                    // log-log slope
    std::int64_t reps = 0;
    std::vector<std::int64_t> taus;  // raw samples, -1 when censored at n_max
};

// Tail of the meeting time of two walkers started two sites apart in a web.
MeetingTailReport meeting_tail(std::int64_t reps, std::int64_t n_max, SeedSpec seed,
                               int workers = 1);

}  // namespace wns
