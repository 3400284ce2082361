#pragma once

// The discrete web-in-net coupling, relevant separation points, the finite
// graph representation and the common-ancestor census.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "wns/lattice.hpp"
#include "wns/rng.hpp"
#include "wns/stats.hpp"

namespace wns {

enum class SignLaw : std::uint8_t { Fair, OmegaWeighted };

// Signs resolved at the branch sites of a net field.
struct SignTable {
    SignLaw law = SignLaw::Fair;
    std::unordered_map<std::uint64_t, std::int8_t> signs;  // key(x,t) -> -1 / +1

    static std::uint64_t key(std::int32_t x, std::int32_t t) {
        return (std::uint64_t(std::uint32_t(x)) << 32) | std::uint32_t(t);
    }
    void set(std::int32_t x, std::int32_t t, std::int8_t s) { signs[key(x, t)] = s; }
    Arrow pick(std::int32_t x, std::int32_t t) const {
        const auto it = signs.find(key(x, t));
        if (it == signs.end())
            throw std::out_of_range("SignTable: no sign for this branch site");
        return it->second > 0 ? Arrow::Right : Arrow::Left;
    }
    bool covers(std::int32_t x, std::int32_t t) const { return signs.count(key(x, t)) > 0; }
};

// Replace every Both-site by Left/Right according to an i.i.d. fair sign;
// other sites copied verbatim. Output kind is web.
std::pair<ArrowField, SignTable> sample_web_in_net(const ArrowField& net, SeedSpec seed);

// Same coupling with P(sign = +1) = omega_z at each branch site (environment
// must share the net's window).
std::pair<ArrowField, SignTable> sample_web_in_net(const ArrowField& net, const Environment& omega,
                                                   SeedSpec seed);

// Upgrade each site independently to Both with probability eps; kind net.
ArrowField switch_web_to_net(const ArrowField& web, double eps, SeedSpec seed);

// Branch sites z = (x,t), S < t < U, reachable by arrow-following from the
// time-S row, whose leftmost and rightmost continuations along the two
// branches stay apart strictly before U (equality at U allowed).
std::vector<Site> relevant_separation_points(const ArrowField& net, std::int32_t S,
                                             std::int32_t U);

struct FiniteGraphRep {
    struct Vertex {
        Site site;
        enum class Layer : std::uint8_t { Bottom, Interior, Top } layer;
        bool bottom_branch = false;  // bottom vertex that is itself a branch site
    };
    struct Edge {
        std::int32_t src = 0, dst = 0;   // vertex indices
        char branch = 'L';               // which branch of the source pair
        // bounding pair traced from just after src to dst's time
        std::vector<std::int8_t> left_steps, right_steps;
    };
    std::vector<Vertex> vertices;   // bottoms, then interiors (by time), then tops
    std::vector<Edge> edges;
    std::int32_t time_lo = 0, time_hi = 0;

    std::vector<std::int32_t> out_edges(std::int32_t v) const;
};

// Directed graph on {time-S row} + {relevant separation points} + {reachable
// time-U sites}; each non-terminal vertex routes its bounding left-right
// pair(s) to the next vertex.
FiniteGraphRep finite_graph(const ArrowField& net, std::int32_t S, std::int32_t U);

struct PmrcaCensus {
    std::vector<Site> points;  // meeting sites of paths disjoint since time 0
    std::int64_t rows = 0;
    std::int64_t sites_per_row = 0;
};

// Sites (x,t), t > 0, where two arrow-following paths started at the bottom
// row meet after being disjoint on (0, t). Exact ordered-pair dynamic
// programme over the window.
PmrcaCensus pmrca_census(const ArrowField& field, std::int64_t horizon);

// ---- checking and experiment drivers ----

struct GraphCheckReport {
    std::int64_t paths_checked = 0;
    std::int64_t graph_paths = 0;
    std::int64_t v_bottom_degree = 0;    // (a) violations
    std::int64_t v_pair_structure = 0;   // (b) violations: ordering, distinctness, skips
    std::int64_t v_path_to_chain = 0;    // (c) violations
    std::int64_t v_chain_to_path = 0;    // (d) violations
    std::int64_t boundary_meets = 0;     // pair met exactly at U: distinctness waived
    bool ok() const {
        return !v_bottom_degree && !v_pair_structure && !v_path_to_chain && !v_chain_to_path;
    }
};

// Build the graph and verify its structure against exhaustive enumeration of
// every arrow-following path from the (trimmed) bottom row: each path must
// induce a directed chain bounded by the edge pairs, and every directed chain
// must be realized by some path. Throws if enumeration exceeds max_paths.
GraphCheckReport finite_graph_check(const ArrowField& net, std::int32_t S, std::int32_t U,
                                    std::int64_t max_paths = 2000000);

struct RelsepDensityResult {
    EstimateCI density;    // points per unit continuum area in the band
    double target = 0.0;   // band-averaged closed form
    double band_lo = 0.0, band_hi = 0.0;
    double eps = 0.0;
    int reps = 0;
};

// Density of (0,1)-relevant separation points in a time band around the
// middle, in continuum units.
RelsepDensityResult relsep_density_experiment(double eps, double band_lo, double band_hi,
                                              int x_units, int reps, SeedSpec seed,
                                              int workers = 1);

struct CensusBandResult {
    EstimateCI per_length;        // points per unit continuum length, times in band
    EstimateCI per_length_wide;   // same on a window twice as wide
    bool window_stable = false;   // the two CIs overlap
    double t_lo = 0.0, t_hi = 0.0;
    int reps = 0;
};

// Web census: meeting points per unit length with times in [t_lo, t_hi],
// measured on two window widths (local finiteness / stability check).
CensusBandResult pmrca_web_experiment(int scale, double t_lo, double t_hi, int units,
                                      int reps, SeedSpec seed, int workers = 1);

// Net census in continuum units (exploratory; no closed form asserted).
EstimateCI pmrca_net_experiment(double eps, double t_lo, double t_hi, int units, int reps,
                                SeedSpec seed, int workers = 1);

}  // namespace wns
