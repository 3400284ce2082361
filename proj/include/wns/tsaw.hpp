#pragma once

// True self-avoiding walk with bond repulsion: the walk steps toward the
// neighbouring edge with strictly smaller local time (fair coin on ties) and
// increments the local time of the edge it crosses.

#include <cstdint>
#include <vector>

#include "wns/rng.hpp"
#include "wns/stats.hpp"

namespace wns {

struct TsawState {
    std::int64_t pos = 0;
    std::uint64_t n_steps = 0;
    // local time of edge {x, x+1} at index x - edge_base
    std::vector<std::int64_t> edge_lt;
    std::int64_t edge_base = 0;
    std::int64_t min_visited = 0, max_visited = 0;
    std::int64_t initial_edge_mass = 0;  // sum of l0 over the allocated range
    std::uint64_t ties = 0, tie_lefts = 0;

    std::int64_t local_time(std::int64_t left_endpoint) const;
};

// Initial edge local times l0({2x, 2x+1}) = 1, l0({2x-1, 2x}) = 0 for x >= 0,
// mirrored by l0({-x-1, -x}) = l0({x, x+1}).
std::int64_t default_l0(std::int64_t left_endpoint);

// Flat zero initial condition.
std::int64_t zero_l0(std::int64_t left_endpoint);

using L0Fn = std::int64_t (*)(std::int64_t);

// trajectory, when given, receives X_1 .. X_n
TsawState run_tsaw(std::uint64_t n_steps, L0Fn l0, SeedSpec seed,
                   std::vector<std::int64_t>* trajectory = nullptr);

struct ProfileReport {
    bool area_ok = false;          // sum(l_n - l_0) == n, exact
    // adjacent-edge differences are +-1 across the visited region, except the
    // seam pair at X_n itself, which carries an even difference
    bool step_profile_ok = false;
    std::int64_t violations = 0;
};

ProfileReport profile_check(const TsawState& state);

struct ScalingReport {
    std::vector<double> ns;        // dyadic checkpoints
    std::vector<double> mean_abs;  // E|X_n|
    SlopeFit fit;                  // log-log slope over the upper range
    SlopeFit fit_low;              // over the lower range (finite-size trend)
    int seeds = 0;
};

// Log-log growth of E|X_n|; `control` replaces the dynamics by a plain
// simple random walk (diffusive reference).
ScalingReport scaling_exponent(std::uint64_t n_max, int seeds, SeedSpec seed, bool control,
                               int workers = 1);

}  // namespace wns
