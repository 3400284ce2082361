#pragma once

// Exact kernel algebra and Monte Carlo for random walks in i.i.d. space-time
// environments: transition kernels, n-point motions, the induced
// measure-valued process and its stationary atom statistics.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "wns/lattice.hpp"
#include "wns/measure.hpp"
#include "wns/rng.hpp"
#include "wns/stats.hpp"

namespace wns {

// Row-stochastic transition probabilities K_{s,t}(x, .) over a window slice.
struct TransitionKernel {
    std::int32_t s = 0, t = 0;
    std::vector<std::int32_t> sources;  // x coordinates at time s
    std::vector<std::int32_t> targets;  // x coordinates at time t
    std::vector<double> probs;          // row-major [source][target]
    double boundary_loss = 0.0;         // mass absorbed at the window sides

    double operator()(std::int32_t x, std::int32_t y) const;
    double row_sum(std::size_t row) const;
};

// Exact dynamic programming over the environment. One source, or every site
// of the time-s row when x0 is nullopt.
TransitionKernel kernel(const Environment& env, std::int32_t s, std::int32_t t,
                        std::optional<std::int32_t> x0 = std::nullopt);

// K_{s,u} . K_{u,t} computed entrywise (Chapman-Kolmogorov checks).
TransitionKernel compose(const TransitionKernel& a, const TransitionKernel& b);

// ---- n-point motions ----

// Joint law of n walkers sampled independently in the same environment,
// averaged over the environment: exact enumeration. Walkers sharing a site
// use the joint jump law P(subset A of size j goes right) = int q^j (1-q)^k-j
// dmu; walkers at distinct sites are independent.
struct NPointDist {
    int n = 0;
    int steps = 0;
    std::map<std::vector<std::int32_t>, double> probs;

    double prob(const std::vector<std::int32_t>& y) const;
    // sum out all walkers except `keep` (0-based), giving a 1-point law
    std::map<std::int32_t, double> marginal(int keep) const;
};

NPointDist npoint_exact(const MuSpec& mu, const std::vector<std::int32_t>& starts, int steps);

struct NPointMc {
    int n = 0;
    int steps = 0;
    std::int64_t reps = 0;
    std::map<std::vector<std::int32_t>, std::int64_t> counts;

    EstimateCI prob(const std::vector<std::int32_t>& y) const;
};

NPointMc npoint_mc(const MuSpec& mu, const std::vector<std::int32_t>& starts, int steps,
                   std::int64_t reps, SeedSpec seed);

// ---- measure-valued process ----

struct MeasureState {
    std::int32_t time = 0;
    std::int32_t first_x = 0;        // x of site index 0 at `time`
    std::vector<double> mass;        // per site, spacing 2
    double boundary_loss = 0.0;

    double total_mass() const;
};

// rho_{t+1}(y) = rho_t(y-1) w_(y-1,t) + rho_t(y+1) (1 - w_(y+1,t)).
MeasureState hw_evolve(const Environment& env, MeasureState rho, std::int32_t t_target);

// ---- stationary atom statistics ----

struct StationaryAtomsReport {
    std::vector<double> u_grid;
    std::vector<EstimateCI> empirical_N;       // atoms per unit length with mass > u
    std::vector<EstimateCI> empirical_N_half;  // same at half burn-in (plateau check)
    std::vector<double> predicted_N;           // E1(u)
    EstimateCI mass_per_unit;                  // should stay at 1
    std::vector<double> cutoffs;               // atom cutoffs tried (x mean site mass)
    std::vector<double> atoms_per_unit_at_cutoff;  // dust sensitivity report
    bool plateau = false;
    double eps = 0.0, t_burn = 0.0;
};

// Beta(2 a eps, 2 a eps) i.i.d. environment, Lebesgue initial mass (one unit
// of mass per unit continuum length), burn to t_burn in continuum units, then
// count sites whose mass exceeds each u against N(u) = E1(u). Runs on a
// circle of circumference window_units, which removes boundary margins and
// conserves mass exactly; the long relaxation makes that the only affordable
// geometry.
StationaryAtomsReport stationary_atoms(double a, double eps, double t_burn, int window_units,
                                       int reps, SeedSpec seed, int workers = 1,
                                       const std::vector<double>& u_grid = {0.1, 0.5, 1.0});

}  // namespace wns
