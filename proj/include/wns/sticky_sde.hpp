#pragma once

// The left-right SDE solved by Skorohod reflection plus a time change, and
// diffusively rescaled n-point walks in a shared environment with the
// martingale-problem diagnostics.

#include <vector>

#include "wns/measure.hpp"
#include "wns/rng.hpp"
#include "wns/stats.hpp"

namespace wns {

struct ContinuumPath {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> x;

    double back() const { return x.back(); }
};

struct StickyRunReport {
    double coincidence_fraction = 0.0;  // grid times with L = R (D below threshold)
    double threshold = 0.0;
    double drift_l = 0.0, drift_r = 0.0;  // (end - start) / T
    bool skorohod_ok = true;   // reflected path >= 0, pushing only at zero
    bool time_change_ok = true;  // strictly increasing
};

struct StickyPair {
    ContinuumPath L, R;
    StickyRunReport report;
};

// One trajectory of the coupled pair: drifts -1/+1, independent noises while
// apart, one shared noise while together, L <= R after the first meeting.
// Internally: reflect Z_tau = B_tau + sqrt(2) tau + D0/sqrt(2) at the origin,
// recover real time via t = tau + S_tau/sqrt(2), and drive the sum L+R by an
// independent Brownian motion run at rate 2 off the coincidence set and 4 on
// it. Resampled onto the uniform t-grid by linear interpolation.
StickyPair solve_left_right(double L0, double R0, double T, double dt, SeedSpec seed);

// n diffusively rescaled walkers sharing one environment per replica.
struct PathEnsemble {
    int n_walkers = 0;
    double dt = 0.0;                 // report grid spacing (continuum)
    double eps = 0.0;
    // [replica][walker][grid index]
    std::vector<std::vector<std::vector<double>>> paths;
};

PathEnsemble npoint_sticky(int n, double beta, const Measure01& nu, double T, double eps,
                           double dt_report, int reps, SeedSpec seed, int workers = 1);

struct CovariationReport {
    struct Pair {
        int i = 0, j = 0;
        EstimateCI covariation;       // sum of dXi dXj over the grid
        EstimateCI coincidence_time;  // grid measure of {Xi = Xj}
    };
    std::vector<Pair> pairs;
    double T = 0.0;
};

// Realized covariation against grid-measured coincidence time, per pair.
CovariationReport check_covariation(const PathEnsemble& ensemble);

// E[max over the first t of a coalescing tuple]: the drift compensator value
// for m walkers currently at a common maximum.
double beta_plus(double beta, const Measure01& nu, int m);

// Drift of max(X1, X2) against the martingale-problem compensator: with
// drift beta = 0 the mean of the running max equals beta_plus(2) times the
// expected coincidence time, at every t. compensated_slope estimates
// beta_plus(2) from that identity over [0, t_fit]; raw_slope is the plain
// through-origin fit (smaller, since the pair leaves the diagonal).
struct MaxSlopeReport {
    std::vector<double> ts;
    std::vector<double> mean_max;
    double compensated_slope = 0.0;
    double raw_slope = 0.0;
    double mean_coincidence = 0.0;  // E int_0^t_fit 1{X1=X2} ds
};
MaxSlopeReport max_slope(const PathEnsemble& ensemble, double t_fit);

}  // namespace wns
