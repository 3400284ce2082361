#pragma once

// Closed-form targets the Monte Carlo estimates are checked against.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "wns/stats.hpp"

namespace wns {

// expected points per unit length of the coalescing point set at time t
inline double coalescing_density(double t) {
    if (t <= 0.0) throw std::invalid_argument("coalescing_density: t > 0");
    return 1.0 / std::sqrt(std::numbers::pi * t);
}

// expected points per unit length of the branching-coalescing point set
inline double branching_coalescing_density(double t) {
    if (t <= 0.0) throw std::invalid_argument("branching_coalescing_density: t > 0");
    return std::exp(-t) / std::sqrt(std::numbers::pi * t) +
           2.0 * norm_cdf(std::sqrt(2.0 * t));
}

// density (per unit area) of separation points relevant between times S and U
inline double relevant_separation_density(double t, double S, double U) {
    if (!(S < t && t < U)) throw std::invalid_argument("relevant_separation_density: S < t < U");
    return 2.0 * branching_coalescing_density(t - S) * branching_coalescing_density(U - t);
}

// average of the relevant-separation density over a time band, by Simpson
inline double relevant_separation_band_average(double S, double U, double band_lo,
                                               double band_hi, int panels = 64) {
    if (!(S < band_lo && band_lo < band_hi && band_hi < U))
        throw std::invalid_argument("relevant_separation_band_average: bad band");
    const int n = 2 * panels;
    const double h = (band_hi - band_lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = band_lo + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * relevant_separation_density(t, S, U);
    }
    return acc * h / 3.0 / (band_hi - band_lo);
}

// expected meeting points of the coalescing point set per unit length with
// times in [t_lo, t_hi] (each coalescence removes exactly one point)
inline double coalescing_meeting_band_density(double t_lo, double t_hi) {
    return coalescing_density(t_lo) - coalescing_density(t_hi);
}

}  // namespace wns
