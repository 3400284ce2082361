#pragma once

// Shared statistical machinery: confidence intervals, Kolmogorov-Smirnov
// tests, log-log regression, and the special functions the closed-form
// targets need.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "wns/rng.hpp"

namespace wns {

struct EstimateCI {
    double mean = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t n_samples = 0;

    double half_width() const { return (ci_hi - ci_lo) / 2.0; }
    bool contains(double v) const { return v >= ci_lo && v <= ci_hi; }
};

// Normal-approximation 95% CI.
EstimateCI mean_ci(std::span<const double> samples);

struct KsResult {
    double stat = 0.0;
    double p = 1.0;
};

// One-sample KS against a continuous cdf; asymptotic p-value with the
// Stephens small-sample correction.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

// Two-sample KS.
KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);

// KS for inter-point gaps against an exponential with estimated rate, on data
// living on a lattice of pitch `pitch`. The null distribution (rate estimated
// from the sample, gaps rounded to the pitch) is calibrated by parametric
// bootstrap, which is what makes the p-value honest for discrete data.
KsResult ks_test_exponential_gaps(const std::vector<double>& gaps, double pitch,
                                  int n_boot, SeedSpec seed);

struct SlopeFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    double intercept = 0.0;
};

// Least squares on (log x, log y). Throws on non-positive inputs.
SlopeFit loglog_slope(std::span<const double> xs, std::span<const double> ys);

SlopeFit linear_fit(std::span<const double> xs, std::span<const double> ys);

// ---- special functions ----

double norm_cdf(double x);          // Phi
double kolmogorov_sf(double x);     // P(sup|B_bridge| > x), asymptotic KS tail
double exp_int_e1(double x);        // E1(x) = int_x^inf e^-v / v dv
double reg_inc_beta(double a, double b, double x);  // I_x(a,b)

}  // namespace wns
