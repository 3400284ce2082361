#include "wns/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wns {

EstimateCI mean_ci(std::span<const double> samples) {
    if (samples.size() < 2) throw std::invalid_argument("mean_ci: need at least 2 samples");
    double sum = 0.0;
    for (double v : samples) sum += v;
    const double n = double(samples.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (n - 1.0) / n);
    return {mean, mean - 1.959963984540054 * se, mean + 1.959963984540054 * se, samples.size()};
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 1.18) {
        // Jacobi theta form, accurate for small x
        const double v = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
        const double w = std::exp(-v);
        const double s = std::sqrt(2.0 * std::numbers::pi) / x *
                         (w + std::pow(w, 9.0) + std::pow(w, 25.0) + std::pow(w, 49.0));
        return 1.0 - s;
    }
    const double e = std::exp(-2.0 * x * x);
    double sf = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 12; ++k) {
        const double term = sign * 2.0 * std::pow(e, double(k) * k);
        sf += term;
        if (std::abs(term) < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(sf, 0.0, 1.0);
}

namespace {

double ks_stat_sorted(const std::vector<double>& sorted,
                      const std::function<double(double)>& cdf) {
    const double n = double(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max(d, std::max((double(i) + 1.0) / n - f, f - double(i) / n));
    }
    return d;
}

}  // namespace

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.size() < 10) throw std::invalid_argument("ks_test: need at least 10 samples");
    std::sort(samples.begin(), samples.end());
    const double d = ks_stat_sorted(samples, cdf);
    const double sn = std::sqrt(double(samples.size()));
    const double p = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
    return {d, p};
}

KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.size() < 10 || b.size() < 10)
        throw std::invalid_argument("ks_test_two_sample: need at least 10 samples each");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = double(a.size()), nb = double(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(double(i) / na - double(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    const double p = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
    return {d, p};
}

KsResult ks_test_exponential_gaps(const std::vector<double>& gaps, double pitch,
                                  int n_boot, SeedSpec seed) {
    if (gaps.size() < 10)
        throw std::invalid_argument("ks_test_exponential_gaps: need at least 10 gaps");
    if (n_boot < 50) throw std::invalid_argument("ks_test_exponential_gaps: n_boot too small");

    const auto stat_of = [pitch](std::vector<double> g) {
        double mean = 0.0;
        for (double v : g) mean += v;
        mean /= double(g.size());
        // continuity correction: compare the lattice-valued empirical cdf with
        // the fitted exponential evaluated half a pitch up
        const double rate = 1.0 / mean;
        std::sort(g.begin(), g.end());
        const double n = double(g.size());
        double d = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double f = 1.0 - std::exp(-rate * (g[i] + 0.5 * pitch));
            d = std::max(d, std::max((double(i) + 1.0) / n - f, f - double(i) / n));
        }
        return d;
    };

    const double d_obs = stat_of(gaps);

    // parametric bootstrap of the null: exponential with the fitted rate,
    // rounded onto the same lattice, re-fitted per resample
    double mean = 0.0;
    for (double v : gaps) mean += v;
    mean /= double(gaps.size());
    const double rate = 1.0 / mean;

    int ge = 0;
    for (int b = 0; b < n_boot; ++b) {
        std::vector<double> g(gaps.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double u = to_unit_pos(draw_u64(seed, Draw::Generic, std::int64_t(i), b));
            double v = -std::log(u) / rate;
            if (pitch > 0.0) v = pitch * std::max(1.0, std::round(v / pitch));
            g[i] = v;
        }
        if (stat_of(std::move(g)) >= d_obs) ++ge;
    }
    return {d_obs, (double(ge) + 1.0) / (double(n_boot) + 1.0)};
}

SlopeFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw std::invalid_argument("linear_fit: need >= 3 matched points");
    const double n = double(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate x");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (intercept + slope * xs[i]);
        rss += r * r;
    }
    const double se = (xs.size() > 2) ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
    return {slope, se, intercept};
}

SlopeFit loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    std::vector<double> lx(xs.size()), ly(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] <= 0.0 || ys[i] <= 0.0)
            throw std::invalid_argument("loglog_slope: inputs must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    return linear_fit(lx, ly);
}

double exp_int_e1(double x) {
    if (x <= 0.0) throw std::invalid_argument("exp_int_e1: x must be positive");
    if (x <= 1.0) {
        // series: E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
        constexpr double kEulerGamma = 0.5772156649015328606;
        double sum = 0.0, term = 1.0;
        for (int k = 1; k <= 40; ++k) {
            term *= -x / double(k);
            sum -= term / double(k);
            if (std::abs(term / double(k)) < 1e-18) break;
        }
        return -kEulerGamma - std::log(x) + sum;
    }
    // continued fraction (modified Lentz)
    const double tiny = 1e-300;
    double b = x + 1.0, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 200; ++i) {
        const double a = -double(i) * double(i);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x);
}

namespace {

double inc_beta_cf(double a, double b, double x) {
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    const double tiny = 1e-300;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h;
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("reg_inc_beta: a,b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * inc_beta_cf(a, b, x) / a;
    return 1.0 - front * inc_beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace wns
