#include "wns/sticky_sde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wns/parallel.hpp"

namespace wns {

StickyPair solve_left_right(double L0, double R0, double T, double dt, SeedSpec seed) {
    if (dt <= 0.0 || T <= 0.0) throw std::invalid_argument("solve_left_right: need dt, T > 0");
    if (dt >= T) throw std::invalid_argument("solve_left_right: dt >= T");

    GaussSource noise(seed, 0);
    GaussSource sum_noise(seed, 1);

    const std::size_t n_grid = std::size_t(std::floor(T / dt)) + 1;
    StickyPair out;
    out.L.t0 = out.R.t0 = 0.0;
    out.L.dt = out.R.dt = dt;
    out.L.x.resize(n_grid);
    out.R.x.resize(n_grid);

    // phase 1: if started out of order (L0 > R0), run the pair independently
    // until they first order themselves; on the grid this costs one step at a
    // time with drift -1/+1
    double lead_l = L0, lead_r = R0;
    std::size_t g = 0;
    const double sdt = std::sqrt(dt);
    while (lead_l > lead_r && g < n_grid) {
        out.L.x[g] = lead_l;
        out.R.x[g] = lead_r;
        ++g;
        lead_l += -dt + sdt * noise.next();
        lead_r += dt + sdt * sum_noise.next();
    }
    if (g == n_grid) {
        out.report.drift_l = (out.L.x.back() - L0) / T;
        out.report.drift_r = (out.R.x.back() - R0) / T;
        out.report.threshold = 3.0 * sdt;
        return out;  // never met; pure independent phase
    }

    // phase 2: Skorohod machinery from the (possibly clamped) meeting state
    const double d0 = std::max(lead_r - lead_l, 0.0);
    const double sum0 = lead_l + lead_r;
    const double t_off = double(g) * dt;  // real-time offset of the construction

    const double dtau = dt;
    const double sq2 = std::numbers::sqrt2;

    // tau-indexed arrays until the time change covers [t_off, T]
    std::vector<double> tau_time;   // t(tau) = t_off + tau + S/sqrt(2)
    std::vector<double> tau_d;      // D = sqrt(2) * reflected
    std::vector<double> tau_s;      // S tilde (reflection push)
    double z = d0 / sq2;
    double run_min = std::min(0.0, z);
    double prev_s = -run_min;
    bool skorohod_ok = true, time_ok = true;
    double tau = 0.0;
    double last_t = -1.0;
    while (true) {
        const double s_tilde = -run_min;
        const double d_tilde = z - run_min;
        if (d_tilde < 0.0) skorohod_ok = false;
        if (s_tilde < prev_s) skorohod_ok = false;
        // pushing may only happen at the origin
        if (s_tilde > prev_s + 1e-12 && d_tilde > 1e-9) skorohod_ok = false;
        const double t_real = t_off + tau + s_tilde / sq2;
        if (t_real <= last_t) time_ok = false;
        last_t = t_real;
        tau_time.push_back(t_real);
        tau_d.push_back(sq2 * d_tilde);
        tau_s.push_back(s_tilde);
        prev_s = s_tilde;
        if (t_real >= T) break;
        z += sq2 * dtau + std::sqrt(dtau) * noise.next();
        run_min = std::min(run_min, z);
        tau += dtau;
    }

    // the sum L+R: independent Brownian motion with quadratic variation
    // 2 dtau off the coincidence set plus 2 sqrt(2) dS on it
    std::vector<double> tau_sum(tau_time.size());
    tau_sum[0] = sum0;
    for (std::size_t i = 1; i < tau_time.size(); ++i) {
        const double dq = 2.0 * dtau + 2.0 * sq2 * (tau_s[i] - tau_s[i - 1]);
        tau_sum[i] = tau_sum[i - 1] + std::sqrt(dq) * sum_noise.next();
    }

    // resample to the uniform grid
    std::size_t k = 0;
    std::int64_t coincident = 0;
    const double thresh = 3.0 * sdt;
    for (; g < n_grid; ++g) {
        const double t = double(g) * dt;
        while (k + 1 < tau_time.size() && tau_time[k + 1] < t) ++k;
        double dval, sval;
        if (k + 1 >= tau_time.size()) {
            dval = tau_d.back();
            sval = tau_sum.back();
        } else {
            const double w = (t - tau_time[k]) / std::max(tau_time[k + 1] - tau_time[k], 1e-300);
            dval = tau_d[k] + w * (tau_d[k + 1] - tau_d[k]);
            sval = tau_sum[k] + w * (tau_sum[k + 1] - tau_sum[k]);
        }
        out.L.x[g] = (sval - dval) / 2.0;
        out.R.x[g] = (sval + dval) / 2.0;
        if (dval < thresh) ++coincident;
    }

    out.report.threshold = thresh;
    out.report.coincidence_fraction = double(coincident) / double(n_grid);
    out.report.drift_l = (out.L.x.back() - L0) / T;
    out.report.drift_r = (out.R.x.back() - R0) / T;
    out.report.skorohod_ok = skorohod_ok;
    out.report.time_change_ok = time_ok;
    return out;
}

PathEnsemble npoint_sticky(int n, double beta, const Measure01& nu, double T, double eps,
                           double dt_report, int reps, SeedSpec seed, int workers) {
    if (n < 1) throw std::invalid_argument("npoint_sticky: n >= 1");
    if (T <= 0.0 || dt_report <= 0.0) throw std::invalid_argument("npoint_sticky: T, dt > 0");
    const MuSpec mu = mu_eps_net(beta, nu, eps);  // throws when not constructible
    mu.validate_probability(1e-9);
    const MeasureSampler sampler(mu);

    const std::int64_t steps = std::llround(T / (eps * eps));
    const std::int64_t stride = std::max<std::int64_t>(1, std::llround(dt_report / (eps * eps)));
    const std::size_t n_grid = std::size_t(steps / stride) + 1;

    PathEnsemble out;
    out.n_walkers = n;
    out.dt = double(stride) * eps * eps;
    out.eps = eps;
    out.paths.assign(std::size_t(reps),
                     std::vector<std::vector<double>>(std::size_t(n),
                                                      std::vector<double>(n_grid, 0.0)));

    parallel_replicas(reps, workers, [&](int rep) {
        const SeedSpec s = seed.with_stream(seed.stream_id + std::uint64_t(rep));
        std::vector<std::int64_t> pos(std::size_t(n), 0);
        auto& mine = out.paths[std::size_t(rep)];
        std::size_t grid = 0;
        for (std::int64_t t = 0; t <= steps; ++t) {
            if (t % stride == 0 && grid < n_grid) {
                for (int i = 0; i < n; ++i)
                    mine[std::size_t(i)][grid] = double(pos[std::size_t(i)]) * eps;
                ++grid;
            }
            if (t == steps) break;
            for (int i = 0; i < n; ++i) {
                // omega keyed by (site, time): co-located walkers share it
                const double omega =
                    sampler.sample(draw_unit(s, Draw::WalkOmega, pos[std::size_t(i)], t));
                const bool right = draw_unit(s, Draw::WalkStep, i, t) < omega;
                pos[std::size_t(i)] += right ? 1 : -1;
            }
        }
    });
    return out;
}

CovariationReport check_covariation(const PathEnsemble& ens) {
    if (ens.n_walkers < 2)
        throw std::invalid_argument("check_covariation: need at least 2 walkers");
    CovariationReport out;
    const std::size_t n_grid = ens.paths.at(0).at(0).size();
    out.T = double(n_grid - 1) * ens.dt;
    for (int i = 0; i < ens.n_walkers; ++i) {
        for (int j = i; j < ens.n_walkers; ++j) {
            std::vector<double> cov, coin;
            cov.reserve(ens.paths.size());
            coin.reserve(ens.paths.size());
            for (const auto& rep : ens.paths) {
                const auto& xi = rep[std::size_t(i)];
                const auto& xj = rep[std::size_t(j)];
                double c = 0.0;
                std::int64_t together = 0;
                for (std::size_t g = 0; g + 1 < n_grid; ++g) {
                    c += (xi[g + 1] - xi[g]) * (xj[g + 1] - xj[g]);
                    if (xi[g] == xj[g]) ++together;
                }
                cov.push_back(c);
                coin.push_back(double(together) * ens.dt);
            }
            out.pairs.push_back({i, j, mean_ci(cov), mean_ci(coin)});
        }
    }
    return out;
}

double beta_plus(double beta, const Measure01& nu, int m) {
    if (m < 1) throw std::invalid_argument("beta_plus: m >= 1");
    if (m == 1) return beta;
    double acc = 0.0;
    for (int k = 0; k <= m - 2; ++k) acc += nu.moment(0, k);
    return beta + 2.0 * acc;
}

MaxSlopeReport max_slope(const PathEnsemble& ens, double t_fit) {
    if (ens.n_walkers < 2) throw std::invalid_argument("max_slope: need 2 walkers");
    MaxSlopeReport out;
    const std::size_t n_grid = ens.paths.at(0).at(0).size();
    const std::size_t g_fit = std::min(n_grid - 1, std::size_t(std::floor(t_fit / ens.dt)));
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t g = 1; g <= g_fit; ++g) {
        const double t = double(g) * ens.dt;
        double mean = 0.0;
        for (const auto& rep : ens.paths) mean += std::max(rep[0][g], rep[1][g]);
        mean /= double(ens.paths.size());
        out.ts.push_back(t);
        out.mean_max.push_back(mean);
        sxx += t * t;
        sxy += t * mean;
    }
    out.raw_slope = sxy / sxx;
    double coin = 0.0;
    for (const auto& rep : ens.paths) {
        for (std::size_t g = 0; g < g_fit; ++g)
            if (rep[0][g] == rep[1][g]) coin += ens.dt;
    }
    out.mean_coincidence = coin / double(ens.paths.size());
    out.compensated_slope =
        (out.mean_coincidence > 0.0) ? out.mean_max.back() / out.mean_coincidence : 0.0;
    return out;
}

}  // namespace wns
