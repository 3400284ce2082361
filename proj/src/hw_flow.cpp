#include "wns/hw_flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wns/parallel.hpp"
#include "wns/row_kernels.hpp"

namespace wns {

double TransitionKernel::operator()(std::int32_t x, std::int32_t y) const {
    const auto si = std::lower_bound(sources.begin(), sources.end(), x);
    const auto ti = std::lower_bound(targets.begin(), targets.end(), y);
    if (si == sources.end() || *si != x) throw std::out_of_range("kernel: unknown source");
    if (ti == targets.end() || *ti != y) return 0.0;
    return probs[std::size_t(si - sources.begin()) * targets.size() +
                 std::size_t(ti - targets.begin())];
}

double TransitionKernel::row_sum(std::size_t row) const {
    double s = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) s += probs[row * targets.size() + i];
    return s;
}

namespace {

// advance a full-row mass vector from time t_from to t_to within the window
void evolve_rows(const Environment& env, std::vector<double>& mass, std::int32_t t_from,
                 std::int32_t t_to) {
    const LatticeWindow& w = env.window();
    const auto& K = row_kernels();
    std::vector<double> next, omega;
    for (std::int32_t t = t_from; t < t_to; ++t) {
        const std::int64_t n_cur = w.row_size(t);
        const std::int64_t n_next = w.row_size(t + 1);
        const std::int64_t n = std::max(n_cur, n_next);
        mass.resize(std::size_t(n), 0.0);
        omega.assign(std::size_t(n), 0.5);
        std::copy(env.row(t), env.row(t) + n_cur, omega.begin());
        next.assign(std::size_t(n), 0.0);
        const StepPhase phase =
            (w.row_first_x(t + 1) > w.row_first_x(t)) ? StepPhase::Down : StepPhase::Up;
        K.evolve_mass(next.data(), mass.data(), omega.data(), std::size_t(n), phase);
        next.resize(std::size_t(n_next));
        mass = next;
    }
}

}  // namespace

TransitionKernel kernel(const Environment& env, std::int32_t s, std::int32_t t,
                        std::optional<std::int32_t> x0) {
    const LatticeWindow& w = env.window();
    if (s > t) throw std::invalid_argument("kernel: need s <= t");
    if (s < w.t_min || t > w.t_max) throw std::invalid_argument("kernel: [s,t] outside window");

    TransitionKernel out;
    out.s = s;
    out.t = t;
    if (x0) {
        if (!w.contains(*x0, s)) throw std::invalid_argument("kernel: source outside window");
        out.sources = {*x0};
    } else {
        for (std::int32_t x = w.row_first_x(s); x <= w.x_max; x += 2) out.sources.push_back(x);
    }
    for (std::int32_t y = w.row_first_x(t); y <= w.x_max; y += 2) out.targets.push_back(y);

    out.probs.assign(out.sources.size() * out.targets.size(), 0.0);
    const std::int32_t fx_s = w.row_first_x(s);
    for (std::size_t r = 0; r < out.sources.size(); ++r) {
        std::vector<double> mass(std::size_t(w.row_size(s)), 0.0);
        mass[std::size_t((out.sources[r] - fx_s) / 2)] = 1.0;
        evolve_rows(env, mass, s, t);
        double got = 0.0;
        for (std::size_t i = 0; i < mass.size(); ++i) {
            out.probs[r * out.targets.size() + i] = mass[i];
            got += mass[i];
        }
        out.boundary_loss += 1.0 - got;
    }
    return out;
}

TransitionKernel compose(const TransitionKernel& a, const TransitionKernel& b) {
    if (a.t != b.s || a.targets != b.sources)
        throw std::invalid_argument("compose: kernels do not chain");
    TransitionKernel out;
    out.s = a.s;
    out.t = b.t;
    out.sources = a.sources;
    out.targets = b.targets;
    out.probs.assign(out.sources.size() * out.targets.size(), 0.0);
    for (std::size_t i = 0; i < a.sources.size(); ++i)
        for (std::size_t k = 0; k < a.targets.size(); ++k) {
            const double w = a.probs[i * a.targets.size() + k];
            if (w == 0.0) continue;
            for (std::size_t j = 0; j < b.targets.size(); ++j)
                out.probs[i * b.targets.size() + j] += w * b.probs[k * b.targets.size() + j];
        }
    return out;
}

// ---- n-point motions ----

double NPointDist::prob(const std::vector<std::int32_t>& y) const {
    const auto it = probs.find(y);
    return it == probs.end() ? 0.0 : it->second;
}

std::map<std::int32_t, double> NPointDist::marginal(int keep) const {
    std::map<std::int32_t, double> out;
    for (const auto& [pos, p] : probs) out[pos[std::size_t(keep)]] += p;
    return out;
}

NPointDist npoint_exact(const MuSpec& mu, const std::vector<std::int32_t>& starts, int steps) {
    const int n = int(starts.size());
    if (n < 1 || n > 4) throw std::invalid_argument("npoint_exact: n must be in 1..4");
    if (steps < 0 || steps > 12) throw std::invalid_argument("npoint_exact: steps must be <= 12");
    mu.validate_probability();

    // joint right-move weights: m[j][k] = int q^j (1-q)^(k-j) dmu
    double m[5][5];
    for (int k = 0; k <= n; ++k)
        for (int j = 0; j <= k; ++j) m[j][k] = mu.moment(j, k - j);

    NPointDist dist;
    dist.n = n;
    dist.steps = steps;
    dist.probs[starts] = 1.0;

    for (int step = 0; step < steps; ++step) {
        std::map<std::vector<std::int32_t>, double> next;
        for (const auto& [pos, p] : dist.probs) {
            // group walkers by site
            std::vector<std::pair<std::int32_t, std::vector<int>>> groups;
            for (int i = 0; i < n; ++i) {
                bool found = false;
                for (auto& g : groups)
                    if (g.first == pos[std::size_t(i)]) {
                        g.second.push_back(i);
                        found = true;
                    }
                if (!found) groups.push_back({pos[std::size_t(i)], {i}});
            }
            // enumerate joint moves: per group, every subset goes right with
            // weight m[|subset|][group size]; groups independent
            std::vector<std::pair<std::vector<std::int32_t>, double>> partial;
            partial.push_back({pos, p});
            for (const auto& [site, members] : groups) {
                (void)site;
                const int k = int(members.size());
                std::vector<std::pair<std::vector<std::int32_t>, double>> grown;
                for (const auto& [cfg, q] : partial) {
                    for (int sub = 0; sub < (1 << k); ++sub) {
                        const int j = __builtin_popcount(unsigned(sub));
                        const double wgt = m[j][k];
                        if (wgt == 0.0) continue;
                        std::vector<std::int32_t> nc = cfg;
                        for (int b = 0; b < k; ++b)
                            nc[std::size_t(members[std::size_t(b)])] +=
                                (sub >> b & 1) ? 1 : -1;
                        grown.push_back({std::move(nc), q * wgt});
                    }
                }
                partial = std::move(grown);
            }
            for (auto& [cfg, q] : partial) next[cfg] += q;
        }
        dist.probs = std::move(next);
    }
    return dist;
}

EstimateCI NPointMc::prob(const std::vector<std::int32_t>& y) const {
    const auto it = counts.find(y);
    const double c = (it == counts.end()) ? 0.0 : double(it->second);
    const double p = c / double(reps);
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-300) / double(reps));
    return {p, p - 1.959963984540054 * se, p + 1.959963984540054 * se, std::size_t(reps)};
}

NPointMc npoint_mc(const MuSpec& mu, const std::vector<std::int32_t>& starts, int steps,
                   std::int64_t reps, SeedSpec seed) {
    mu.validate_probability();
    const MeasureSampler sampler(mu);
    NPointMc out;
    out.n = int(starts.size());
    out.steps = steps;
    out.reps = reps;
    std::vector<std::int32_t> pos;
    for (std::int64_t rep = 0; rep < reps; ++rep) {
        const SeedSpec s = seed.with_stream(seed.stream_id + std::uint64_t(rep));
        pos = starts;
        for (int t = 0; t < steps; ++t) {
            for (std::size_t i = 0; i < pos.size(); ++i) {
                // the environment draw is keyed by (site, time): walkers on one
                // site see the same omega, distinct sites are independent
                const double omega = sampler.sample(draw_unit(s, Draw::WalkOmega, pos[i], t));
                const bool right =
                    draw_unit(s, Draw::WalkStep, std::int64_t(i), t) < omega;
                pos[i] += right ? 1 : -1;
            }
        }
        ++out.counts[pos];
    }
    return out;
}

// ---- measure-valued process ----

double MeasureState::total_mass() const {
    double s = 0.0;
    for (double v : mass) s += v;
    return s;
}

MeasureState hw_evolve(const Environment& env, MeasureState rho, std::int32_t t_target) {
    const LatticeWindow& w = env.window();
    if (rho.time > t_target) throw std::invalid_argument("hw_evolve: rho.time > t_target");
    if (t_target > w.t_max) throw std::invalid_argument("hw_evolve: t_target beyond window");
    if (rho.first_x != w.row_first_x(rho.time) ||
        std::int64_t(rho.mass.size()) != w.row_size(rho.time))
        throw std::invalid_argument("hw_evolve: state does not cover the full row");
    for (double v : rho.mass)
        if (v < 0.0) throw std::invalid_argument("hw_evolve: negative mass");
    const double before = rho.total_mass();
    evolve_rows(env, rho.mass, rho.time, t_target);
    rho.boundary_loss += before - rho.total_mass();
    rho.time = t_target;
    rho.first_x = w.row_first_x(t_target);
    return rho;
}

// ---- stationary atom statistics ----

StationaryAtomsReport stationary_atoms(double a, double eps, double t_burn, int window_units,
                                       int reps, SeedSpec seed, int workers,
                                       const std::vector<double>& u_grid) {
    if (t_burn <= 0.0) throw std::invalid_argument("stationary_atoms: t_burn must be positive");
    if (window_units < 2 || reps < 2)
        throw std::invalid_argument("stationary_atoms: window_units and reps too small");
    const MuSpec mu = mu_eps_beta(a, eps);  // validates a, eps
    const MeasureSampler sampler(mu);

    // The long burn-in runs on a circle of `window_units` circumference: no
    // absorbing margins, exact mass conservation, finite-size effects O(1/L).
    const std::int64_t steps = std::llround(t_burn / (eps * eps));
    const std::int64_t half = steps / 2;
    const double site_len = 2.0 * eps;                     // continuum site spacing
    const double site_mass = site_len;                     // unit density
    const std::size_t count_sites =
        std::size_t(std::llround(double(window_units) / site_len));
    const std::size_t margin = 0;
    const std::size_t n = count_sites;
    // the realized circumference; equals window_units when 1/(2 eps) is whole
    const double length = double(count_sites) * site_len;

    const std::size_t nu = u_grid.size();
    const std::vector<double> cutoffs = {1e-2, 1e-3, 1e-4};
    std::vector<std::vector<double>> N_full(nu, std::vector<double>(std::size_t(reps)));
    std::vector<std::vector<double>> N_half(nu, std::vector<double>(std::size_t(reps)));
    std::vector<std::vector<double>> dust(cutoffs.size(), std::vector<double>(std::size_t(reps)));
    std::vector<double> mass_per_unit(std::size_t(reps), 0.0);

    parallel_replicas(reps, workers, [&](int rep) {
        const SeedSpec s = seed.with_stream(seed.stream_id + std::uint64_t(rep));
        std::vector<double> cur(n, site_mass), next(n), omega(n);
        const auto& K = row_kernels();
        const auto count_above = [&](double u) {
            std::int64_t c = 0;
            for (std::size_t j = margin; j < margin + count_sites; ++j)
                if (cur[j] > u) ++c;
            return double(c) / length;
        };
        for (std::int64_t t = 0; t < steps; ++t) {
            if (t == half)
                for (std::size_t k = 0; k < nu; ++k)
                    N_half[k][std::size_t(rep)] = count_above(u_grid[k]);
            // one 128-bit block feeds two sites
            for (std::size_t j = 0; j < n; j += 2) {
                const auto blk = draw128(s, Draw::MassOmega, std::int64_t(j / 2), t);
                omega[j] = sampler.sample(to_unit(blk[0]));
                if (j + 1 < n) omega[j + 1] = sampler.sample(to_unit(blk[1]));
            }
            const StepPhase phase = (t % 2 == 0) ? StepPhase::Down : StepPhase::Up;
            K.evolve_mass(next.data(), cur.data(), omega.data(), n, phase);
            // periodic wrap: re-route the mass the absorbing kernel dropped
            if (phase == StepPhase::Down)
                next[n - 1] += cur[0] * (1.0 - omega[0]);
            else
                next[0] += cur[n - 1] * omega[n - 1];
            cur.swap(next);
        }
        for (std::size_t k = 0; k < nu; ++k) N_full[k][std::size_t(rep)] = count_above(u_grid[k]);
        for (std::size_t c = 0; c < cutoffs.size(); ++c)
            dust[c][std::size_t(rep)] = count_above(cutoffs[c] * site_mass);
        double m = 0.0;
        for (std::size_t j = margin; j < margin + count_sites; ++j) m += cur[j];
        mass_per_unit[std::size_t(rep)] = m / length;
    });

    StationaryAtomsReport out;
    out.eps = eps;
    out.t_burn = t_burn;
    out.u_grid = std::vector<double>(u_grid.begin(), u_grid.end());
    out.cutoffs = cutoffs;
    out.plateau = true;
    for (std::size_t k = 0; k < nu; ++k) {
        out.empirical_N.push_back(mean_ci(N_full[k]));
        out.empirical_N_half.push_back(mean_ci(N_half[k]));
        out.predicted_N.push_back(exp_int_e1(u_grid[k]));
        const bool overlap = out.empirical_N[k].ci_lo <= out.empirical_N_half[k].ci_hi &&
                             out.empirical_N_half[k].ci_lo <= out.empirical_N[k].ci_hi;
        out.plateau = out.plateau && overlap;
    }
    for (std::size_t c = 0; c < cutoffs.size(); ++c)
        out.atoms_per_unit_at_cutoff.push_back(mean_ci(dust[c]).mean);
    out.mass_per_unit = mean_ci(mass_per_unit);
    if (!out.plateau)
        throw std::runtime_error("stationary_atoms: burn-in plateau not reached");
    return out;
}

}  // namespace wns
