#include "wns/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "wns/closed_forms.hpp"
#include "wns/coupling.hpp"
#include "wns/hw_flow.hpp"
#include "wns/lattice_env.hpp"
#include "wns/path_engine.hpp"
#include "wns/report.hpp"
#include "wns/sticky_sde.hpp"
#include "wns/tsaw.hpp"

namespace wns::cli {

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binds options to config-file keys: file values apply only where the flag
// was not given on the command line; unknown keys are rejected.
class ParamSet {
  public:
    template <class T>
    void bind(CLI::App* app, const std::string& flag, const std::string& key, T& ref,
              const std::string& desc) {
        CLI::Option* opt = app->add_option(flag, ref, desc);
        items_.push_back({key, opt, [&ref](const nlohmann::json& v) { ref = v.get<T>(); },
                          [&ref]() { return nlohmann::json(ref); }});
    }
    void bind_flag(CLI::App* app, const std::string& flag, const std::string& key, bool& ref,
                   const std::string& desc) {
        CLI::Option* opt = app->add_flag(flag, ref, desc);
        items_.push_back({key, opt, [&ref](const nlohmann::json& v) { ref = v.get<bool>(); },
                          [&ref]() { return nlohmann::json(ref); }});
    }

    void apply_config(const nlohmann::json& j) {
        for (const auto& [key, value] : j.items()) {
            if (key == "subcommand") continue;
            bool known = false;
            for (auto& it : items_) {
                if (it.key != key) continue;
                known = true;
                if (it.opt->count() == 0) it.set(value);
                break;
            }
            if (!known) throw ConfigError("unknown config key: " + key);
        }
    }

    nlohmann::json echo(const std::string& subcommand) const {
        nlohmann::json j;
        j["subcommand"] = subcommand;
        for (const auto& it : items_) j[it.key] = it.get();
        return j;
    }

  private:
    struct Item {
        std::string key;
        CLI::Option* opt;
        std::function<void(const nlohmann::json&)> set;
        std::function<nlohmann::json()> get;
    };
    std::vector<Item> items_;
};

struct Common {
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out = "wns_out";
    std::string config_path;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* workers_opt = nullptr;

    void bind(CLI::App* app, ParamSet& ps) {
        ps.bind(app, "--seed", "seed", seed, "master seed");
        ps.bind(app, "--workers", "workers", workers, "worker threads");
        ps.bind(app, "--out", "out", out, "output path prefix");
        seed_opt = app->get_option("--seed");
        workers_opt = app->get_option("--workers");
        app->add_option("--config", config_path, "JSON config file (flags take precedence)");
    }

    // WNS_SEED / WNS_WORKERS beat config-file values but not explicit flags
    void apply_env() {
        if (const char* e = std::getenv("WNS_SEED"); e && seed_opt->count() == 0)
            seed = std::strtoull(e, nullptr, 10);
        if (const char* e = std::getenv("WNS_WORKERS"); e && workers_opt->count() == 0)
            workers = int(std::strtol(e, nullptr, 10));
    }

    SeedSpec seed_spec() const { return {seed, 0}; }
};

void load_config_if_any(const Common& common, ParamSet& ps) {
    if (common.config_path.empty()) return;
    std::ifstream is(common.config_path);
    if (!is) throw ConfigError("cannot open config file: " + common.config_path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ps.apply_config(j);
}

int finish(RunSummary& summary, const std::string& out_prefix) {
    summary.write(out_prefix + ".json");
    std::cout << (summary.pass() ? "PASS " : "FAIL ") << summary.subcommand << " ("
              << out_prefix + ".json" << ")\n";
    for (const auto& c : summary.checks)
        if (c.kind != "info")
            std::cout << "  [" << (c.pass ? "ok" : "FAIL") << "] " << c.name << ": value="
                      << format_double(c.value) << " target=" << format_double(c.target) << "\n";
    return summary.pass() ? 0 : 1;
}

std::vector<std::string> density_csv_row(const DensityEstimate& d, int reps, double eps,
                                         std::uint64_t seed) {
    return {format_double(d.t),          format_double(d.density.mean),
            format_double(d.density.ci_lo), format_double(d.density.ci_hi),
            std::to_string(reps),        format_double(eps),
            std::to_string(seed)};
}

// ---- subcommands ----

int cmd_web_density(CLI::App& app, Common& common, ParamSet& ps, std::vector<double>& ts,
                    int& reps, int& scale, int& units, double& tol) {
    load_config_if_any(common, ps);
    common.apply_env();
    DensityOptions opt;
    opt.reps = reps;
    opt.workers = common.workers;
    opt.count_units = units;
    opt.seed = common.seed_spec();
    const auto res = web_density(ts, scale, opt);

    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());
    CsvWriter csv({"t", "estimate", "ci_lo", "ci_hi", "reps", "eps", "seed"});
    for (const auto& d : res) {
        csv.add_row(density_csv_row(d, reps, 0.0, common.seed));
        summary.checks.push_back(check_relative("web_density_t" + format_double(d.t), d.density,
                                                coalescing_density(d.t), tol));
    }
    csv.write(common.out + ".csv");
    summary.outputs = {common.out + ".csv"};
    return finish(summary, common.out);
}

int cmd_net_density(CLI::App& app, Common& common, ParamSet& ps, std::vector<double>& ts,
                    double& eps, int& reps, int& units, double& tol) {
    load_config_if_any(common, ps);
    common.apply_env();
    DensityOptions opt;
    opt.reps = reps;
    opt.workers = common.workers;
    opt.count_units = units;
    opt.seed = common.seed_spec();
    const auto res = net_density(ts, eps, opt);

    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());
    CsvWriter csv({"t", "estimate", "ci_lo", "ci_hi", "reps", "eps", "seed"});
    for (const auto& d : res) {
        csv.add_row(density_csv_row(d, reps, eps, common.seed));
        summary.checks.push_back(check_relative("net_density_t" + format_double(d.t), d.density,
                                                branching_coalescing_density(d.t), tol));
    }
    csv.write(common.out + ".csv");
    summary.outputs = {common.out + ".csv"};
    return finish(summary, common.out);
}

int cmd_backbone(CLI::App& app, Common& common, ParamSet& ps, double& eps, double& burn,
                 int& units, int& reps, double& tol, double& p_min) {
    load_config_if_any(common, ps);
    common.apply_env();
    const BackboneReport rep =
        backbone_density(eps, burn, units, reps, common.seed_spec(), common.workers);

    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());
    summary.checks.push_back(check_relative("backbone_density", rep.density, 2.0, tol));
    summary.checks.push_back(check_p_above("gap_ks_p", rep.gap_ks.p, p_min));
    summary.checks.push_back(check_true("plateau", rep.plateau));
    summary.checks.push_back(info_value("density_half_burn", rep.density_half.mean));

    CsvWriter csv({"t", "estimate", "ci_lo", "ci_hi", "reps", "eps", "seed"});
    csv.add_row(density_csv_row({burn / 2.0, rep.density_half}, reps, eps, common.seed));
    csv.add_row(density_csv_row({burn, rep.density}, reps, eps, common.seed));
    csv.write(common.out + ".csv");
    CsvWriter gaps({"gap"});
    for (double gp : rep.gaps) gaps.add_row_values({gp});
    gaps.write(common.out + "_gaps.csv");
    summary.outputs = {common.out + ".csv", common.out + "_gaps.csv"};
    return finish(summary, common.out);
}

int cmd_relsep(CLI::App& app, Common& common, ParamSet& ps, double& eps, int& units, int& reps,
               double& tol) {
    load_config_if_any(common, ps);
    common.apply_env();
    const auto res = relsep_density_experiment(eps, 0.45, 0.55, units, reps, common.seed_spec(),
                                               common.workers);
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());
    summary.checks.push_back(check_relative("relsep_density", res.density, res.target, tol));
    CsvWriter csv({"band_lo", "band_hi", "estimate", "ci_lo", "ci_hi", "target", "reps", "eps",
                   "seed"});
    csv.add_row({format_double(res.band_lo), format_double(res.band_hi),
                 format_double(res.density.mean), format_double(res.density.ci_lo),
                 format_double(res.density.ci_hi), format_double(res.target),
                 std::to_string(reps), format_double(eps), std::to_string(common.seed)});
    csv.write(common.out + ".csv");
    summary.outputs = {common.out + ".csv"};
    return finish(summary, common.out);
}

int cmd_fingraph(CLI::App& app, Common& common, ParamSet& ps, int& windows, int& width,
                 int& depth, double& eps_max) {
    load_config_if_any(common, ps);
    common.apply_env();
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());

    std::int64_t viol = 0, paths = 0, gpaths = 0, waived = 0;
    ArrowField last_net;
    for (int i = 0; i < windows; ++i) {
        const SeedSpec s{common.seed, std::uint64_t(i)};
        const double eps = eps_max * to_unit(draw_u64(s, Draw::Generic, 7, i));
        const std::int32_t U = 4 + std::int32_t(draw_u64(s, Draw::Generic, 8, i) %
                                                std::uint64_t(std::max(1, depth - 3)));
        LatticeWindow w{0, std::int32_t(width) + 2 * U, 0, U, Parity::Even};
        const ArrowField net = gen_net_field(w, eps, s);
        const GraphCheckReport rep = finite_graph_check(net, 0, U);
        if (!rep.ok()) ++viol;
        paths += rep.paths_checked;
        gpaths += rep.graph_paths;
        waived += rep.boundary_meets;
        if (i + 1 == windows) last_net = net;
    }
    summary.checks.push_back(check_true("zero_violations", viol == 0));
    summary.checks.push_back(info_value("paths_checked", double(paths)));
    summary.checks.push_back(info_value("graph_paths", double(gpaths)));
    summary.checks.push_back(info_value("boundary_meets_waived", double(waived)));

    // edge list of the last window
    const FiniteGraphRep g = finite_graph(last_net, last_net.window().t_min,
                                          last_net.window().t_max);
    CsvWriter csv({"src_x", "src_t", "dst_x", "dst_t", "branch"});
    for (const auto& e : g.edges) {
        const auto& a = g.vertices[std::size_t(e.src)].site;
        const auto& b = g.vertices[std::size_t(e.dst)].site;
        csv.add_row({std::to_string(a.x), std::to_string(a.t), std::to_string(b.x),
                     std::to_string(b.t), std::string(1, e.branch)});
    }
    csv.write(common.out + ".csv");
    summary.outputs = {common.out + ".csv"};
    return finish(summary, common.out);
}

int cmd_pmrca(CLI::App& app, Common& common, ParamSet& ps, std::string& kind, double& eps,
              int& scale, int& units, int& reps) {
    load_config_if_any(common, ps);
    common.apply_env();
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());

    if (kind == "web") {
        const auto res = pmrca_web_experiment(scale, 0.25, 1.0, units, reps, common.seed_spec(),
                                              common.workers);
        summary.checks.push_back(check_true("window_stable", res.window_stable));
        summary.checks.push_back(
            info_value("per_length_band", res.per_length.mean));
        summary.checks.push_back(
            info_value("closed_form_band", coalescing_meeting_band_density(0.25, 1.0)));
    } else if (kind == "net") {
        const auto res = pmrca_net_experiment(eps, 0.25, 1.0, units, reps, common.seed_spec(),
                                              common.workers);
        summary.checks.push_back(info_value("per_area_band", res.mean));
        summary.checks.push_back(info_value("per_area_ci_lo", res.ci_lo));
        summary.checks.push_back(info_value("per_area_ci_hi", res.ci_hi));
    } else {
        throw ConfigError("pmrca: kind must be web or net");
    }

    // census point dump for one replica on a small window
    const std::int32_t steps = (kind == "web")
                                   ? std::int32_t(scale) * std::int32_t(scale)
                                   : std::int32_t(std::llround(1.0 / (eps * eps)));
    const std::int32_t margin = std::int32_t(std::ceil(4.0 * std::sqrt(double(steps))));
    LatticeWindow w{0, std::int32_t(units * ((kind == "web") ? scale : int(1.0 / eps))) +
                           2 * margin,
                    0, steps, Parity::Even};
    const ArrowField f = (kind == "web") ? gen_web_field(w, common.seed_spec())
                                         : gen_net_field(w, eps, common.seed_spec());
    const PmrcaCensus census = pmrca_census(f, steps);
    CsvWriter csv({"x", "t"});
    for (const Site& z : census.points)
        csv.add_row({std::to_string(z.x), std::to_string(z.t)});
    csv.write(common.out + ".csv");
    summary.outputs = {common.out + ".csv"};
    return finish(summary, common.out);
}

MuSpec mu_from_name(const std::string& name) {
    if (name == "uniform") return mu_uniform();
    if (name == "delta-half") return mu_delta(0.5);
    if (name == "two-point") return mu_two_point(0.5, 0.5);
    if (name == "beta22") return mu_beta(2.0, 2.0);
    throw ConfigError("unknown mu: " + name + " (uniform, delta-half, two-point, beta22)");
}

int cmd_hw_kernel(CLI::App& app, Common& common, ParamSet& ps, std::string& mu_name, int& width,
                  int& steps, int& envs, double& tol) {
    load_config_if_any(common, ps);
    common.apply_env();
    const MuSpec mu = mu_from_name(mu_name);
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());

    double worst_row = 0.0, worst_ck = 0.0;
    LatticeWindow w{0, width, 0, steps, Parity::Even};
    for (int i = 0; i < envs; ++i) {
        const Environment env = gen_environment(w, mu, {common.seed, std::uint64_t(i)});
        const std::int32_t mid = steps / 2;
        const TransitionKernel full = kernel(env, 0, steps);
        const TransitionKernel lo = kernel(env, 0, mid);
        const TransitionKernel hi = kernel(env, mid, steps);
        const TransitionKernel prod = compose(lo, hi);
        // interior sources never reach the window sides
        for (std::size_t r = 0; r < full.sources.size(); ++r) {
            const std::int32_t x = full.sources[std::size_t(r)];
            if (x - w.x_min < steps || w.x_max - x < steps) continue;
            worst_row = std::max(worst_row, std::abs(full.row_sum(r) - 1.0));
            for (std::size_t c = 0; c < full.targets.size(); ++c)
                worst_ck = std::max(worst_ck,
                                    std::abs(full.probs[r * full.targets.size() + c] -
                                             prod.probs[r * prod.targets.size() + c]));
        }
    }
    summary.checks.push_back(check_true("row_sums_within_tol", worst_row <= tol));
    summary.checks.push_back(check_true("chapman_kolmogorov_within_tol", worst_ck <= tol));
    summary.checks.push_back(info_value("worst_row_deficit", worst_row));
    summary.checks.push_back(info_value("worst_ck_error", worst_ck));

    // kernel dump for the last environment, central source
    const Environment env = gen_environment(w, mu, {common.seed, std::uint64_t(envs - 1)});
    const std::int32_t x0 = w.row_first_x(0) + std::int32_t(w.row_size(0) / 2) * 2;
    const TransitionKernel k = kernel(env, 0, steps, x0);
    CsvWriter csv({"x", "y", "probability"});
    for (std::size_t c = 0; c < k.targets.size(); ++c)
        if (k.probs[c] > 0.0)
            csv.add_row({std::to_string(x0), std::to_string(k.targets[c]),
                         format_double(k.probs[c])});
    csv.write(common.out + ".csv");
    summary.outputs = {common.out + ".csv"};
    return finish(summary, common.out);
}

int cmd_hw_npoint(CLI::App& app, Common& common, ParamSet& ps, std::string& mu_name, int& n,
                  int& steps, std::string& method, std::int64_t& reps) {
    load_config_if_any(common, ps);
    common.apply_env();
    const MuSpec mu = mu_from_name(mu_name);
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());

    const std::vector<std::int32_t> starts(std::size_t(n), 0);
    CsvWriter csv({"positions", "probability", "stderr"});
    if (method == "exact") {
        const NPointDist dist = npoint_exact(mu, starts, steps);
        for (const auto& [posv, p] : dist.probs) {
            std::string key;
            for (std::size_t i = 0; i < posv.size(); ++i)
                key += (i ? " " : "") + std::to_string(posv[i]);
            csv.add_row({key, format_double(p), "0"});
        }
        // moment identity at one step: E[omega^n] = P(all walkers at +1)
        const NPointDist one = npoint_exact(mu, starts, 1);
        const double lhs = mu.moment(n, 0);
        const double rhs = one.prob(std::vector<std::int32_t>(std::size_t(n), 1));
        summary.checks.push_back(
            check_true("moment_identity_exact", std::abs(lhs - rhs) < 1e-14));
        summary.checks.push_back(info_value("E_omega_n", lhs));
    } else if (method == "mc") {
        const NPointMc mc = npoint_mc(mu, starts, steps, reps, common.seed_spec());
        for (const auto& [posv, c] : mc.counts) {
            std::string key;
            for (std::size_t i = 0; i < posv.size(); ++i)
                key += (i ? " " : "") + std::to_string(posv[i]);
            const auto est = mc.prob(posv);
            csv.add_row({key, format_double(est.mean),
                         format_double((est.ci_hi - est.mean) / 1.959963984540054)});
        }
        const auto est = mc.prob(std::vector<std::int32_t>(std::size_t(n), int(steps)));
        const double target = npoint_exact(mu, starts, steps)
                                  .prob(std::vector<std::int32_t>(std::size_t(n), int(steps)));
        summary.checks.push_back(check_ci_covers("all_right_cell_vs_exact", est, target));
    } else {
        throw ConfigError("hw-npoint: method must be exact or mc");
    }
    csv.write(common.out + ".csv");
    summary.outputs = {common.out + ".csv"};
    return finish(summary, common.out);
}

int cmd_hw_stationary(CLI::App& app, Common& common, ParamSet& ps, double& a, double& eps,
                      double& burn, int& units, int& reps, double& tol) {
    load_config_if_any(common, ps);
    common.apply_env();
    const auto rep =
        stationary_atoms(a, eps, burn, units, reps, common.seed_spec(), common.workers);
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());
    CsvWriter csv({"u", "empirical_N", "predicted_N", "ci_lo", "ci_hi"});
    for (std::size_t i = 0; i < rep.u_grid.size(); ++i) {
        csv.add_row_values({rep.u_grid[i], rep.empirical_N[i].mean, rep.predicted_N[i],
                            rep.empirical_N[i].ci_lo, rep.empirical_N[i].ci_hi});
        summary.checks.push_back(check_relative("N_at_u" + format_double(rep.u_grid[i]),
                                                rep.empirical_N[i], rep.predicted_N[i], tol));
    }
    summary.checks.push_back(check_relative("mass_per_unit", rep.mass_per_unit, 1.0, 0.02));
    summary.checks.push_back(check_true("plateau", rep.plateau));
    for (std::size_t c = 0; c < rep.cutoffs.size(); ++c)
        summary.checks.push_back(info_value("atoms_at_cutoff_" + format_double(rep.cutoffs[c]),
                                            rep.atoms_per_unit_at_cutoff[c]));
    csv.write(common.out + ".csv");
    summary.outputs = {common.out + ".csv"};
    return finish(summary, common.out);
}

int cmd_sticky_pair(CLI::App& app, Common& common, ParamSet& ps, double& T, double& dt,
                    int& reps) {
    load_config_if_any(common, ps);
    common.apply_env();
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());

    std::vector<double> drift_l(std::size_t(reps), 0.0), drift_r(std::size_t(reps), 0.0),
        coin(std::size_t(reps), 0.0);
    bool sk_ok = true, tc_ok = true;
    CsvWriter paths({"replica", "t", "walker", "x"});
    for (int rep = 0; rep < reps; ++rep) {
        const StickyPair pr =
            solve_left_right(0.0, 0.0, T, dt, {common.seed, std::uint64_t(rep)});
        drift_l[std::size_t(rep)] = pr.report.drift_l;
        drift_r[std::size_t(rep)] = pr.report.drift_r;
        coin[std::size_t(rep)] = pr.report.coincidence_fraction;
        sk_ok = sk_ok && pr.report.skorohod_ok;
        tc_ok = tc_ok && pr.report.time_change_ok;
        if (rep < 3) {
            for (std::size_t g = 0; g < pr.L.x.size(); ++g) {
                paths.add_row_values({double(rep), double(g) * dt, 0.0, pr.L.x[g]});
                paths.add_row_values({double(rep), double(g) * dt, 1.0, pr.R.x[g]});
            }
        }
    }
    summary.checks.push_back(check_ci_covers("mean_drift_R", mean_ci(drift_r), 1.0));
    summary.checks.push_back(check_ci_covers("mean_drift_L", mean_ci(drift_l), -1.0));
    const auto coin_ci = mean_ci(coin);
    const double se = (coin_ci.ci_hi - coin_ci.mean) / 1.959963984540054;
    summary.checks.push_back(
        check_true("coincidence_positive_5sigma", coin_ci.mean > 5.0 * se && coin_ci.mean > 0.01));
    summary.checks.push_back(check_true("skorohod_identities", sk_ok));
    summary.checks.push_back(check_true("time_change_increasing", tc_ok));
    summary.checks.push_back(info_value("coincidence_fraction", coin_ci.mean));
    paths.write(common.out + "_paths.csv");
    summary.outputs = {common.out + "_paths.csv"};
    return finish(summary, common.out);
}

int cmd_sticky_npoint(CLI::App& app, Common& common, ParamSet& ps, int& n, double& beta,
                      double& T, double& eps, int& reps, double& cov_tol, double& slope_tol) {
    load_config_if_any(common, ps);
    common.apply_env();
    const Measure01 nu = mu_delta(0.5);
    const PathEnsemble ens =
        npoint_sticky(n, beta, nu, T, eps, 0.01, reps, common.seed_spec(), common.workers);
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());

    const CovariationReport cov = check_covariation(ens);
    for (const auto& pr : cov.pairs) {
        if (pr.i == pr.j) {
            summary.checks.push_back(check_relative(
                "covariation_diag_" + std::to_string(pr.i), pr.covariation, cov.T, 0.05));
        } else {
            const double rel =
                std::abs(pr.covariation.mean - pr.coincidence_time.mean) /
                std::max(pr.coincidence_time.mean, 1e-12);
            summary.checks.push_back(check_true(
                "covariation_vs_coincidence_" + std::to_string(pr.i) + std::to_string(pr.j),
                rel <= cov_tol));
            summary.checks.push_back(info_value("coincidence_time", pr.coincidence_time.mean));
        }
    }
    const MaxSlopeReport ms = max_slope(ens, 0.2);
    const double bp2 = beta_plus(beta, nu, 2);
    summary.checks.push_back(
        check_true("max_drift_vs_beta_plus2",
                   std::abs(ms.compensated_slope - bp2) <= slope_tol * std::abs(bp2)));
    summary.checks.push_back(info_value("compensated_slope", ms.compensated_slope));
    summary.checks.push_back(info_value("raw_slope", ms.raw_slope));
    summary.checks.push_back(info_value("beta_plus_2", bp2));

    CsvWriter csv({"replica", "t", "walker", "x"});
    for (std::size_t rep = 0; rep < std::min<std::size_t>(3, ens.paths.size()); ++rep)
        for (int i = 0; i < ens.n_walkers; ++i)
            for (std::size_t gidx = 0; gidx < ens.paths[rep][std::size_t(i)].size(); ++gidx)
                csv.add_row_values({double(rep), double(gidx) * ens.dt, double(i),
                                    ens.paths[rep][std::size_t(i)][gidx]});
    csv.write(common.out + "_paths.csv");
    summary.outputs = {common.out + "_paths.csv"};
    return finish(summary, common.out);
}

int cmd_tsaw(CLI::App& app, Common& common, ParamSet& ps, std::uint64_t& n_max, int& seeds,
             bool& control, double& lo, double& hi) {
    load_config_if_any(common, ps);
    common.apply_env();
    const ScalingReport rep =
        scaling_exponent(n_max, seeds, common.seed_spec(), control, common.workers);
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());
    summary.checks.push_back(
        check_true("slope_in_range", rep.fit.slope >= lo && rep.fit.slope <= hi));
    summary.checks.push_back(info_value("slope", rep.fit.slope));
    summary.checks.push_back(info_value("slope_stderr", rep.fit.stderr_slope));
    summary.checks.push_back(info_value("slope_low_range", rep.fit_low.slope));

    // one sample run: trajectory + final profile dump
    std::vector<std::int64_t> traj;
    const TsawState st =
        run_tsaw(std::min<std::uint64_t>(n_max, 100000), default_l0, common.seed_spec(), &traj);
    const ProfileReport prof = profile_check(st);
    summary.checks.push_back(check_true("area_identity", prof.area_ok));
    summary.checks.push_back(check_true("step_profile", prof.step_profile_ok));

    CsvWriter mean_csv({"n", "mean_abs_x"});
    for (std::size_t i = 0; i < rep.ns.size(); ++i)
        mean_csv.add_row_values({rep.ns[i], rep.mean_abs[i]});
    mean_csv.write(common.out + ".csv");
    CsvWriter traj_csv({"n", "x"});
    for (std::size_t i = 0; i < traj.size(); ++i)
        traj_csv.add_row({std::to_string(i + 1), std::to_string(traj[i])});
    traj_csv.write(common.out + "_trajectory.csv");
    CsvWriter prof_csv({"edge_left_endpoint", "local_time"});
    for (std::int64_t x = st.min_visited - 1; x <= st.max_visited; ++x)
        prof_csv.add_row({std::to_string(x), std::to_string(st.local_time(x))});
    prof_csv.write(common.out + "_profile.csv");
    summary.outputs = {common.out + ".csv", common.out + "_trajectory.csv",
                       common.out + "_profile.csv"};
    return finish(summary, common.out);
}

int cmd_meet_tail(CLI::App& app, Common& common, ParamSet& ps, std::int64_t& reps,
                  std::int64_t& n_max, double& slope_tol) {
    load_config_if_any(common, ps);
    common.apply_env();
    const MeetingTailReport rep = meeting_tail(reps, n_max, common.seed_spec(), common.workers);
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());
    summary.checks.push_back(
        check_true("slope_minus_half", std::abs(rep.fit.slope + 0.5) <= slope_tol));
    summary.checks.push_back(info_value("slope", rep.fit.slope));
    summary.checks.push_back(info_value("slope_stderr", rep.fit.stderr_slope));

    CsvWriter taus({"tau"});
    for (std::int64_t t : rep.taus) taus.add_row({std::to_string(t)});
    taus.write(common.out + "_taus.csv");
    CsvWriter surv({"n", "survival"});
    for (std::size_t i = 0; i < rep.ns.size(); ++i)
        surv.add_row_values({rep.ns[i], rep.survival[i]});
    surv.write(common.out + ".csv");
    summary.outputs = {common.out + ".csv", common.out + "_taus.csv"};
    return finish(summary, common.out);
}

int cmd_selftest(CLI::App& app, Common& common, ParamSet& ps) {
    load_config_if_any(common, ps);
    common.apply_env();
    RunSummary summary;
    summary.subcommand = app.get_name();
    summary.config = ps.echo(app.get_name());
    const SeedSpec seed = common.seed_spec();

    // exact identities across the modules
    LatticeWindow w{-20, 20, 0, 16, Parity::Even};
    const ArrowField web = gen_web_field(w, seed);
    bool web_ok = true;
    for (std::int32_t t = 0; t <= 16; ++t)
        for (std::int32_t x = w.row_first_x(t); x <= 20; x += 2) {
            const Arrow a = web.arrow(x, t);
            web_ok = web_ok && (a == Arrow::Left || a == Arrow::Right);
        }
    summary.checks.push_back(check_true("web_one_arrow_per_site", web_ok));
    summary.checks.push_back(
        check_true("web_determinism", gen_web_field(w, seed) == web));

    const ArrowField net0 = gen_net_field(w, 0.0, seed);
    bool net0_ok = true;
    for (std::int32_t t = 0; t <= 16; ++t)
        for (std::int32_t x = w.row_first_x(t); x <= 20; x += 2)
            net0_ok = net0_ok && net0.arrow(x, t) != Arrow::Both && net0.arrow(x, t) != Arrow::None;
    summary.checks.push_back(check_true("net_eps0_no_branching", net0_ok));

    const ArrowField net1 = gen_net_field(w, 1.0, seed);
    bool net1_ok = true;
    for (std::int32_t t = 0; t <= 16; ++t)
        for (std::int32_t x = w.row_first_x(t); x <= 20; x += 2)
            net1_ok = net1_ok && net1.arrow(x, t) == Arrow::Both;
    summary.checks.push_back(check_true("net_eps1_all_branching", net1_ok));

    const ArrowField dual = dual_field(web);
    const std::int32_t dx = dual.window().row_first_x(1);
    summary.checks.push_back(check_true(
        "dual_mirror_rule",
        dual.arrow(dx, 1) == (web.arrow(dx, 0) == Arrow::Right ? Arrow::Left : Arrow::Right)));

    // kernel identities on a deterministic environment
    LatticeWindow kw{-16, 16, 0, 4, Parity::Even};
    Environment env(kw);
    for (std::int32_t t = 0; t <= 4; ++t)
        for (std::int32_t x = kw.row_first_x(t); x <= 16; x += 2) env.set_omega(x, t, 0.7);
    const TransitionKernel k0 = kernel(env, 0, 0, 0);
    summary.checks.push_back(check_true("kernel_identity_at_s", k0(0, 0) == 1.0));
    const TransitionKernel k1 = kernel(env, 0, 1, 0);
    summary.checks.push_back(check_true(
        "kernel_one_step", std::abs(k1(0, 1) - 0.7) < 1e-15 && std::abs(k1(0, -1) - 0.3) < 1e-15));

    // Skorohod reflection on a short run
    const StickyPair pr = solve_left_right(0.0, 0.0, 0.5, 1e-3, seed);
    summary.checks.push_back(check_true("skorohod_identities", pr.report.skorohod_ok));
    summary.checks.push_back(check_true("time_change_increasing", pr.report.time_change_ok));

    // TSAW area identity
    const TsawState st = run_tsaw(10000, default_l0, seed);
    summary.checks.push_back(check_true("tsaw_area_identity", profile_check(st).area_ok));

    // beta_plus closed form
    summary.checks.push_back(check_true(
        "beta_plus_values", beta_plus(0.0, mu_delta(0.5), 2) == 2.0 &&
                                beta_plus(0.0, mu_delta(0.5), 3) == 3.0 &&
                                beta_plus(0.25, Measure01{}, 5) == 0.25));

    return finish(summary, common.out);
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"wns: lattice web/net simulators and flow-of-kernels experiments"};
    app.require_subcommand(1);

    int rc = 0;
    const auto wrap = [&rc](auto&& fn) {
        return [&rc, fn]() {
            try {
                rc = fn();
            } catch (const ConfigError& e) {
                std::cerr << "config error: " << e.what() << "\n";
                rc = 2;
            } catch (const nlohmann::json::exception& e) {
                std::cerr << "config error: " << e.what() << "\n";
                rc = 2;
            } catch (const std::invalid_argument& e) {
                std::cerr << "invalid arguments: " << e.what() << "\n";
                rc = 2;
            } catch (const std::exception& e) {
                std::cerr << "internal error: " << e.what() << "\n";
                rc = 3;
            }
        };
    };

    // web-density
    auto* web = app.add_subcommand("web-density", "coalescing point-set density vs closed form");
    auto web_ps = std::make_shared<ParamSet>();
    auto web_common = std::make_shared<Common>();
    auto web_ts = std::make_shared<std::vector<double>>(std::vector<double>{1.0});
    auto web_reps = std::make_shared<int>(200);
    auto web_scale = std::make_shared<int>(200);
    auto web_units = std::make_shared<int>(48);
    auto web_tol = std::make_shared<double>(0.05);
    web_ps->bind(web, "--t", "t", *web_ts, "continuum times");
    web_ps->bind(web, "--reps", "reps", *web_reps, "replicas");
    web_ps->bind(web, "--scale", "scale", *web_scale, "diffusive scale");
    web_ps->bind(web, "--units", "units", *web_units, "counting-region length");
    web_ps->bind(web, "--tol", "tol", *web_tol, "relative tolerance");
    web_common->bind(web, *web_ps);
    web->callback(wrap([=]() {
        return cmd_web_density(*web, *web_common, *web_ps, *web_ts, *web_reps, *web_scale,
                               *web_units, *web_tol);
    }));

    // net-density
    auto* net = app.add_subcommand("net-density", "branching-coalescing density vs closed form");
    auto net_ps = std::make_shared<ParamSet>();
    auto net_common = std::make_shared<Common>();
    auto net_ts = std::make_shared<std::vector<double>>(std::vector<double>{1.0});
    auto net_eps = std::make_shared<double>(0.02);
    auto net_reps = std::make_shared<int>(200);
    auto net_units = std::make_shared<int>(24);
    auto net_tol = std::make_shared<double>(0.10);
    net_ps->bind(net, "--t", "t", *net_ts, "continuum times");
    net_ps->bind(net, "--eps", "eps", *net_eps, "branching probability");
    net_ps->bind(net, "--reps", "reps", *net_reps, "replicas");
    net_ps->bind(net, "--units", "units", *net_units, "counting-region length");
    net_ps->bind(net, "--tol", "tol", *net_tol, "relative tolerance");
    net_common->bind(net, *net_ps);
    net->callback(wrap([=]() {
        return cmd_net_density(*net, *net_common, *net_ps, *net_ts, *net_eps, *net_reps,
                               *net_units, *net_tol);
    }));

    // backbone
    auto* bb = app.add_subcommand("backbone", "stationary branching-coalescing density and gaps");
    auto bb_ps = std::make_shared<ParamSet>();
    auto bb_common = std::make_shared<Common>();
    auto bb_eps = std::make_shared<double>(0.02);
    auto bb_burn = std::make_shared<double>(16.0);
    auto bb_units = std::make_shared<int>(24);
    auto bb_reps = std::make_shared<int>(200);
    auto bb_tol = std::make_shared<double>(0.10);
    auto bb_p = std::make_shared<double>(0.01);
    bb_ps->bind(bb, "--eps", "eps", *bb_eps, "branching probability");
    bb_ps->bind(bb, "--burn-in", "burn_in", *bb_burn, "continuum burn-in time");
    bb_ps->bind(bb, "--units", "units", *bb_units, "window length");
    bb_ps->bind(bb, "--reps", "reps", *bb_reps, "replicas");
    bb_ps->bind(bb, "--tol", "tol", *bb_tol, "relative tolerance on density 2");
    bb_ps->bind(bb, "--p-min", "p_min", *bb_p, "minimum KS p-value");
    bb_common->bind(bb, *bb_ps);
    bb->callback(wrap([=]() {
        return cmd_backbone(*bb, *bb_common, *bb_ps, *bb_eps, *bb_burn, *bb_units, *bb_reps,
                            *bb_tol, *bb_p);
    }));

    // relsep-density
    auto* rs = app.add_subcommand("relsep-density", "relevant separation point density");
    auto rs_ps = std::make_shared<ParamSet>();
    auto rs_common = std::make_shared<Common>();
    auto rs_eps = std::make_shared<double>(0.05);
    auto rs_units = std::make_shared<int>(8);
    auto rs_reps = std::make_shared<int>(400);
    auto rs_tol = std::make_shared<double>(0.15);
    rs_ps->bind(rs, "--eps", "eps", *rs_eps, "branching probability (<= 0.05)");
    rs_ps->bind(rs, "--units", "units", *rs_units, "counting-region length");
    rs_ps->bind(rs, "--reps", "reps", *rs_reps, "replicas");
    rs_ps->bind(rs, "--tol", "tol", *rs_tol, "relative tolerance");
    rs_common->bind(rs, *rs_ps);
    rs->callback(wrap([=]() {
        return cmd_relsep(*rs, *rs_common, *rs_ps, *rs_eps, *rs_units, *rs_reps, *rs_tol);
    }));

    // fingraph
    auto* fg = app.add_subcommand("fingraph", "finite graph representation checks");
    auto fg_ps = std::make_shared<ParamSet>();
    auto fg_common = std::make_shared<Common>();
    auto fg_windows = std::make_shared<int>(1000);
    auto fg_width = std::make_shared<int>(16);
    auto fg_depth = std::make_shared<int>(12);
    auto fg_eps = std::make_shared<double>(0.35);
    fg_ps->bind(fg, "--windows", "windows", *fg_windows, "random windows to check");
    fg_ps->bind(fg, "--width", "width", *fg_width, "window width (sites)");
    fg_ps->bind(fg, "--depth", "depth", *fg_depth, "max U - S (steps)");
    fg_ps->bind(fg, "--eps-max", "eps_max", *fg_eps, "branching probability upper bound");
    fg_common->bind(fg, *fg_ps);
    fg->callback(wrap([=]() {
        return cmd_fingraph(*fg, *fg_common, *fg_ps, *fg_windows, *fg_width, *fg_depth, *fg_eps);
    }));

    // pmrca
    auto* pm = app.add_subcommand("pmrca", "potential common-ancestor census");
    auto pm_ps = std::make_shared<ParamSet>();
    auto pm_common = std::make_shared<Common>();
    auto pm_kind = std::make_shared<std::string>("web");
    auto pm_eps = std::make_shared<double>(0.02);
    auto pm_scale = std::make_shared<int>(40);
    auto pm_units = std::make_shared<int>(12);
    auto pm_reps = std::make_shared<int>(60);
    pm_ps->bind(pm, "--kind", "kind", *pm_kind, "web or net");
    pm_ps->bind(pm, "--eps", "eps", *pm_eps, "branching probability (net)");
    pm_ps->bind(pm, "--scale", "scale", *pm_scale, "diffusive scale (web)");
    pm_ps->bind(pm, "--units", "units", *pm_units, "window length");
    pm_ps->bind(pm, "--reps", "reps", *pm_reps, "replicas");
    pm_common->bind(pm, *pm_ps);
    pm->callback(wrap([=]() {
        return cmd_pmrca(*pm, *pm_common, *pm_ps, *pm_kind, *pm_eps, *pm_scale, *pm_units,
                         *pm_reps);
    }));

    // hw-kernel
    auto* hk = app.add_subcommand("hw-kernel", "kernel identities on random environments");
    auto hk_ps = std::make_shared<ParamSet>();
    auto hk_common = std::make_shared<Common>();
    auto hk_mu = std::make_shared<std::string>("uniform");
    auto hk_width = std::make_shared<int>(64);
    auto hk_steps = std::make_shared<int>(12);
    auto hk_envs = std::make_shared<int>(1000);
    auto hk_tol = std::make_shared<double>(1e-10);
    hk_ps->bind(hk, "--mu", "mu", *hk_mu, "environment law");
    hk_ps->bind(hk, "--width", "width", *hk_width, "window width");
    hk_ps->bind(hk, "--steps", "steps", *hk_steps, "time steps");
    hk_ps->bind(hk, "--envs", "envs", *hk_envs, "environments");
    hk_ps->bind(hk, "--tol", "tol", *hk_tol, "absolute tolerance");
    hk_common->bind(hk, *hk_ps);
    hk->callback(wrap([=]() {
        return cmd_hw_kernel(*hk, *hk_common, *hk_ps, *hk_mu, *hk_width, *hk_steps, *hk_envs,
                             *hk_tol);
    }));

    // hw-npoint
    auto* hn = app.add_subcommand("hw-npoint", "n-point motions, exact or Monte Carlo");
    auto hn_ps = std::make_shared<ParamSet>();
    auto hn_common = std::make_shared<Common>();
    auto hn_mu = std::make_shared<std::string>("uniform");
    auto hn_n = std::make_shared<int>(2);
    auto hn_steps = std::make_shared<int>(4);
    auto hn_method = std::make_shared<std::string>("exact");
    auto hn_reps = std::make_shared<std::int64_t>(200000);
    hn_ps->bind(hn, "--mu", "mu", *hn_mu, "environment law");
    hn_ps->bind(hn, "--n", "n", *hn_n, "walkers (<= 4)");
    hn_ps->bind(hn, "--steps", "steps", *hn_steps, "time steps (<= 12)");
    hn_ps->bind(hn, "--method", "method", *hn_method, "exact or mc");
    hn_ps->bind(hn, "--reps", "reps", *hn_reps, "Monte Carlo replicas");
    hn_common->bind(hn, *hn_ps);
    hn->callback(wrap([=]() {
        return cmd_hw_npoint(*hn, *hn_common, *hn_ps, *hn_mu, *hn_n, *hn_steps, *hn_method,
                             *hn_reps);
    }));

    // hw-stationary
    auto* hs = app.add_subcommand("hw-stationary", "stationary atom statistics");
    auto hs_ps = std::make_shared<ParamSet>();
    auto hs_common = std::make_shared<Common>();
    // a = 1/2 realizes the product law with intensity dx x u^-1 e^-u du; see
    // the second-moment identity in the stationary-atoms tests
    auto hs_a = std::make_shared<double>(0.5);
    auto hs_eps = std::make_shared<double>(0.02);
    auto hs_burn = std::make_shared<double>(160.0);
    auto hs_units = std::make_shared<int>(32);
    auto hs_reps = std::make_shared<int>(96);
    auto hs_tol = std::make_shared<double>(0.15);
    hs_ps->bind(hs, "--a", "a", *hs_a, "characteristic-measure intensity");
    hs_ps->bind(hs, "--eps", "eps", *hs_eps, "lattice scale");
    hs_ps->bind(hs, "--burn-in", "burn_in", *hs_burn, "continuum burn-in time");
    hs_ps->bind(hs, "--units", "units", *hs_units, "circle circumference");
    hs_ps->bind(hs, "--reps", "reps", *hs_reps, "replicas");
    hs_ps->bind(hs, "--tol", "tol", *hs_tol, "relative tolerance");
    hs_common->bind(hs, *hs_ps);
    hs->callback(wrap([=]() {
        return cmd_hw_stationary(*hs, *hs_common, *hs_ps, *hs_a, *hs_eps, *hs_burn, *hs_units,
                                 *hs_reps, *hs_tol);
    }));

    // sticky-pair
    auto* sp = app.add_subcommand("sticky-pair", "left-right pair via Skorohod reflection");
    auto sp_ps = std::make_shared<ParamSet>();
    auto sp_common = std::make_shared<Common>();
    auto sp_T = std::make_shared<double>(1.0);
    auto sp_dt = std::make_shared<double>(1e-3);
    auto sp_reps = std::make_shared<int>(4000);
    sp_ps->bind(sp, "--T", "T", *sp_T, "horizon");
    sp_ps->bind(sp, "--dt", "dt", *sp_dt, "grid step");
    sp_ps->bind(sp, "--reps", "reps", *sp_reps, "replicas");
    sp_common->bind(sp, *sp_ps);
    sp->callback(wrap([=]() {
        return cmd_sticky_pair(*sp, *sp_common, *sp_ps, *sp_T, *sp_dt, *sp_reps);
    }));

    // sticky-npoint
    auto* sn = app.add_subcommand("sticky-npoint", "n-point sticky motions, martingale checks");
    auto sn_ps = std::make_shared<ParamSet>();
    auto sn_common = std::make_shared<Common>();
    auto sn_n = std::make_shared<int>(2);
    auto sn_beta = std::make_shared<double>(0.0);
    auto sn_T = std::make_shared<double>(1.0);
    auto sn_eps = std::make_shared<double>(0.01);
    auto sn_reps = std::make_shared<int>(3000);
    auto sn_cov_tol = std::make_shared<double>(0.10);
    auto sn_slope_tol = std::make_shared<double>(0.20);
    sn_ps->bind(sn, "--n", "n", *sn_n, "walkers");
    sn_ps->bind(sn, "--beta", "beta", *sn_beta, "drift");
    sn_ps->bind(sn, "--T", "T", *sn_T, "horizon");
    sn_ps->bind(sn, "--eps", "eps", *sn_eps, "lattice scale");
    sn_ps->bind(sn, "--reps", "reps", *sn_reps, "replicas");
    sn_ps->bind(sn, "--cov-tol", "cov_tol", *sn_cov_tol, "covariation tolerance");
    sn_ps->bind(sn, "--slope-tol", "slope_tol", *sn_slope_tol, "slope tolerance");
    sn_common->bind(sn, *sn_ps);
    sn->callback(wrap([=]() {
        return cmd_sticky_npoint(*sn, *sn_common, *sn_ps, *sn_n, *sn_beta, *sn_T, *sn_eps,
                                 *sn_reps, *sn_cov_tol, *sn_slope_tol);
    }));

    // tsaw
    auto* tw = app.add_subcommand("tsaw", "self-repelling walk scaling");
    auto tw_ps = std::make_shared<ParamSet>();
    auto tw_common = std::make_shared<Common>();
    auto tw_n = std::make_shared<std::uint64_t>(1000000);
    auto tw_seeds = std::make_shared<int>(200);
    auto tw_control = std::make_shared<bool>(false);
    auto tw_lo = std::make_shared<double>(0.61);
    auto tw_hi = std::make_shared<double>(0.72);
    tw_ps->bind(tw, "--n-max", "n_max", *tw_n, "steps per seed");
    tw_ps->bind(tw, "--seeds", "seeds", *tw_seeds, "independent seeds");
    tw_ps->bind_flag(tw, "--control", "control", *tw_control, "simple random walk control");
    tw_ps->bind(tw, "--slope-lo", "slope_lo", *tw_lo, "slope acceptance low");
    tw_ps->bind(tw, "--slope-hi", "slope_hi", *tw_hi, "slope acceptance high");
    tw_common->bind(tw, *tw_ps);
    tw->callback(wrap([=]() {
        return cmd_tsaw(*tw, *tw_common, *tw_ps, *tw_n, *tw_seeds, *tw_control, *tw_lo, *tw_hi);
    }));

    // meet-tail
    auto* mt = app.add_subcommand("meet-tail", "meeting-time tail exponent");
    auto mt_ps = std::make_shared<ParamSet>();
    auto mt_common = std::make_shared<Common>();
    auto mt_reps = std::make_shared<std::int64_t>(300000);
    auto mt_nmax = std::make_shared<std::int64_t>(102400);
    auto mt_tol = std::make_shared<double>(0.05);
    mt_ps->bind(mt, "--reps", "reps", *mt_reps, "walker pairs");
    mt_ps->bind(mt, "--n-max", "n_max", *mt_nmax, "censoring horizon");
    mt_ps->bind(mt, "--slope-tol", "slope_tol", *mt_tol, "absolute slope tolerance");
    mt_common->bind(mt, *mt_ps);
    mt->callback(wrap([=]() {
        return cmd_meet_tail(*mt, *mt_common, *mt_ps, *mt_reps, *mt_nmax, *mt_tol);
    }));

    // selftest
    auto* self = app.add_subcommand("selftest", "exact identities across the modules");
    auto self_ps = std::make_shared<ParamSet>();
    auto self_common = std::make_shared<Common>();
    self_common->bind(self, *self_ps);
    self->callback(wrap([=]() { return cmd_selftest(*self, *self_common, *self_ps); }));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return rc;
}

}  // namespace wns::cli
