#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "wns/measure.hpp"
#include "wns/rng.hpp"

using namespace wns;

TEST_CASE("basic laws and moments") {
    const MuSpec d = mu_delta(0.5);
    CHECK(d.total_mass() == 1.0);
    CHECK(d.moment(1, 0) == 0.5);
    CHECK(d.moment(2, 0) == 0.25);

    const MuSpec u = mu_uniform();
    CHECK(u.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
    // exact per-cell polynomial integration: uniform moments are exact
    CHECK(u.moment(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(u.moment(2, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(u.moment(1, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

    const MuSpec tp = mu_two_point(0.5, 0.5);
    CHECK(tp.moment(1, 0) == 0.5);
    CHECK(tp.moment(1, 1) == 0.0);  // q(1-q) vanishes on {0,1}

    CHECK_THROWS_AS(mu_delta(1.5), std::invalid_argument);
    MuSpec bad = mu_two_point(0.7, 0.7);
    CHECK_THROWS_AS(bad.validate_probability(), std::invalid_argument);
}

TEST_CASE("beta moments and endpoint handling") {
    const MuSpec b22 = mu_beta(2.0, 2.0);
    CHECK(b22.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b22.moment(1, 0) == doctest::Approx(0.5).epsilon(1e-5));
    // E[q(1-q)] for Beta(2,2) = 6 int q^2(1-q)^2 = 0.2
    CHECK(b22.moment(1, 1) == doctest::Approx(0.2).epsilon(1e-4));

    // small-parameter law: E[q(1-q)] = theta/(2(2 theta + 1))
    const double theta = 0.02;
    const MuSpec bs = mu_beta(theta, theta);
    CHECK(bs.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    const double want = theta / (2.0 * (2.0 * theta + 1.0));
    CHECK(bs.moment(1, 1) == doctest::Approx(want).epsilon(0.02));
}

TEST_CASE("mu_eps_net reproduces the hand-computed example") {
    // nu = delta_{1/2}, beta = 0, eps = 0.01: b = 4, c = 0,
    // mu = 0.04 d_{1/2} + 0.48 d_0 + 0.48 d_1
    const MuSpec mu = mu_eps_net(0.0, mu_delta(0.5), 0.01);
    CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
    double at_half = 0.0, at_zero = 0.0, at_one = 0.0;
    for (const auto& [q, w] : mu.atoms) {
        if (q == 0.5) at_half += w;
        if (q == 0.0) at_zero += w;
        if (q == 1.0) at_one += w;
    }
    CHECK(at_half == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(at_zero == doctest::Approx(0.48).epsilon(1e-14));
    CHECK(at_one == doctest::Approx(0.48).epsilon(1e-14));

    // eps too large, divergent nu
    CHECK_THROWS_AS(mu_eps_net(0.0, mu_delta(0.5), 0.3), std::invalid_argument);
    CHECK_THROWS_AS(mu_eps_net(0.0, mu_two_point(0.5, 0.5), 0.01), std::invalid_argument);
}

TEST_CASE("check_mucon recovers drift and flags degenerate families") {
    std::vector<std::pair<double, MuSpec>> family;
    for (double eps : {0.02, 0.01, 0.005})
        family.emplace_back(eps, mu_eps_net(0.3, mu_delta(0.5), eps));
    const MuconReport rep = check_mucon(family);
    CHECK(rep.beta_extrapolated == doctest::Approx(0.3).epsilon(1e-9));
    CHECK_FALSE(rep.nu_divergent);
    // nu_hat mass should sit at nu([0,1]) = 1
    for (const auto& e : rep.entries) CHECK(e.nu_mass == doctest::Approx(1.0).epsilon(1e-9));

    // constant delta_{1/2}: q(1-q) = 1/4 fixed, eps^-1/4 diverges
    std::vector<std::pair<double, MuSpec>> divergent;
    for (double eps : {0.02, 0.01, 0.005}) divergent.emplace_back(eps, mu_delta(0.5));
    const MuconReport drep = check_mucon(divergent);
    CHECK(drep.nu_divergent);
    for (const auto& e : drep.entries) CHECK(e.beta_hat == doctest::Approx(0.0));

    // Arratia family: both limits vanish
    std::vector<std::pair<double, MuSpec>> arratia;
    for (double eps : {0.02, 0.01}) arratia.emplace_back(eps, mu_two_point(0.5, 0.5));
    const MuconReport arep = check_mucon(arratia);
    CHECK(arep.beta_extrapolated == doctest::Approx(0.0));
    CHECK_FALSE(arep.nu_divergent);
    for (const auto& e : arep.entries) CHECK(e.nu_mass == 0.0);
}

TEST_CASE("mu_eps_beta satisfies the drift/characteristic-measure limits") {
    for (double eps : {1e-2, 1e-3}) {
        const MuSpec mu = mu_eps_beta(1.0, eps);
        CHECK(std::abs((2.0 * mu.moment(1, 0) - 1.0) / eps) < 1e-9);
    }
    // eps^-1 E[q(1-q)] -> a (exact finite-eps value a/(4 a eps + 1))
    const double eps = 1e-3;
    const MuSpec mu = mu_eps_beta(1.0, eps);
    const double a_hat = mu.moment(1, 1) / eps;
    CHECK(a_hat == doctest::Approx(1.0 / (4.0 * eps + 1.0)).epsilon(0.02));

    // weak limit: eps^-1 q(1-q) mu_eps against Lebesgue, per grid cell
    const MuconReport rep = check_mucon({{eps, mu}});
    const auto& nu = rep.entries[0].nu_hat;
    const std::size_t cells = 1024;
    std::vector<double> mass(cells, 0.0);
    for (std::size_t k = 0; k < nu.cell_mass.size(); ++k) mass[k] += nu.cell_mass[k];
    for (const auto& [q, w] : nu.atoms)
        mass[std::min(cells - 1, std::size_t(q * double(cells)))] += w;
    const double h = 1.0 / double(cells);
    double sup_dev = 0.0;
    for (std::size_t k = 0; k < cells; ++k)
        sup_dev = std::max(sup_dev, std::abs(mass[k] - h) / h);
    CHECK(sup_dev < 0.02);

    CHECK_THROWS_AS(mu_eps_beta(1.0, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(mu_eps_beta(-1.0, 0.01), std::invalid_argument);
}

TEST_CASE("sampler reproduces atoms and cell masses") {
    const MuSpec mu = mu_eps_net(0.0, mu_delta(0.5), 0.01);
    const MeasureSampler sampler(mu);
    const SeedSpec seed{21, 0};
    const int n = 200000;
    int zero = 0, one = 0, half = 0;
    for (int i = 0; i < n; ++i) {
        const double v = sampler.sample(draw_unit(seed, Draw::Generic, i, 0));
        if (v == 0.0) ++zero;
        else if (v == 1.0) ++one;
        else if (v == 0.5) ++half;
        else FAIL("unexpected sample value");
    }
    const double s3 = 3.0 * std::sqrt(0.48 * 0.52 / n);
    CHECK(std::abs(zero / double(n) - 0.48) < s3);
    CHECK(std::abs(one / double(n) - 0.48) < s3);
    CHECK(std::abs(half / double(n) - 0.04) < 3.0 * std::sqrt(0.04 * 0.96 / n));

    const MeasureSampler us(mu_uniform());
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += us.sample(draw_unit(seed, Draw::Generic, i, 1));
    CHECK(std::abs(mean / n - 0.5) < 3.0 / std::sqrt(12.0 * n));
}
