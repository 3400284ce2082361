#include "wns/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wns/stats.hpp"

namespace wns {

double Measure01::total_mass() const {
    double m = 0.0;
    for (const auto& [q, w] : atoms) m += w;
    for (double w : cell_mass) m += w;
    return m;
}

namespace {

// int_a^b q^j (1-q)^i dq
double poly_cell_integral(int j, int i, double a, double b) {
    double sum = 0.0;
    double binom = 1.0;
    for (int m = 0; m <= i; ++m) {
        const int p = j + m + 1;
        const double term = binom * (std::pow(b, p) - std::pow(a, p)) / double(p);
        sum += (m % 2 == 0) ? term : -term;
        binom = binom * double(i - m) / double(m + 1);
    }
    return sum;
}

}  // namespace

double Measure01::moment(int j, int i) const {
    double m = 0.0;
    for (const auto& [q, w] : atoms) m += w * std::pow(q, j) * std::pow(1.0 - q, i);
    if (!cell_mass.empty()) {
        const double h = 1.0 / double(cell_mass.size());
        for (std::size_t k = 0; k < cell_mass.size(); ++k) {
            if (cell_mass[k] == 0.0) continue;
            m += cell_mass[k] / h * poly_cell_integral(j, i, k * h, (k + 1) * h);
        }
    }
    return m;
}

double Measure01::integral_inv_q1q() const {
    double m = 0.0;
    for (const auto& [q, w] : atoms) {
        if (w == 0.0) continue;
        if (q <= 0.0 || q >= 1.0)
            throw std::invalid_argument("measure: int 1/(q(1-q)) diverges (atom at endpoint)");
        m += w / (q * (1.0 - q));
    }
    if (!cell_mass.empty()) {
        const double h = 1.0 / double(cell_mass.size());
        for (std::size_t k = 0; k < cell_mass.size(); ++k) {
            if (cell_mass[k] == 0.0) continue;
            const double a = k * h, b = (k + 1) * h;
            if (a <= 0.0 || b >= 1.0)
                throw std::invalid_argument(
                    "measure: int 1/(q(1-q)) diverges (mass in endpoint cell)");
            // int 1/(q(1-q)) = log(q/(1-q))
            m += cell_mass[k] / h *
                 (std::log(b / (1.0 - b)) - std::log(a / (1.0 - a)));
        }
    }
    return m;
}

double Measure01::integral_signed_inv_q1q() const {
    double m = 0.0;
    for (const auto& [q, w] : atoms) {
        if (w == 0.0) continue;
        if (q <= 0.0 || q >= 1.0)
            throw std::invalid_argument("measure: int (2q-1)/(q(1-q)) diverges");
        m += w * (2.0 * q - 1.0) / (q * (1.0 - q));
    }
    if (!cell_mass.empty()) {
        const double h = 1.0 / double(cell_mass.size());
        for (std::size_t k = 0; k < cell_mass.size(); ++k) {
            if (cell_mass[k] == 0.0) continue;
            const double a = k * h, b = (k + 1) * h;
            if (a <= 0.0 || b >= 1.0)
                throw std::invalid_argument("measure: int (2q-1)/(q(1-q)) diverges");
            // (2q-1)/(q(1-q)) = 1/(1-q) - 1/q
            m += cell_mass[k] / h *
                 (-std::log1p(-b) + std::log1p(-a) - std::log(b) + std::log(a));
        }
    }
    return m;
}

Measure01 Measure01::scaled(double c) const {
    Measure01 out = *this;
    for (auto& [q, w] : out.atoms) w *= c;
    for (double& w : out.cell_mass) w *= c;
    return out;
}

void Measure01::validate_probability(double tol) const {
    for (const auto& [q, w] : atoms) {
        if (w < 0.0) throw std::invalid_argument("measure: negative atom mass");
        if (q < 0.0 || q > 1.0) throw std::invalid_argument("measure: atom outside [0,1]");
    }
    for (double w : cell_mass)
        if (w < 0.0) throw std::invalid_argument("measure: negative cell mass");
    if (std::abs(total_mass() - 1.0) > tol)
        throw std::invalid_argument("measure: total mass differs from 1 beyond tolerance");
}

MuSpec mu_delta(double q) {
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("mu_delta: q outside [0,1]");
    MuSpec mu;
    mu.atoms.emplace_back(q, 1.0);
    return mu;
}

MuSpec mu_uniform(int cells) {
    if (cells < 1) throw std::invalid_argument("mu_uniform: cells < 1");
    MuSpec mu;
    mu.cell_mass.assign(std::size_t(cells), 1.0 / double(cells));
    return mu;
}

MuSpec mu_two_point(double mass0, double mass1) {
    MuSpec mu;
    mu.atoms.emplace_back(0.0, mass0);
    mu.atoms.emplace_back(1.0, mass1);
    return mu;
}

MuSpec mu_beta(double a, double b, int cells) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("mu_beta: parameters must be positive");
    if (cells < 4) throw std::invalid_argument("mu_beta: too few cells");
    MuSpec mu;
    mu.cell_mass.assign(std::size_t(cells), 0.0);
    const double h = 1.0 / double(cells);
    double prev = 0.0;
    for (int k = 0; k < cells; ++k) {
        const double next = (k == cells - 1) ? 1.0 : reg_inc_beta(a, b, (k + 1) * h);
        mu.cell_mass[std::size_t(k)] = next - prev;
        prev = next;
    }
    // A singular endpoint packs its cell mass much closer to the edge than a
    // flat cell would; carry the near-endpoint cells as atoms at their
    // conditional means, which keeps the q(1-q)-weighted mass correct for
    // small parameters (flat cells fail by tens of percent there).
    const int collapse = std::min(4, cells / 4);
    if (a < 1.0) {
        for (int k = 0; k < collapse; ++k) {
            const double mass = mu.cell_mass[std::size_t(k)];
            if (mass <= 0.0) continue;
            const double mean_in_cell =
                (reg_inc_beta(a + 1.0, b, (k + 1) * h) - reg_inc_beta(a + 1.0, b, k * h)) * a /
                (a + b) / mass;
            mu.atoms.emplace_back(mean_in_cell, mass);
            mu.cell_mass[std::size_t(k)] = 0.0;
        }
    }
    if (b < 1.0) {
        for (int k = 0; k < collapse; ++k) {
            const std::size_t cell = std::size_t(cells - 1 - k);
            const double mass = mu.cell_mass[cell];
            if (mass <= 0.0) continue;
            // conditional mean of 1-q, by the symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
            const double mean_one_minus =
                (reg_inc_beta(b + 1.0, a, (k + 1) * h) - reg_inc_beta(b + 1.0, a, k * h)) * b /
                (a + b) / mass;
            mu.atoms.emplace_back(1.0 - mean_one_minus, mass);
            mu.cell_mass[cell] = 0.0;
        }
    }
    return mu;
}

MuSpec mu_eps_net(double beta, const Measure01& nu, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("mu_eps_net: eps must be positive");
    const double b = nu.integral_inv_q1q();  // throws if divergent
    const double c = beta - nu.integral_signed_inv_q1q();
    if (1.0 - (b + std::abs(c)) * eps < 0.0)
        throw std::invalid_argument("mu_eps_net: eps too large for this (beta, nu)");

    MuSpec mu;
    // b eps nubar, with nubar = nu / (b q(1-q)): scales atom-by-atom, and cell
    // masses via the exact 1/(q(1-q)) integral over each cell
    for (const auto& [q, w] : nu.atoms) {
        if (w == 0.0) continue;
        mu.atoms.emplace_back(q, eps * w / (q * (1.0 - q)));
    }
    if (!nu.cell_mass.empty()) {
        mu.cell_mass.assign(nu.cell_mass.size(), 0.0);
        const double h = 1.0 / double(nu.cell_mass.size());
        for (std::size_t k = 0; k < nu.cell_mass.size(); ++k) {
            if (nu.cell_mass[k] == 0.0) continue;
            const double lo = k * h, hi = (k + 1) * h;
            mu.cell_mass[k] = eps * nu.cell_mass[k] / h *
                              (std::log(hi / (1.0 - hi)) - std::log(lo / (1.0 - lo)));
        }
    }
    mu.atoms.emplace_back(0.0, 0.5 * (1.0 - (b + c) * eps));
    mu.atoms.emplace_back(1.0, 0.5 * (1.0 - (b - c) * eps));
    return mu;
}

MuSpec mu_eps_beta(double a, double eps, int cells) {
    if (a <= 0.0) throw std::invalid_argument("mu_eps_beta: a must be positive");
    if (eps <= 0.0 || eps >= 1.0 / (4.0 * a))
        throw std::invalid_argument("mu_eps_beta: eps outside (0, 1/(4a))");
    return mu_beta(2.0 * a * eps, 2.0 * a * eps, cells);
}

MuconReport check_mucon(const std::vector<std::pair<double, MuSpec>>& family) {
    if (family.empty()) throw std::invalid_argument("check_mucon: empty family");
    MuconReport report;
    for (const auto& [eps, mu] : family) {
        MuconReport::Entry e;
        e.eps = eps;
        e.beta_hat = (2.0 * mu.moment(1, 0) - mu.moment(0, 0)) / eps;
        // nu_hat = eps^-1 q(1-q) mu: atoms transform pointwise, cells by the
        // exact q(1-q) integral
        Measure01 nu;
        for (const auto& [q, w] : mu.atoms) {
            const double m = w * q * (1.0 - q) / eps;
            if (m != 0.0) nu.atoms.emplace_back(q, m);
        }
        if (!mu.cell_mass.empty()) {
            nu.cell_mass.assign(mu.cell_mass.size(), 0.0);
            const double h = 1.0 / double(mu.cell_mass.size());
            for (std::size_t k = 0; k < mu.cell_mass.size(); ++k) {
                if (mu.cell_mass[k] == 0.0) continue;
                const double lo = k * h, hi = (k + 1) * h;
                nu.cell_mass[k] = mu.cell_mass[k] / h / eps * poly_cell_integral(1, 1, lo, hi);
            }
        }
        e.nu_mass = nu.total_mass();
        e.nu_mean = (e.nu_mass > 0.0) ? nu.moment(1, 0) / e.nu_mass : 0.0;
        e.nu_hat = std::move(nu);
        report.entries.push_back(std::move(e));
    }
    std::size_t smallest = 0;
    for (std::size_t i = 1; i < report.entries.size(); ++i)
        if (report.entries[i].eps < report.entries[smallest].eps) smallest = i;
    report.beta_extrapolated = report.entries[smallest].beta_hat;
    if (report.entries.size() >= 2) {
        // divergence heuristic: nu mass keeps growing by more than 25% as eps
        // shrinks across the family
        std::vector<std::pair<double, double>> by_eps;
        for (const auto& e : report.entries) by_eps.emplace_back(e.eps, e.nu_mass);
        std::sort(by_eps.begin(), by_eps.end(),
                  [](const auto& x, const auto& y) { return x.first > y.first; });
        bool growing = true;
        for (std::size_t i = 1; i < by_eps.size(); ++i)
            growing = growing && by_eps[i].second > 1.25 * by_eps[i - 1].second;
        report.nu_divergent = growing;
    }
    return report;
}

MeasureSampler::MeasureSampler(const Measure01& mu) {
    mu.validate_probability(1e-9);
    double cum = 0.0;
    for (const auto& [q, w] : mu.atoms) {
        if (w <= 0.0) continue;
        cum += w;
        segs_.push_back({cum, q, 0.0});
    }
    if (!mu.cell_mass.empty()) {
        const double h = 1.0 / double(mu.cell_mass.size());
        for (std::size_t k = 0; k < mu.cell_mass.size(); ++k) {
            if (mu.cell_mass[k] <= 0.0) continue;
            cum += mu.cell_mass[k];
            segs_.push_back({cum, k * h, h});
        }
    }
    if (segs_.empty()) throw std::invalid_argument("MeasureSampler: empty measure");
    segs_.back().cum = 1.0;
    const std::size_t nb = 4096;
    bucket_.assign(nb + 1, 0);
    std::size_t s = 0;
    for (std::size_t i = 0; i <= nb; ++i) {
        const double u = double(i) / double(nb);
        while (s + 1 < segs_.size() && segs_[s].cum < u) ++s;
        bucket_[i] = std::uint32_t(s);
    }
}

double MeasureSampler::sample(double u) const {
    std::size_t s = bucket_[std::size_t(u * 4096.0)];
    while (segs_[s].cum < u && s + 1 < segs_.size()) ++s;
    const Segment& seg = segs_[s];
    if (seg.width == 0.0) return seg.lo;
    const double prev = (s == 0) ? 0.0 : segs_[s - 1].cum;
    const double frac = (u - prev) / (seg.cum - prev);
    return seg.lo + frac * seg.width;
}

}  // namespace wns
