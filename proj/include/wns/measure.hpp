#pragma once

// Finite measures on [0,1]: a list of atoms plus a piecewise-constant part on
// a uniform grid. Closed under the transforms the environment constructions
// need, exact for atom-only laws.

#include <cstdint>
#include <string>
#include <vector>

#include "wns/rng.hpp"

namespace wns {

struct Measure01 {
    // (position, mass), positions in [0,1]
    std::vector<std::pair<double, double>> atoms;
    // mass per grid cell; cell k covers [k/h, (k+1)/h) with h = cell_mass.size()
    std::vector<double> cell_mass;

    double total_mass() const;
    // exact integral of q^j (1-q)^i against the measure (flat within cells)
    double moment(int j, int i) const;
    double mean() const { return moment(1, 0); }

    // int 1/(q(1-q)) dmu; throws if divergent (atoms at 0/1, endpoint cells)
    double integral_inv_q1q() const;
    // int (2q-1)/(q(1-q)) dmu, same domain restrictions
    double integral_signed_inv_q1q() const;

    Measure01 scaled(double c) const;

    // probability-measure validation: masses >= 0, positions in [0,1],
    // total mass within tol of 1
    void validate_probability(double tol = 1e-12) const;
};

using MuSpec = Measure01;

// ---- named constructors ----

MuSpec mu_delta(double q);
MuSpec mu_uniform(int cells = 1024);
MuSpec mu_two_point(double mass0, double mass1);  // mass0 d_0 + mass1 d_1
// Beta(a,b) discretized onto the grid; singular endpoint cells are carried as
// atoms at their conditional means so that small-parameter laws keep the
// correct q(1-q)-weighted mass near 0 and 1.
MuSpec mu_beta(double a, double b, int cells = 1024);

// Environment law built from a drift and a finite characteristic measure:
//   mu_eps = b eps nubar + (1-(b+c)eps)/2 d_0 + (1-(b-c)eps)/2 d_1
// with b = int dnu/(q(1-q)), c = beta - int (2q-1)/(q(1-q)) dnu and
// nubar = nu/(b q(1-q)). Requires the integrals finite and eps small enough
// that the endpoint masses stay non-negative.
MuSpec mu_eps_net(double beta, const Measure01& nu, double eps);

// Beta(2 a eps, 2 a eps) environment (Lebesgue characteristic measure a dq,
// zero drift). Requires a > 0 and eps in (0, 1/(4a)).
MuSpec mu_eps_beta(double a, double eps, int cells = 1024);

// ---- drift / characteristic-measure diagnostics ----

struct MuconReport {
    struct Entry {
        double eps;
        double beta_hat;       // eps^-1 int (2q-1) dmu_eps
        double nu_mass;        // total mass of eps^-1 q(1-q) mu_eps
        double nu_mean;        // mean position of that measure
        Measure01 nu_hat;
    };
    std::vector<Entry> entries;       // ordered as given
    double beta_extrapolated = 0.0;   // value at smallest eps
    bool nu_divergent = false;        // nu_mass grows as eps decreases
};

MuconReport check_mucon(const std::vector<std::pair<double, MuSpec>>& family);

// ---- sampling ----

// O(1) inverse-cdf sampler; atoms exact, uniform within cells.
class MeasureSampler {
  public:
    explicit MeasureSampler(const Measure01& mu);
    double sample(double u) const;  // u in [0,1)

  private:
    struct Segment {
        double cum;    // cumulative mass at segment end
        double lo;     // value (atom) or cell lower edge
        double width;  // 0 for atoms
    };
    std::vector<Segment> segs_;
    std::vector<std::uint32_t> bucket_;
};

}  // namespace wns
