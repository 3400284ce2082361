#pragma once

// Generators for the random lattice data (arrow fields, environments) and the
// deterministic dual construction. All generation is keyed per site, so the
// same (window, parameters, seed) reproduce bit-identical fields regardless
// of traversal or parallelisation.

#include <iosfwd>
#include <string>

#include "wns/lattice.hpp"
#include "wns/measure.hpp"
#include "wns/rng.hpp"

namespace wns {

// i.i.d. per forward site: Left or Right with probability 1/2 each.
ArrowField gen_web_field(const LatticeWindow& window, SeedSpec seed);

// i.i.d. per site: Both w.p. eps, Left/Right w.p. (1-eps)/2 each.
ArrowField gen_net_field(const LatticeWindow& window, double eps, SeedSpec seed);

// i.i.d. per site: Both w.p. b, None w.p. kappa, Left/Right w.p. (1-b-kappa)/2.
ArrowField gen_kill_field(const LatticeWindow& window, double b, double kappa, SeedSpec seed);

// omega_z i.i.d. with law mu.
Environment gen_environment(const LatticeWindow& window, const MuSpec& mu, SeedSpec seed);

// Per site: Right w.p. omega_z, Left otherwise, independent given env.
ArrowField sample_web_from_env(const Environment& env, SeedSpec seed);

// Deterministic dual on the odd sublattice: the dual arrow set at (x, s) is
// the left-right mirror of the forward arrow set at (x, s-1). Rejects killing
// fields (no dual rule for None sites). The dual window covers
// t in [t_min+1, t_max+1].
ArrowField dual_field(const ArrowField& field);

// ---- serialization ----

// Versioned binary container, magic "WNS1": header carries window bounds,
// kind and seed; arrow payload is 2-bit codes per site, row-major.
void save_wns1(const ArrowField& field, SeedSpec seed, std::ostream& os);
void save_wns1(const Environment& env, SeedSpec seed, std::ostream& os);

struct Wns1Content {
    bool is_environment = false;
    ArrowField field;
    Environment env;
    SeedSpec seed;
};
Wns1Content load_wns1(std::istream& is);

// JSON form for small windows (one string of L/R/B/. codes per row).
std::string field_to_json(const ArrowField& field, SeedSpec seed);
ArrowField field_from_json(const std::string& text);
std::string env_to_json(const Environment& env, SeedSpec seed);
Environment env_from_json(const std::string& text);

}  // namespace wns
