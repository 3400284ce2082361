#include <doctest.h>

#include <sstream>

#include "wns/lattice_env.hpp"
#include "wns/report.hpp"

using namespace wns;

TEST_CASE("wns1 round trip for every field kind") {
    const LatticeWindow w{-9, 9, 0, 7, Parity::Even};
    const SeedSpec seed{701, 2};
    const ArrowField fields[] = {
        gen_web_field(w, seed),
        gen_net_field(w, 0.3, seed),
        gen_kill_field(w, 0.2, 0.1, seed),
        dual_field(gen_net_field(w, 0.3, seed)),
    };
    for (const ArrowField& f : fields) {
        std::stringstream ss;
        save_wns1(f, seed, ss);
        const Wns1Content back = load_wns1(ss);
        CHECK_FALSE(back.is_environment);
        CHECK(back.field == f);
        CHECK(back.seed.master_seed == seed.master_seed);
        CHECK(back.seed.stream_id == seed.stream_id);
    }
}

TEST_CASE("wns1 round trip for environments and corrupt input") {
    const LatticeWindow w{-9, 9, 0, 7, Parity::Even};
    const SeedSpec seed{702, 0};
    const Environment env = gen_environment(w, mu_uniform(), seed);
    std::stringstream ss;
    save_wns1(env, seed, ss);
    const Wns1Content back = load_wns1(ss);
    CHECK(back.is_environment);
    CHECK(back.env == env);

    std::stringstream bad("not a wns1 stream");
    CHECK_THROWS(load_wns1(bad));
}

TEST_CASE("json round trips for small windows") {
    const LatticeWindow w{-7, 7, 0, 5, Parity::Even};
    const SeedSpec seed{703, 0};
    const ArrowField f = gen_net_field(w, 0.4, seed);
    CHECK(field_from_json(field_to_json(f, seed)) == f);

    const Environment env = gen_environment(w, mu_uniform(), seed);
    CHECK(env_from_json(env_to_json(env, seed)) == env);

    const LatticeWindow big{-2000, 2000, 0, 2000, Parity::Even};
    CHECK_THROWS(field_to_json(gen_web_field(big, seed), seed));
}

TEST_CASE("csv writer: header, LF endings, stable formatting") {
    CsvWriter csv({"a", "b"});
    csv.add_row_values({1.5, 0.1});
    csv.add_row({"x", "y"});
    CHECK(csv.body() == "a,b\n1.5,0.1\nx,y\n");
    CHECK_THROWS(csv.add_row({"only-one"}));
    CHECK(format_double(0.5641895835477563) == "0.5641895835");
}

TEST_CASE("run summary serializes checks and pass flag") {
    RunSummary s;
    s.subcommand = "demo";
    s.config = {{"subcommand", "demo"}, {"x", 3}};
    s.checks.push_back(check_true("ok", true));
    CHECK(s.pass());
    s.checks.push_back(check_p_above("p", 0.001, 0.01));
    CHECK_FALSE(s.pass());
    const auto j = s.to_json();
    CHECK(j.at("schema") == "wns-report-1");
    CHECK(j.at("results").size() == 2);
    CHECK(j.at("config").at("x") == 3);
}
