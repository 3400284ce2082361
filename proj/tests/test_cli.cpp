#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wns/cli.hpp"

namespace {

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"wns"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return wns::cli::run(int(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

const std::string kTmp = "cli_test_out";

}  // namespace

TEST_CASE("selftest passes") {
    CHECK(run_cli({"selftest", "--out", kTmp + "/self"}) == 0);
}

TEST_CASE("worker count does not change the output bytes") {
    CHECK(run_cli({"web-density", "--t", "1", "--reps", "24", "--scale", "40", "--units", "16",
                   "--seed", "9", "--workers", "1", "--out", kTmp + "/w1"}) == 0);
    CHECK(run_cli({"web-density", "--t", "1", "--reps", "24", "--scale", "40", "--units", "16",
                   "--seed", "9", "--workers", "3", "--out", kTmp + "/w3"}) == 0);
    CHECK(slurp(kTmp + "/w1.csv") == slurp(kTmp + "/w3.csv"));

    // and the same config twice gives byte-identical bodies
    CHECK(run_cli({"web-density", "--t", "1", "--reps", "24", "--scale", "40", "--units", "16",
                   "--seed", "9", "--workers", "2", "--out", kTmp + "/w1b"}) == 0);
    CHECK(slurp(kTmp + "/w1.csv") == slurp(kTmp + "/w1b.csv"));
}

TEST_CASE("config echo round-trips into an identical run") {
    CHECK(run_cli({"net-density", "--t", "1", "--eps", "0.05", "--reps", "16", "--units", "12",
                   "--seed", "11", "--out", kTmp + "/a"}) == 0);
    const auto summary = nlohmann::json::parse(slurp(kTmp + "/a.json"));
    // replay from the echoed config alone
    std::ofstream cfg(kTmp + "/replay.json");
    nlohmann::json c = summary.at("config");
    c["out"] = kTmp + "/b";
    cfg << c.dump();
    cfg.close();
    CHECK(run_cli({"net-density", "--config", kTmp + "/replay.json"}) == 0);
    CHECK(slurp(kTmp + "/a.csv") == slurp(kTmp + "/b.csv"));
}

TEST_CASE("flags take precedence over the config file") {
    std::ofstream cfg(kTmp + "/cfg.json");
    cfg << R"({"t":[1.0],"reps":16,"scale":40,"units":12,"seed":5,"tol":0.25})";
    cfg.close();
    CHECK(run_cli({"web-density", "--config", kTmp + "/cfg.json", "--seed", "6", "--out",
                   kTmp + "/c"}) == 0);
    const auto summary = nlohmann::json::parse(slurp(kTmp + "/c.json"));
    CHECK(summary.at("config").at("seed") == 6);
    CHECK(summary.at("config").at("reps") == 16);
}

TEST_CASE("environment overrides beat config values but not flags") {
    std::ofstream cfg(kTmp + "/envcfg.json");
    cfg << R"({"t":[1.0],"reps":16,"scale":40,"units":12,"seed":5,"tol":0.3})";
    cfg.close();
    setenv("WNS_SEED", "77", 1);
    CHECK(run_cli({"web-density", "--config", kTmp + "/envcfg.json", "--out", kTmp + "/env1"}) ==
          0);
    auto summary = nlohmann::json::parse(slurp(kTmp + "/env1.json"));
    CHECK(summary.at("config").at("seed") == 77);
    CHECK(run_cli({"web-density", "--config", kTmp + "/envcfg.json", "--seed", "5", "--tol",
                   "0.3", "--out", kTmp + "/env2"}) == 0);
    summary = nlohmann::json::parse(slurp(kTmp + "/env2.json"));
    CHECK(summary.at("config").at("seed") == 5);
    unsetenv("WNS_SEED");
}

TEST_CASE("malformed configs exit with status 2") {
    std::ofstream cfg(kTmp + "/badkey.json");
    cfg << R"({"repz": 10})";
    cfg.close();
    CHECK(run_cli({"web-density", "--config", kTmp + "/badkey.json", "--out", kTmp + "/d"}) == 2);

    std::ofstream cfg2(kTmp + "/notjson.json");
    cfg2 << "{{{{";
    cfg2.close();
    CHECK(run_cli({"web-density", "--config", kTmp + "/notjson.json"}) == 2);

    CHECK(run_cli({"web-density", "--t", "-3"}) == 2);    // invalid argument
    CHECK(run_cli({"no-such-subcommand"}) == 2);
    CHECK(run_cli({"pmrca", "--kind", "nonsense", "--out", kTmp + "/e"}) == 2);
}

TEST_CASE("tolerance failures exit with status 1") {
    // an absurd tolerance cannot be met
    CHECK(run_cli({"web-density", "--t", "1", "--reps", "16", "--scale", "40", "--units", "12",
                   "--tol", "1e-9", "--seed", "9", "--out", kTmp + "/f"}) == 1);
}
