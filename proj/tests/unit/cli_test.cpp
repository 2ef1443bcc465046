// Exercises the installed CLI surface through real process invocations.
// The binary path arrives via the SEMPREF_BIN environment variable set by
// CTest.

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "support/temp_dir.hpp"

using testsupport::TempDir;

namespace {

std::string binary_path() {
    const char* bin = std::getenv("SEMPREF_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "SEMPREF_BIN must point at the sempref binary");
    return bin;
}

int run_cli(const std::string& args) {
    const std::string cmd = binary_path() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-corpus then pipeline succeeds and writes the run directory") {
    TempDir tmp;
    const std::string base = tmp.path.string();
    REQUIRE(run_cli("gen-corpus --seed 5 --n-problems 6 --inputs-per-problem 2"
                    " --out-problems " + base + "/p.jsonl"
                    " --out-candidates " + base + "/c.jsonl"
                    " --out-truth " + base + "/t.jsonl") == 0);
    CHECK(std::filesystem::exists(base + "/p.jsonl"));

    const int rc = run_cli("pipeline --problems " + base + "/p.jsonl --candidates " + base +
                           "/c.jsonl --run-dir " + base + "/run --command 'python3 -S {src}'"
                           " --timeout-ms 5000 --workers 8 --cache-dir " + base +
                           "/cache --tau 0.6 --train-steps 10");
    CHECK(rc == 0);
    CHECK(std::filesystem::exists(base + "/run/manifest.json"));
    CHECK(std::filesystem::exists(base + "/run/pairs"));
    CHECK(std::filesystem::exists(base + "/run/metrics.report"));
}

TEST_CASE("missing dataset file exits with the config error code") {
    TempDir tmp;
    const std::string base = tmp.path.string();
    const int rc = run_cli("pipeline --problems " + base + "/nope.jsonl --candidates " + base +
                           "/nope2.jsonl --run-dir " + base + "/run --command 'python3 {src}'");
    CHECK(rc == 2);
}

TEST_CASE("bad flags exit with the config error code") {
    CHECK(run_cli("pipeline --definitely-unknown-flag") == 2);
    CHECK(run_cli("no-such-subcommand") == 2);
}

TEST_CASE("invalid tau is rejected as config error") {
    TempDir tmp;
    const std::string base = tmp.path.string();
    REQUIRE(run_cli("gen-corpus --seed 5 --n-problems 4 --inputs-per-problem 2"
                    " --mix 0.5,0.5,0,0"
                    " --out-problems " + base + "/p.jsonl"
                    " --out-candidates " + base + "/c.jsonl"
                    " --out-truth " + base + "/t.jsonl") == 0);
    const int rc = run_cli("pipeline --problems " + base + "/p.jsonl --candidates " + base +
                           "/c.jsonl --run-dir " + base + "/run --command 'python3 {src}'"
                           " --tau 1.5");
    CHECK(rc == 2);
}

TEST_CASE("config file values are used and flags override them") {
    TempDir tmp;
    const std::string base = tmp.path.string();
    REQUIRE(run_cli("gen-corpus --seed 6 --n-problems 4 --inputs-per-problem 2"
                    " --mix 0.5,0.5,0,0"
                    " --out-problems " + base + "/p.jsonl"
                    " --out-candidates " + base + "/c.jsonl"
                    " --out-truth " + base + "/t.jsonl") == 0);
    {
        std::ofstream cfg(base + "/run.ini");
        cfg << "problems=" << base << "/p.jsonl\n";
        cfg << "candidates=" << base << "/c.jsonl\n";
        cfg << "run-dir=" << base << "/run\n";
        cfg << "command=python3 -S {src}\n";
        cfg << "timeout-ms=5000\n";
        cfg << "tau=0.6\n";
        cfg << "workers=4\n";
    }
    CHECK(run_cli("pipeline --config " + base + "/run.ini --train-steps 5") == 0);
    CHECK(std::filesystem::exists(base + "/run/manifest.json"));

    // Flag overrides config: an invalid tau flag must lose to... rather,
    // beat the valid config value and fail.
    CHECK(run_cli("pipeline --config " + base + "/run.ini --tau 2.0") == 2);
}

TEST_CASE("sweep subcommand writes the per-tau report") {
    TempDir tmp;
    const std::string base = tmp.path.string();
    REQUIRE(run_cli("gen-corpus --seed 11 --n-problems 8 --inputs-per-problem 2"
                    " --out-problems " + base + "/p.jsonl"
                    " --out-candidates " + base + "/c.jsonl"
                    " --out-truth " + base + "/t.jsonl") == 0);
    REQUIRE(run_cli("execute --problems " + base + "/p.jsonl --candidates " + base +
                    "/c.jsonl --run-dir " + base + "/run --command 'python3 -S {src}'"
                    " --timeout-ms 5000 --workers 8 --cache-dir " + base + "/cache") == 0);
    REQUIRE(run_cli("sweep --problems " + base + "/p.jsonl --candidates " + base +
                    "/c.jsonl --run-dir " + base + "/run --taus 1.0,0.5,0.25") == 0);
    std::ifstream report(base + "/run/sweep.report");
    std::string line;
    int rows = 0;
    while (std::getline(report, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
}

} // TEST_SUITE
