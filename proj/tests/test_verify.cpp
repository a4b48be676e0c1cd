#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aqe/verify.hpp"

using namespace aqe;

// The OpenMP kernels must agree exactly with their serial references: both
// count the same deterministic per-trial outcomes.

TEST_CASE("exhaustive coverage kernel: parallel == serial, and passes") {
    const CoverageReport p = exhaustive_coverage({});
    const CoverageReport s = exhaustive_coverage_serial({});
    CHECK(p.trials == s.trials);
    CHECK(p.misses == s.misses);
    CHECK(p.pass);
    CHECK(s.pass);
    CHECK(p.trials == 8750);  // the built-in suite's full enumeration
}

TEST_CASE("monte carlo kernel: parallel == serial") {
    MonteCarloParams params;
    params.trials = 100;
    params.view_rows = 20000;
    params.block = 5000;
    const CoverageReport p = montecarlo_stopping(params);
    const CoverageReport s = montecarlo_stopping_serial(params);
    CHECK(p.trials == s.trials);
    CHECK(p.misses == s.misses);
    CHECK(p.pass);
}

TEST_CASE("phos kernel: parallel == serial, zero violations") {
    const CoverageReport p = phos_check(2000, 99);
    const CoverageReport s = phos_check_serial(2000, 99);
    CHECK(p.misses == 0);
    CHECK(s.misses == 0);
    CHECK(p.trials == s.trials);
    CHECK(p.pass);
}

TEST_CASE("monotonicity kernel: parallel == serial, zero violations") {
    const CoverageReport p = monotonicity_check(2000, 7);
    const CoverageReport s = monotonicity_check_serial(2000, 7);
    CHECK(p.misses == 0);
    CHECK(s.misses == 0);
    CHECK(p.pass);
}

TEST_CASE("expr fuzz kernel: parallel == serial, zero violations") {
    const CoverageReport p = expr_soundness_fuzz(20000, 5);
    const CoverageReport s = expr_soundness_fuzz_serial(20000, 5);
    CHECK(p.misses == 0);
    CHECK(s.misses == 0);
    CHECK(p.trials == s.trials);
}

TEST_CASE("uniformity kernel: parallel == serial, within band") {
    const CoverageReport p = permutation_uniformity(24000);
    const CoverageReport s = permutation_uniformity_serial(24000);
    CHECK(p.misses == s.misses);
    CHECK(p.pass);
}

TEST_CASE("report serializes to json") {
    const CoverageReport r = phos_check(100, 1);
    const std::string j = r.to_json();
    CHECK(j.find("\"mode\":\"phos\"") != std::string::npos);
    CHECK(j.find("\"pass\":true") != std::string::npos);
}
