// Compares the OpenMP verification kernels against their serial references:
// same counts required, wall time reported.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "aqe/verify.hpp"

using aqe::CoverageReport;

namespace {

double time_ms(const std::function<CoverageReport()>& fn, CoverageReport& out) {
    const auto t0 = std::chrono::steady_clock::now();
    out = fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

int run_pair(const char* name, const std::function<CoverageReport()>& parallel,
             const std::function<CoverageReport()>& serial) {
    CoverageReport rp, rs;
    const double tp = time_ms(parallel, rp);
    const double ts = time_ms(serial, rs);
    const bool agree = rp.trials == rs.trials && rp.misses == rs.misses;
    std::printf("%-16s serial %9.1f ms   omp %9.1f ms   speedup %5.2fx   %s\n", name, ts, tp,
                ts / tp, agree ? "counts agree" : "COUNTS DIFFER");
    return agree && rp.pass && rs.pass ? 0 : 1;
}

}  // namespace

int main() {
    int rc = 0;
    rc |= run_pair(
        "exhaustive", [] { return aqe::exhaustive_coverage({}); },
        [] { return aqe::exhaustive_coverage_serial({}); });
    aqe::MonteCarloParams mc;
    mc.trials = 200;
    rc |= run_pair(
        "montecarlo", [&] { return aqe::montecarlo_stopping(mc); },
        [&] { return aqe::montecarlo_stopping_serial(mc); });
    rc |= run_pair(
        "phos", [] { return aqe::phos_check(20000, 1); },
        [] { return aqe::phos_check_serial(20000, 1); });
    rc |= run_pair(
        "monotonicity", [] { return aqe::monotonicity_check(20000, 2); },
        [] { return aqe::monotonicity_check_serial(20000, 2); });
    rc |= run_pair(
        "expr-fuzz", [] { return aqe::expr_soundness_fuzz(100000, 3); },
        [] { return aqe::expr_soundness_fuzz_serial(100000, 3); });
    rc |= run_pair(
        "uniformity", [] { return aqe::permutation_uniformity(24000); },
        [] { return aqe::permutation_uniformity_serial(24000); });
    return rc;
}
