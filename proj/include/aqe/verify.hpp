#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace aqe {

// Machine-readable verdict for one verification suite.
struct CoverageReport {
    std::string mode;
    uint64_t trials = 0;
    uint64_t misses = 0;
    double miss_rate = 0.0;
    double delta = 0.0;  // allowed miss rate (0 for zero-tolerance modes)
    bool pass = false;
    std::string detail;

    std::string to_json() const;
};

// Each kernel exists twice: an OpenMP-parallel version used by the CLI and
// acceptance suite, and a deliberately naive serial reference. Both are
// exact-counting and must agree bit-for-bit; tests and the benchmark tool
// compare them.

// Exhaustive interval coverage over every C(N,m) sample of each small dataset,
// for every bounder in {hs, ebs, dkw, hs+rt, ebs+rt} and delta in deltas.
struct ExhaustiveParams {
    std::vector<std::vector<double>> datasets;  // default: built-in suite of 6
    std::vector<double> deltas{0.1, 0.3};
};
CoverageReport exhaustive_coverage(const ExhaustiveParams& params);
CoverageReport exhaustive_coverage_serial(const ExhaustiveParams& params);

// Monte-Carlo optional stopping: seeded controller runs on a known-mean view;
// a trial fails if any round's interval misses the truth.
struct MonteCarloParams {
    uint64_t trials = 1000;
    uint64_t view_rows = 100000;
    uint64_t block = 40000;
    double delta = 0.1;
    double stop_eps = 0.05;  // absolute-accuracy stop
    uint64_t seed = 20240501;
};
CoverageReport montecarlo_stopping(const MonteCarloParams& params);
CoverageReport montecarlo_stopping_serial(const MonteCarloParams& params);

// Phantom-outlier elimination: rt lower bounds must be bit-identical as the
// catalog b sweeps upward (and rt upper bounds as a sweeps downward).
CoverageReport phos_check(uint64_t states, uint64_t seed);
CoverageReport phos_check_serial(uint64_t states, uint64_t seed);

// Dataset-size and delta monotonicity plus range containment, for all
// bounders with and without trimming.
CoverageReport monotonicity_check(uint64_t cases, uint64_t seed);
CoverageReport monotonicity_check_serial(uint64_t cases, uint64_t seed);

// Randomized soundness fuzz for derived expression ranges.
CoverageReport expr_soundness_fuzz(uint64_t cases, uint64_t seed);
CoverageReport expr_soundness_fuzz_serial(uint64_t cases, uint64_t seed);

// Shuffle uniformity: all 24 permutations of a 4-row table over many seeds,
// each count within 5 sigma of the expected frequency.
CoverageReport permutation_uniformity(uint64_t seeds);
CoverageReport permutation_uniformity_serial(uint64_t seeds);

// Block-skipping comparison on a crafted sparse-group workload: activesync
// must fetch at most half of scan's blocks and activepeek must consume a
// subset of activesync's set with identical results.
struct StrategyCompareParams {
    uint64_t rows = 2000000;
    uint32_t block_size = 100;
    uint64_t seed = 7;
};
CoverageReport strategy_compare(const StrategyCompareParams& params);

// Built-in exhaustive-coverage dataset suite (N <= 10; includes single large
// outlier and duplicate extremes).
std::vector<std::vector<double>> coverage_dataset_suite();

}  // namespace aqe
