#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aqe/plan.hpp"
#include "aqe/scramble.hpp"
#include "aqe/stopping.hpp"

namespace aqe {

struct GroupResult {
    std::string group;       // dictionary value; empty without GROUP BY
    std::string aggregate;   // label, e.g. "AVG(DepDelay)"
    bool has_estimate = false;
    double estimate = 0.0;
    ConfidenceInterval ci{0.0, 0.0, 0.0};
    uint64_t rows_sampled = 0;
    bool finished = false;
    bool forced_exact = false;
};

struct Metrics {
    uint64_t blocks_fetched = 0;
    uint64_t rows_scanned = 0;   // rows of fetched blocks
    uint64_t rows_in_views = 0;  // total rows that entered some view state
    uint64_t rounds = 0;
    double wall_ms = 0.0;
};

struct ExecResult {
    std::vector<GroupResult> results;
    Metrics metrics;
    StopOutcome outcome = StopOutcome::condition_met;
    // consumed block indices in consumption order (scan/activesync/activepeek)
    std::vector<uint64_t> consumed_blocks;
};

// Runs the plan against a scramble. Sampling strategies consume blocks from a
// seed-derived random start offset; HAVING filtering is applied to the output
// (only groups certified, or exactly known, to pass are returned).
ExecResult execute(const QueryPlan& plan, const Scramble& scramble);

// JSON-lines rendering per the external interface: one record per result row,
// then one metrics record.
std::string to_json_lines(const ExecResult& result);

}  // namespace aqe
