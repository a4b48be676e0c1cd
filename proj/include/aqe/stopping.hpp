#pragma once
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aqe/ci.hpp"

namespace aqe {

// Error probability spent at round k: (6/pi^2) * delta / k^2, so the decayed
// shares over all rounds sum to exactly delta.
double round_delta(double delta_total, uint64_t k);

struct RoundSchedule {
    double delta_total;
    uint64_t round_size;  // rows per round; one storage block
};

// Intersection of the per-round intervals: the true mean stays inside every
// round's interval with probability >= 1 - delta, hence inside the running
// intersection too.
struct RunningInterval {
    double best_lower;
    double best_upper;

    static RunningInterval vacuous(double lo, double hi) { return {lo, hi}; }
    void fold(const ConfidenceInterval& ci) {
        best_lower = std::max(best_lower, ci.lower);
        best_upper = std::min(best_upper, ci.upper);
    }
    ConfidenceInterval as_ci(double delta) const { return {best_lower, best_upper, delta}; }
};

enum class StopKind { samples_taken, absolute, relative, threshold, topk, ordered };
enum class TopDirection { smallest, largest };

struct StoppingCondition {
    StopKind kind = StopKind::relative;
    double value = 0.0;       // m for taken, eps for abs/rel, v for threshold
    uint64_t k = 0;           // top-k
    TopDirection direction = TopDirection::smallest;

    // Serialized forms: "taken:M", "abs:E", "rel:E", "thresh:V",
    // "topk:K:min|max", "ordered".
    static StoppingCondition parse(const std::string& text);
    std::string to_string() const;

    static StoppingCondition taken(uint64_t m);
    static StoppingCondition absolute(double eps);
    static StoppingCondition relative(double eps);
    static StoppingCondition threshold(double v);
    static StoppingCondition topk(uint64_t k, TopDirection dir);
    static StoppingCondition ordered();
};

// --- Condition evaluators (pure) -------------------------------------------

bool eval_absolute(const ConfidenceInterval& ci, double eps);

// Width small relative to the magnitudes the interval allows; intervals that
// straddle zero never qualify.
bool eval_relative(const ConfidenceInterval& ci, double eps);

// True when the interval certifies a side of v (closed interval: touching the
// threshold does not count).
bool eval_threshold(const ConfidenceInterval& ci, double v);

// True when some K groups' intervals all sit strictly on the requested side of
// every remaining group's interval.
bool eval_topk(const std::map<std::string, ConfidenceInterval>& group_cis, uint64_t k,
               TopDirection direction);

// True when all intervals are pairwise disjoint.
bool eval_ordered(const std::map<std::string, ConfidenceInterval>& group_cis);

// --- Round controller --------------------------------------------------------

// One aggregate view as seen by the controller. The engine (or a test) wires
// the closures; all state mutation happens inside them, serialized by the
// single-threaded round loop.
struct ViewPort {
    int group_code = -1;                 // -1: view not tied to a group
    std::string group_key;               // label used by topk/ordered and results
    double delta_share = 0.0;
    std::optional<double> threshold;     // per-view threshold (e.g. lowered HAVING)
    bool condition_target = true;        // participates in the stopping condition

    std::function<ConfidenceInterval(double delta)> compute;
    std::function<uint64_t()> samples;          // m_v so far
    std::function<double()> exact_value;        // defined once the view is exhausted

    // Controller-owned results:
    RunningInterval running{0.0, 0.0};
    bool finished = false;
    bool forced_exact = false;
    ConfidenceInterval final_ci{0.0, 0.0, 0.0};
};

enum class StopOutcome { condition_met, exhausted_exact };

// Feeds one round's block into the unfinished views and reports whether data
// remains. `unfinished_groups[code] == true` marks groups still needing rows;
// `any_ungrouped_unfinished` forces every block to be read.
using RoundPump = std::function<bool(const std::vector<uint8_t>& unfinished_groups,
                                     bool any_ungrouped_unfinished)>;

struct RunResult {
    StopOutcome outcome;
    uint64_t rounds = 0;
};

using RoundObserver =
    std::function<void(uint64_t round, const std::vector<ViewPort>& views)>;

// Optional-stopping round loop: ingest one block per round, recompute each
// unfinished view at its decayed delta share, fold into the running
// intersection, freeze views whose part of the condition is settled, stop when
// the condition holds over all views or data is exhausted (then: exact values,
// degenerate intervals, forced_exact on views the condition never settled).
//
// samples_taken conditions skip the per-round recomputation entirely and
// price the single final interval at the full delta share.
RunResult run_until_stopped(std::vector<ViewPort>& views, const RoundPump& pump,
                            const RoundSchedule& schedule, const StoppingCondition& condition,
                            int n_group_codes, const RoundObserver& observer = nullptr);

}  // namespace aqe
