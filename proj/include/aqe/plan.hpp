#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aqe/estimators.hpp"
#include "aqe/expr.hpp"
#include "aqe/query.hpp"
#include "aqe/rangetrim.hpp"
#include "aqe/scramble.hpp"
#include "aqe/stopping.hpp"

namespace aqe {

enum class StrategyId { scan, active_sync, active_peek, exact };

StrategyId parse_strategy(const std::string& text);
std::string to_string(StrategyId id);

struct ExecOptions {
    double delta = 1e-15;
    Bounder bounder{BounderId::bernstein, true};
    StrategyId strategy = StrategyId::scan;
    std::optional<StoppingCondition> stop;  // default: rel:0.1, or HAVING threshold
    uint64_t seed = 0;
    double alpha = kDefaultAlpha;           // unknown-size split weight
    uint32_t queue_capacity = 64;           // lookahead candidate queue
    uint32_t lookahead = 256;               // producer snapshot refresh, in blocks
};

struct CompiledAtom {
    size_t column;
    CmpOp op;
    bool numeric;
    double number = 0.0;   // numeric comparison
    uint32_t code = 0;     // categorical comparison
};

struct PlannedAggregate {
    AggFn fn;
    ExprPtr expr;                  // rebased onto scramble column indices; null for COUNT
    std::vector<size_t> columns;   // scramble columns the expression reads
    RangeBounds range{0.0, 1.0};   // derived bounds for the expression image
    std::string label;
};

struct QueryPlan {
    std::vector<PlannedAggregate> aggregates;
    std::vector<CompiledAtom> filter;
    std::optional<size_t> group_column;   // scramble column index
    uint64_t n_groups = 1;                // dictionary size, or 1 without grouping
    uint64_t n_views = 0;
    double delta_per_view = 0.0;
    std::optional<Having> having;
    bool covers_whole_scramble = false;   // no filter and no grouping: N is known
    StoppingCondition stop;
    ExecOptions options;
};

// Resolves names against the scramble, derives expression ranges from the
// catalog, splits the delta budget over (group x aggregate) views, and lowers
// HAVING onto per-view thresholds.
QueryPlan plan(const Query& query, const Scramble& scramble, const ExecOptions& options);

}  // namespace aqe
