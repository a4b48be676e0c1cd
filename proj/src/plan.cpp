#include "aqe/plan.hpp"

#include <stdexcept>

namespace aqe {

StrategyId parse_strategy(const std::string& text) {
    if (text == "scan") return StrategyId::scan;
    if (text == "activesync") return StrategyId::active_sync;
    if (text == "activepeek") return StrategyId::active_peek;
    if (text == "exact") return StrategyId::exact;
    throw std::invalid_argument("unknown strategy: " + text);
}

std::string to_string(StrategyId id) {
    switch (id) {
        case StrategyId::scan: return "scan";
        case StrategyId::active_sync: return "activesync";
        case StrategyId::active_peek: return "activepeek";
        case StrategyId::exact: return "exact";
    }
    return "?";
}

namespace {

// Rewrite query-local column indices into scramble column indices.
ExprPtr rebase(const Expr& e, const std::vector<size_t>& mapping) {
    switch (e.op) {
        case ExprOp::constant: return Expr::make_const(e.value);
        case ExprOp::column: return Expr::make_column(mapping.at(e.column));
        case ExprOp::pow: return Expr::make_pow(rebase(*e.lhs, mapping), e.exponent);
        case ExprOp::neg: return Expr::make_neg(rebase(*e.lhs, mapping));
        default:
            return Expr::make_binary(e.op, rebase(*e.lhs, mapping), rebase(*e.rhs, mapping));
    }
}

}  // namespace

QueryPlan plan(const Query& query, const Scramble& scramble, const ExecOptions& options) {
    require_delta(options.delta);
    QueryPlan out;
    out.options = options;
    out.having = query.having;

    // resolve expression columns once; every aggregate shares the mapping
    std::vector<size_t> mapping;
    std::vector<RangeBounds> query_boxes;
    for (const std::string& name : query.expr_columns) {
        const size_t idx = scramble.schema.index_of(name);
        if (scramble.schema.columns[idx].type != ColumnType::numeric)
            throw std::invalid_argument("aggregate expressions need numeric columns: " + name);
        mapping.push_back(idx);
        query_boxes.emplace_back(scramble.ranges[idx].min, scramble.ranges[idx].max);
    }

    for (const Aggregate& agg : query.aggregates) {
        PlannedAggregate planned;
        planned.fn = agg.fn;
        planned.label = agg.label;
        if (agg.fn != AggFn::count) {
            const DerivedRange derived = derive_range(*agg.expr, query_boxes);
            planned.range = RangeBounds(derived.lo, derived.hi);
            planned.expr = rebase(*agg.expr, mapping);
            for (size_t c : expr_columns(*planned.expr)) planned.columns.push_back(c);
        }
        out.aggregates.push_back(std::move(planned));
    }

    if (query.group_by) {
        const size_t idx = scramble.schema.index_of(*query.group_by);
        if (scramble.schema.columns[idx].type != ColumnType::categorical)
            throw std::invalid_argument("GROUP BY needs a categorical column: " +
                                        *query.group_by);
        if (scramble.dicts[idx].empty())
            throw std::invalid_argument("GROUP BY column has an empty dictionary");
        out.group_column = idx;
        out.n_groups = scramble.dicts[idx].size();
    }

    // bare select columns must be the grouping column
    for (const std::string& name : query.select_columns)
        if (!query.group_by || name != *query.group_by)
            throw std::invalid_argument("selected column must be the GROUP BY column: " + name);

    for (const FilterAtom& atom : query.filter) {
        const size_t idx = scramble.schema.index_of(atom.column);
        CompiledAtom compiled;
        compiled.column = idx;
        compiled.op = atom.op;
        if (scramble.schema.columns[idx].type == ColumnType::numeric) {
            if (!atom.literal_is_number)
                throw std::invalid_argument("numeric filter needs a numeric literal: " +
                                            atom.column);
            compiled.numeric = true;
            compiled.number = atom.number;
        } else {
            if (atom.op != CmpOp::eq && atom.op != CmpOp::ne)
                throw std::invalid_argument("categorical filters support = and != only: " +
                                            atom.column);
            compiled.numeric = false;
            const std::string literal =
                atom.literal_is_number ? std::to_string(atom.number) : atom.text;
            compiled.code = scramble.code_of(idx, literal);
        }
        out.filter.push_back(compiled);
    }

    out.covers_whole_scramble = query.filter.empty() && !query.group_by;
    out.n_views = out.n_groups * out.aggregates.size();
    out.delta_per_view = budget(options.delta, out.n_views);

    if (options.stop) {
        out.stop = *options.stop;
    } else if (query.having) {
        out.stop = StoppingCondition::threshold(query.having->value);
    } else {
        out.stop = StoppingCondition::relative(0.1);
    }
    if ((out.stop.kind == StopKind::topk || out.stop.kind == StopKind::ordered)) {
        if (!query.group_by)
            throw std::invalid_argument("topk/ordered stopping needs a GROUP BY");
        if (out.aggregates.size() != 1)
            throw std::invalid_argument("topk/ordered stopping needs exactly one aggregate");
        if (out.stop.kind == StopKind::topk && out.stop.k > out.n_groups)
            throw std::invalid_argument("topk K exceeds the number of groups");
    }
    return out;
}

}  // namespace aqe
