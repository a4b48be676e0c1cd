#include "aqe/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "aqe/bounded_queue.hpp"
#include "aqe/estimators.hpp"
#include "aqe/rng.hpp"

namespace aqe {

namespace {

bool passes_filter(const Scramble& s, const std::vector<CompiledAtom>& atoms, uint64_t row) {
    for (const CompiledAtom& a : atoms) {
        if (a.numeric) {
            const double x = s.numeric[a.column][row];
            switch (a.op) {
                case CmpOp::eq: if (!(x == a.number)) return false; break;
                case CmpOp::ne: if (!(x != a.number)) return false; break;
                case CmpOp::lt: if (!(x < a.number)) return false; break;
                case CmpOp::le: if (!(x <= a.number)) return false; break;
                case CmpOp::gt: if (!(x > a.number)) return false; break;
                case CmpOp::ge: if (!(x >= a.number)) return false; break;
            }
        } else {
            const uint32_t c = s.codes[a.column][row];
            if (a.op == CmpOp::eq ? c != a.code : c == a.code) return false;
        }
    }
    return true;
}

struct EngineView {
    int group_code = -1;
    std::string group_key;
    size_t agg_index = 0;
    const PlannedAggregate* agg = nullptr;

    RangeTrimState state;
    uint64_t m_v = 0;
    bool frozen = false;
    uint64_t r_frozen = 0;

    // plan facts
    Bounder bounder;
    double alpha = kDefaultAlpha;
    bool whole = false;
    uint64_t scramble_rows = 0;

    uint64_t r(uint64_t global_rows) const { return frozen ? r_frozen : global_rows; }

    ConfidenceInterval compute(double delta, uint64_t global_rows) const {
        const uint64_t rows = r(global_rows);
        const SelectivityState sel{rows, m_v, scramble_rows};
        switch (agg->fn) {
            case AggFn::count:
                if (whole)
                    return {static_cast<double>(scramble_rows),
                            static_cast<double>(scramble_rows), delta};
                return count_ci(sel, delta);
            case AggFn::avg:
                if (whole) return bounder.interval(state, agg->range, scramble_rows, delta);
                return avg_ci_unknown_size(bounder, state, sel, agg->range, delta, alpha);
            case AggFn::sum: {
                if (whole) {
                    const ConfidenceInterval avg =
                        bounder.interval(state, agg->range, scramble_rows, delta);
                    const double n = static_cast<double>(scramble_rows);
                    return {n * avg.lower, n * avg.upper, delta};
                }
                const ConfidenceInterval count = count_ci(sel, delta / 2.0);
                const ConfidenceInterval avg =
                    avg_ci_unknown_size(bounder, state, sel, agg->range, delta / 2.0, alpha);
                return sum_ci(count, avg);
            }
        }
        throw std::logic_error("compute: bad aggregate");
    }

    double exact_value() const {
        switch (agg->fn) {
            case AggFn::count: return static_cast<double>(m_v);
            case AggFn::sum: return state.total.sum();
            case AggFn::avg:
                return m_v == 0 ? std::nan("") : state.total.mean();
        }
        return std::nan("");
    }
};

// Block needed now? Identical rule for synchronous and lookahead scanning.
bool block_needed(const Scramble& s, const std::optional<size_t>& group_col,
                  const std::vector<uint8_t>& unfinished, bool any_ungrouped, uint64_t block) {
    if (any_ungrouped || !group_col) return true;
    for (uint32_t code = 0; code < unfinished.size(); ++code)
        if (unfinished[code] && s.block_has_code(*group_col, code, block)) return true;
    return false;
}

// Producer state shared with the lookahead thread: the consumer publishes its
// unfinished-group set, the producer samples it every `lookahead` blocks.
struct SharedUnfinished {
    std::mutex mu;
    std::vector<uint8_t> mask;
    bool any_ungrouped = true;
};

struct Ingestor {
    const QueryPlan& plan;
    const Scramble& scramble;
    std::vector<EngineView>& views;
    std::vector<ViewPort>* ports = nullptr;
    uint64_t global_rows = 0;   // fetched + knowably-skipped rows
    uint64_t rows_scanned = 0;  // fetched rows only
    uint64_t rows_in_views = 0;
    std::vector<uint64_t> consumed;
    std::vector<double> rowbuf;
    std::vector<size_t> needed_cols;

    explicit Ingestor(const QueryPlan& p, const Scramble& s, std::vector<EngineView>& v)
        : plan(p), scramble(s), views(v) {
        rowbuf.resize(s.schema.columns.size(), 0.0);
        for (const auto& agg : p.aggregates)
            for (size_t c : agg.columns)
                if (std::find(needed_cols.begin(), needed_cols.end(), c) == needed_cols.end())
                    needed_cols.push_back(c);
    }

    void sync_freezes() {
        for (size_t i = 0; i < views.size(); ++i) {
            if ((*ports)[i].finished && !views[i].frozen) {
                views[i].frozen = true;
                views[i].r_frozen = global_rows;
            }
        }
    }

    void credit_skipped(uint64_t block) { global_rows += scramble.block_rows(block); }

    void consume(uint64_t block) {
        const BlockSpan span = scan_block(scramble, block);
        consumed.push_back(block);
        const size_t n_aggs = plan.aggregates.size();
        for (uint64_t row = span.row_begin; row < span.row_end; ++row) {
            ++rows_scanned;
            ++global_rows;
            if (!passes_filter(scramble, plan.filter, row)) continue;
            const uint64_t gcode =
                plan.group_column ? scramble.codes[*plan.group_column][row] : 0;
            const size_t base = static_cast<size_t>(gcode) * n_aggs;
            for (size_t a = 0; a < n_aggs; ++a) {
                EngineView& v = views[base + a];
                if (v.frozen) continue;
                ++v.m_v;
                ++rows_in_views;
                if (v.agg->fn == AggFn::count) continue;
                const Expr& e = *v.agg->expr;
                if (e.op == ExprOp::column) {
                    v.state.update(scramble.numeric[e.column][row]);
                } else {
                    for (size_t c : needed_cols) rowbuf[c] = scramble.numeric[c][row];
                    v.state.update(eval_expr(e, rowbuf));
                }
            }
        }
    }
};

std::vector<EngineView> make_views(const QueryPlan& plan, const Scramble& scramble) {
    const size_t n_aggs = plan.aggregates.size();
    std::vector<EngineView> views(plan.n_groups * n_aggs);
    for (uint64_t g = 0; g < plan.n_groups; ++g) {
        for (size_t a = 0; a < n_aggs; ++a) {
            EngineView& v = views[g * n_aggs + a];
            v.agg = &plan.aggregates[a];
            v.agg_index = a;
            v.group_code = plan.group_column ? static_cast<int>(g) : -1;
            v.group_key = plan.group_column ? scramble.dicts[*plan.group_column][g] : "";
            v.bounder = plan.options.bounder;
            v.alpha = plan.options.alpha;
            v.whole = plan.covers_whole_scramble;
            v.scramble_rows = scramble.n_rows;
            if (bounder_needs_values(plan.options.bounder.id))
                v.state = RangeTrimState::for_bounder(plan.options.bounder.id);
        }
    }
    return views;
}

std::vector<ViewPort> make_ports(const QueryPlan& plan, std::vector<EngineView>& views,
                                 const Ingestor& ingest) {
    std::vector<ViewPort> ports;
    ports.reserve(views.size());
    for (EngineView& v : views) {
        ViewPort p;
        p.group_code = v.group_code;
        p.group_key = v.group_key;
        p.delta_share = plan.delta_per_view;
        p.condition_target = !plan.having || v.agg_index == plan.having->aggregate_index;
        if (plan.having && v.agg_index == plan.having->aggregate_index)
            p.threshold = plan.having->value;
        EngineView* ev = &v;
        const Ingestor* ing = &ingest;
        p.compute = [ev, ing](double d) { return ev->compute(d, ing->global_rows); };
        p.samples = [ev] { return ev->m_v; };
        p.exact_value = [ev] { return ev->exact_value(); };
        ports.push_back(std::move(p));
    }
    return ports;
}

std::vector<uint64_t> block_order(const Scramble& scramble, uint64_t seed) {
    const uint64_t n = scramble.n_blocks();
    std::vector<uint64_t> order(n);
    if (n == 0) return order;
    Xoshiro256 rng(derive_stream(seed, 7));
    const uint64_t start = rng.below(n);
    for (uint64_t i = 0; i < n; ++i) order[i] = (start + i) % n;
    return order;
}

// pass/fail certification for HAVING output filtering
enum class HavingSide { pass, fail, undecided };

HavingSide having_side(const ConfidenceInterval& ci, CmpOp op, double v) {
    switch (op) {
        case CmpOp::lt:
            if (ci.upper < v) return HavingSide::pass;
            if (ci.lower >= v) return HavingSide::fail;
            return HavingSide::undecided;
        case CmpOp::le:
            if (ci.upper <= v) return HavingSide::pass;
            if (ci.lower > v) return HavingSide::fail;
            return HavingSide::undecided;
        case CmpOp::gt:
            if (ci.lower > v) return HavingSide::pass;
            if (ci.upper <= v) return HavingSide::fail;
            return HavingSide::undecided;
        case CmpOp::ge:
            if (ci.lower >= v) return HavingSide::pass;
            if (ci.upper < v) return HavingSide::fail;
            return HavingSide::undecided;
        default: return HavingSide::undecided;
    }
}

bool exact_compare(double x, CmpOp op, double v) {
    switch (op) {
        case CmpOp::lt: return x < v;
        case CmpOp::le: return x <= v;
        case CmpOp::gt: return x > v;
        case CmpOp::ge: return x >= v;
        case CmpOp::eq: return x == v;
        case CmpOp::ne: return x != v;
    }
    return false;
}

ExecResult execute_exact(const QueryPlan& plan, const Scramble& scramble) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<EngineView> views = make_views(plan, scramble);
    Ingestor ingest(plan, scramble, views);
    std::vector<ViewPort> ports;  // unused by the exact path beyond freezes
    ports.resize(views.size());
    ingest.ports = &ports;
    const std::vector<uint64_t> order = block_order(scramble, plan.options.seed);
    for (uint64_t block : order) ingest.consume(block);

    ExecResult out;
    out.outcome = StopOutcome::condition_met;
    for (size_t i = 0; i < views.size(); ++i) {
        EngineView& v = views[i];
        GroupResult r;
        r.group = v.group_key;
        r.aggregate = v.agg->label;
        r.rows_sampled = v.m_v;
        r.finished = true;
        const double exact = v.exact_value();
        if (std::isfinite(exact)) {
            r.has_estimate = true;
            r.estimate = exact;
            r.ci = {exact, exact, 0.0};
        }
        if (plan.having) {
            const size_t base = i / plan.aggregates.size() * plan.aggregates.size();
            const double tx = views[base + plan.having->aggregate_index].exact_value();
            if (!std::isfinite(tx) ||
                !exact_compare(tx, plan.having->op, plan.having->value))
                continue;
        }
        out.results.push_back(std::move(r));
    }
    out.consumed_blocks = std::move(ingest.consumed);
    out.metrics.blocks_fetched = scramble.blocks_fetched();
    out.metrics.rows_scanned = ingest.rows_scanned;
    out.metrics.rows_in_views = ingest.rows_in_views;
    out.metrics.rounds = order.size();
    out.metrics.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
}

}  // namespace

ExecResult execute(const QueryPlan& plan, const Scramble& scramble) {
    scramble.reset_metrics();
    if (plan.options.strategy == StrategyId::exact) return execute_exact(plan, scramble);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<EngineView> views = make_views(plan, scramble);
    Ingestor ingest(plan, scramble, views);
    std::vector<ViewPort> ports = make_ports(plan, views, ingest);
    ingest.ports = &ports;

    const std::vector<uint64_t> order = block_order(scramble, plan.options.seed);
    size_t pos = 0;  // next order index to consider

    // --- lookahead producer (ActivePeek) ---
    SharedUnfinished shared;
    BoundedQueue<uint64_t> candidates(plan.options.queue_capacity);
    std::thread producer;
    const bool peeking = plan.options.strategy == StrategyId::active_peek;
    if (peeking) {
        shared.mask.assign(plan.group_column ? plan.n_groups : 0, 1);
        producer = std::thread([&] {
            std::vector<uint8_t> mask;
            bool ungrouped = true;
            for (uint64_t i = 0; i < order.size(); ++i) {
                if (i % plan.options.lookahead == 0) {
                    std::lock_guard lock(shared.mu);
                    mask = shared.mask;
                    ungrouped = shared.any_ungrouped;
                }
                if (block_needed(scramble, plan.group_column, mask, ungrouped, order[i]))
                    if (!candidates.push(i)) return;  // consumer shut us down
            }
            candidates.close();
        });
    }

    RoundPump pump = [&](const std::vector<uint8_t>& unfinished, bool any_ungrouped) {
        ingest.sync_freezes();
        if (peeking) {
            {
                std::lock_guard lock(shared.mu);
                shared.mask = unfinished;
                shared.any_ungrouped = any_ungrouped;
            }
            for (;;) {
                const std::optional<uint64_t> cand = candidates.pop();
                if (!cand) {
                    // producer done: everything after the last consumed
                    // position was skippable
                    while (pos < order.size()) ingest.credit_skipped(order[pos++]);
                    return false;
                }
                while (pos < *cand) ingest.credit_skipped(order[pos++]);
                pos = *cand + 1;
                // re-validate against the current unfinished set; stale
                // candidates are ordinary skips
                if (block_needed(scramble, plan.group_column, unfinished, any_ungrouped,
                                 order[*cand])) {
                    ingest.consume(order[*cand]);
                    return true;
                }
                ingest.credit_skipped(order[*cand]);
            }
        }
        while (pos < order.size()) {
            const uint64_t block = order[pos];
            const bool needed =
                plan.options.strategy == StrategyId::scan ||
                block_needed(scramble, plan.group_column, unfinished, any_ungrouped, block);
            ++pos;
            if (!needed) {
                ingest.credit_skipped(block);
                continue;
            }
            ingest.consume(block);
            return true;
        }
        return false;
    };

    const RunResult run =
        run_until_stopped(ports, pump, {plan.options.delta, scramble.block_size}, plan.stop,
                          plan.group_column ? static_cast<int>(plan.n_groups) : 0);

    if (peeking) {
        candidates.close();
        producer.join();
    }

    ExecResult out;
    out.outcome = run.outcome;
    for (size_t i = 0; i < views.size(); ++i) {
        EngineView& v = views[i];
        ViewPort& p = ports[i];
        GroupResult r;
        r.group = v.group_key;
        r.aggregate = v.agg->label;
        r.rows_sampled = v.m_v;
        r.finished = p.finished;
        r.forced_exact = p.forced_exact;
        r.ci = p.final_ci;

        if (p.forced_exact) {
            const double exact = v.exact_value();
            if (std::isfinite(exact)) {
                r.has_estimate = true;
                r.estimate = exact;
            }
        } else {
            switch (v.agg->fn) {
                case AggFn::avg:
                    if (v.m_v > 0) {
                        r.has_estimate = true;
                        r.estimate = v.state.total.mean();
                    }
                    break;
                case AggFn::count:
                    if (v.whole) {
                        r.has_estimate = true;
                        r.estimate = static_cast<double>(scramble.n_rows);
                    } else if (v.r(ingest.global_rows) > 0) {
                        r.has_estimate = true;
                        r.estimate = static_cast<double>(v.m_v) /
                                     static_cast<double>(v.r(ingest.global_rows)) *
                                     static_cast<double>(scramble.n_rows);
                    }
                    break;
                case AggFn::sum:
                    if (v.m_v > 0) {
                        const double count_est =
                            v.whole ? static_cast<double>(scramble.n_rows)
                                    : static_cast<double>(v.m_v) /
                                          static_cast<double>(v.r(ingest.global_rows)) *
                                          static_cast<double>(scramble.n_rows);
                        r.has_estimate = true;
                        r.estimate = count_est * v.state.total.mean();
                    }
                    break;
            }
        }
        if (r.has_estimate && r.ci.lower <= r.ci.upper)
            r.estimate = std::min(std::max(r.estimate, r.ci.lower), r.ci.upper);

        if (plan.having) {
            const size_t base = i / plan.aggregates.size() * plan.aggregates.size();
            const ViewPort& target = ports[base + plan.having->aggregate_index];
            const EngineView& tview = views[base + plan.having->aggregate_index];
            bool pass;
            if (target.forced_exact) {
                const double tx = tview.exact_value();
                pass = std::isfinite(tx) && exact_compare(tx, plan.having->op, plan.having->value);
            } else {
                pass = having_side(target.final_ci, plan.having->op, plan.having->value) ==
                       HavingSide::pass;
            }
            if (!pass) continue;
        }
        out.results.push_back(std::move(r));
    }
    out.consumed_blocks = std::move(ingest.consumed);
    out.metrics.blocks_fetched = scramble.blocks_fetched();
    out.metrics.rows_scanned = ingest.rows_scanned;
    out.metrics.rows_in_views = ingest.rows_in_views;
    out.metrics.rounds = run.rounds;
    out.metrics.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
}

std::string to_json_lines(const ExecResult& result) {
    std::string out;
    for (const GroupResult& r : result.results) {
        nlohmann::json j;
        j["group"] = r.group;
        j["aggregate"] = r.aggregate;
        if (r.has_estimate) j["estimate"] = r.estimate;
        else j["estimate"] = nullptr;
        j["lower"] = r.ci.lower;
        j["upper"] = r.ci.upper;
        j["delta"] = r.ci.delta;
        j["rows_sampled"] = r.rows_sampled;
        j["forced_exact"] = r.forced_exact;
        out += j.dump();
        out += "\n";
    }
    nlohmann::json m;
    m["blocks_fetched"] = result.metrics.blocks_fetched;
    m["rows_scanned"] = result.metrics.rows_scanned;
    m["rows_in_views"] = result.metrics.rows_in_views;
    m["rounds"] = result.metrics.rounds;
    m["wall_ms"] = result.metrics.wall_ms;
    out += m.dump();
    out += "\n";
    return out;
}

}  // namespace aqe
