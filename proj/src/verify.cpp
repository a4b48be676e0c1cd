#include "aqe/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "aqe/engine.hpp"
#include "aqe/estimators.hpp"
#include "aqe/expr.hpp"
#include "aqe/gen.hpp"
#include "aqe/rangetrim.hpp"
#include "aqe/rng.hpp"
#include "aqe/stopping.hpp"

namespace aqe {

std::string CoverageReport::to_json() const {
    nlohmann::json j;
    j["mode"] = mode;
    j["trials"] = trials;
    j["misses"] = misses;
    j["miss_rate"] = miss_rate;
    j["delta"] = delta;
    j["pass"] = pass;
    if (!detail.empty()) j["detail"] = detail;
    return j.dump();
}

namespace {

CoverageReport make_report(std::string mode, uint64_t trials, uint64_t misses, double delta,
                           std::string detail = "") {
    CoverageReport r;
    r.mode = std::move(mode);
    r.trials = trials;
    r.misses = misses;
    r.miss_rate = trials == 0 ? 0.0 : static_cast<double>(misses) / static_cast<double>(trials);
    r.delta = delta;
    r.pass = r.miss_rate <= delta;
    r.detail = std::move(detail);
    return r;
}

const Bounder kCoverageBounders[] = {
    {BounderId::hoeffding, false}, {BounderId::bernstein, false}, {BounderId::dkw, false},
    {BounderId::hoeffding, true},  {BounderId::bernstein, true},
};

// --- exhaustive coverage -------------------------------------------------------

struct ExhaustiveTask {
    const std::vector<double>* dataset;
    size_t m;
    double delta;
    Bounder bounder;
};

std::vector<ExhaustiveTask> exhaustive_tasks(const ExhaustiveParams& params,
                                             const std::vector<std::vector<double>>& fallback) {
    const auto& sets = params.datasets.empty() ? fallback : params.datasets;
    std::vector<ExhaustiveTask> tasks;
    for (const auto& ds : sets)
        for (size_t m = 2; m <= ds.size() - 1; ++m)
            for (double delta : params.deltas)
                for (const Bounder& b : kCoverageBounders)
                    tasks.push_back({&ds, m, delta, b});
    return tasks;
}

// misses and sample count for one (dataset, m, delta, bounder) cell
std::pair<uint64_t, uint64_t> coverage_cell(const ExhaustiveTask& task) {
    const std::vector<double>& data = *task.dataset;
    const size_t n = data.size();
    double lo = data[0], hi = data[0], total = 0;
    for (double x : data) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        total += x;
    }
    const double truth = total / static_cast<double>(n);
    const RangeBounds range(lo, hi);

    uint64_t samples = 0, misses = 0;
    std::vector<size_t> idx(task.m);
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
        RangeTrimState state = RangeTrimState::for_bounder(task.bounder.id);
        for (size_t i : idx) state.update(data[i]);
        const ConfidenceInterval ci =
            task.bounder.interval(state, range, n, task.delta);
        ++samples;
        if (truth < ci.lower || truth > ci.upper) ++misses;

        // next lexicographic subset
        size_t i = task.m;
        bool done = true;
        while (i > 0) {
            --i;
            if (idx[i] != i + n - task.m) {
                done = false;
                break;
            }
        }
        if (done) break;
        ++idx[i];
        for (size_t j = i + 1; j < task.m; ++j) idx[j] = idx[j - 1] + 1;
    }
    return {samples, misses};
}

CoverageReport exhaustive_impl(const ExhaustiveParams& params, bool parallel) {
    const auto fallback = coverage_dataset_suite();
    const std::vector<ExhaustiveTask> tasks = exhaustive_tasks(params, fallback);
    uint64_t samples = 0, misses = 0, failed_cells = 0;
    const int64_t n_tasks = static_cast<int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic) reduction(+ : samples, misses, failed_cells) \
    if (parallel)
    for (int64_t t = 0; t < n_tasks; ++t) {
        const auto [s, miss] = coverage_cell(tasks[t]);
        samples += s;
        misses += miss;
        // the guarantee is per-cell: each (dataset, m, delta, bounder) must
        // miss at most a delta fraction of its samples
        if (static_cast<double>(miss) > tasks[t].delta * static_cast<double>(s))
            failed_cells += 1;
    }
    CoverageReport r = make_report("exhaustive", samples, misses, 1.0);
    r.pass = failed_cells == 0;
    r.delta = 0.0;
    std::ostringstream d;
    d << tasks.size() << " cells, " << failed_cells << " over budget";
    r.detail = d.str();
    return r;
}

// --- monte carlo stopping ------------------------------------------------------

// one seeded optional-stopping run; true if any round's interval missed
bool mc_trial(const MonteCarloParams& params, uint64_t trial) {
    Xoshiro256 rng(derive_stream(params.seed, trial));
    std::vector<double> data(params.view_rows);
    for (auto& x : data) x = rng.unit();
    shuffle_in_place(data, rng);
    double truth = 0;
    for (double x : data) truth += x;
    truth /= static_cast<double>(data.size());

    RangeTrimState state;
    uint64_t cursor = 0;
    const RangeBounds range(0, 1);
    const Bounder bounder{BounderId::hoeffding, false};

    std::vector<ViewPort> views(1);
    ViewPort& p = views[0];
    p.delta_share = params.delta;
    p.compute = [&](double d) { return bounder.interval(state, range, data.size(), d); };
    p.samples = [&] { return state.m(); };
    p.exact_value = [&] { return state.total.mean(); };

    bool missed = false;
    run_until_stopped(
        views,
        [&](const std::vector<uint8_t>&, bool) {
            if (cursor >= data.size()) return false;
            const uint64_t end = std::min<uint64_t>(cursor + params.block, data.size());
            for (; cursor < end; ++cursor) state.update(data[cursor]);
            return true;
        },
        {params.delta, params.block}, StoppingCondition::absolute(params.stop_eps), 0,
        [&](uint64_t, const std::vector<ViewPort>& vs) {
            if (truth < vs[0].running.best_lower || truth > vs[0].running.best_upper)
                missed = true;
        });
    return missed;
}

CoverageReport montecarlo_impl(const MonteCarloParams& params, bool parallel) {
    uint64_t misses = 0;
    const int64_t trials = static_cast<int64_t>(params.trials);
#pragma omp parallel for schedule(dynamic) reduction(+ : misses) if (parallel)
    for (int64_t t = 0; t < trials; ++t)
        if (mc_trial(params, static_cast<uint64_t>(t))) misses += 1;
    return make_report("montecarlo", params.trials, misses, params.delta);
}

// --- phantom outlier sensitivity ------------------------------------------------

bool phos_trial(uint64_t trial, uint64_t seed) {
    Xoshiro256 rng(derive_stream(seed, trial));
    const BounderId inner = static_cast<BounderId>(trial % 3);
    RangeTrimState state = RangeTrimState::for_bounder(inner);
    const uint64_t m = 2 + rng.below(40);
    for (uint64_t i = 0; i < m; ++i) state.update(rng.uniform(1.0, 100.0));
    const uint64_t n = m + rng.below(1000);
    const double delta = 0.01 + rng.uniform(0.0, 0.4);

    const double max_seen = state.total.max_seen();
    const double min_seen = state.total.min_seen();
    // five decades of catalog inflation on each side, plus a fixed far point
    const double b_sweep[6] = {max_seen,       10.0 * max_seen, 1e2 * max_seen,
                               1e3 * max_seen, 1e4 * max_seen,  1e6};
    const double a_sweep[6] = {min_seen,       min_seen / 10.0, min_seen / 1e2,
                               min_seen / 1e3, min_seen / 1e4,  -1e6};

    const double lo0 = rt_lower(state, RangeBounds(0.0, b_sweep[0]), n, delta, inner);
    const double hi0 = rt_upper(state, RangeBounds(a_sweep[0], 1e7), n, delta, inner);
    for (int i = 1; i < 6; ++i) {
        const double lo = rt_lower(state, RangeBounds(0.0, b_sweep[i]), n, delta, inner);
        const double hi = rt_upper(state, RangeBounds(a_sweep[i], 1e7), n, delta, inner);
        if (std::memcmp(&lo, &lo0, sizeof lo) != 0) return true;
        if (std::memcmp(&hi, &hi0, sizeof hi) != 0) return true;
    }
    return false;
}

CoverageReport phos_impl(uint64_t states, uint64_t seed, bool parallel) {
    uint64_t violations = 0;
    const int64_t n = static_cast<int64_t>(states);
#pragma omp parallel for schedule(static) reduction(+ : violations) if (parallel)
    for (int64_t t = 0; t < n; ++t)
        if (phos_trial(static_cast<uint64_t>(t), seed)) violations += 1;
    return make_report("phos", states, violations, 0.0);
}

// --- monotonicity ---------------------------------------------------------------

bool monotonicity_trial(uint64_t trial, uint64_t seed) {
    Xoshiro256 rng(derive_stream(seed, trial));
    RangeTrimState state = RangeTrimState::for_bounder(BounderId::dkw);
    const uint64_t m = 2 + rng.below(40);
    for (uint64_t i = 0; i < m; ++i) state.update(rng.uniform(0.0, 10.0));
    const RangeBounds range(0, 10);
    const uint64_t n1 = m + rng.below(200);
    const uint64_t n2 = n1 + 1 + rng.below(2000);
    const double d1 = 0.01 + rng.uniform(0.0, 0.4);
    const double d2 = d1 / (2.0 + rng.uniform(0.0, 8.0));
    for (const Bounder& b : kCoverageBounders) {
        if (b.lower(state, range, n2, d1) > b.lower(state, range, n1, d1) + 1e-12) return true;
        if (b.upper(state, range, n2, d1) < b.upper(state, range, n1, d1) - 1e-12) return true;
        if (b.lower(state, range, n1, d2) > b.lower(state, range, n1, d1) + 1e-12) return true;
        if (b.upper(state, range, n1, d2) < b.upper(state, range, n1, d1) - 1e-12) return true;
        const ConfidenceInterval ci = b.interval(state, range, n1, d1);
        if (ci.lower < range.a || ci.upper > range.b || ci.lower > ci.upper) return true;
    }
    return false;
}

CoverageReport monotonicity_impl(uint64_t cases, uint64_t seed, bool parallel) {
    uint64_t violations = 0;
    const int64_t n = static_cast<int64_t>(cases);
#pragma omp parallel for schedule(static) reduction(+ : violations) if (parallel)
    for (int64_t t = 0; t < n; ++t)
        if (monotonicity_trial(static_cast<uint64_t>(t), seed)) violations += 1;
    return make_report("monotonicity", cases, violations, 0.0);
}

// --- expression range soundness fuzz -------------------------------------------

ExprPtr fuzz_expr(Xoshiro256& rng, int depth, size_t n_cols) {
    const uint64_t pick = rng.below(depth <= 0 ? 2 : 8);
    switch (pick) {
        case 0: return Expr::make_const(rng.uniform(-4.0, 4.0));
        case 1: return Expr::make_column(rng.below(n_cols));
        case 2:
        case 3:
        case 4: {
            const ExprOp op = pick == 2 ? ExprOp::add : pick == 3 ? ExprOp::sub : ExprOp::mul;
            return Expr::make_binary(op, fuzz_expr(rng, depth - 1, n_cols),
                                     fuzz_expr(rng, depth - 1, n_cols));
        }
        case 5:
            return Expr::make_binary(ExprOp::div, fuzz_expr(rng, depth - 1, n_cols),
                                     fuzz_expr(rng, depth - 1, n_cols));
        case 6:
            return Expr::make_pow(fuzz_expr(rng, depth - 1, n_cols),
                                  static_cast<uint32_t>(rng.below(4)));
        default: return Expr::make_neg(fuzz_expr(rng, depth - 1, n_cols));
    }
}

bool expr_trial(uint64_t trial, uint64_t seed) {
    Xoshiro256 rng(derive_stream(seed, trial));
    const size_t n_cols = 1 + rng.below(3);
    const ExprPtr e = fuzz_expr(rng, 3, n_cols);
    std::vector<RangeBounds> boxes;
    for (size_t i = 0; i < n_cols; ++i) {
        const double lo = rng.uniform(-5, 5);
        boxes.emplace_back(lo, lo + rng.uniform(0.0, 5.0));
    }
    DerivedRange r{0, 0, RangeMethod::monotone};
    try {
        r = derive_range(*e, boxes);
    } catch (const UnboundedRangeError&) {
        return false;  // rejected, nothing to verify
    }
    const int grid = 5;
    std::vector<double> row(n_cols);
    std::vector<int> digit(n_cols, 0);
    for (;;) {
        for (size_t c = 0; c < n_cols; ++c)
            row[c] = boxes[c].a + (boxes[c].b - boxes[c].a) * digit[c] / (grid - 1);
        const double v = eval_expr(*e, row);
        if (std::isfinite(v)) {
            if (v < r.lo - 1e-7 * (1 + std::abs(r.lo))) return true;
            if (v > r.hi + 1e-7 * (1 + std::abs(r.hi))) return true;
        }
        size_t c = 0;
        while (c < n_cols && ++digit[c] == grid) digit[c++] = 0;
        if (c == n_cols) break;
    }
    return false;
}

CoverageReport expr_impl(uint64_t cases, uint64_t seed, bool parallel) {
    uint64_t violations = 0;
    const int64_t n = static_cast<int64_t>(cases);
#pragma omp parallel for schedule(dynamic, 256) reduction(+ : violations) if (parallel)
    for (int64_t t = 0; t < n; ++t)
        if (expr_trial(static_cast<uint64_t>(t), seed)) violations += 1;
    return make_report("expr-soundness", cases, violations, 0.0);
}

// --- permutation uniformity -----------------------------------------------------

// permutation of {0,1,2,3} -> index in 0..23 via the factorial number system
size_t lehmer_index(const std::vector<uint64_t>& perm) {
    size_t index = 0;
    const size_t factorial[4] = {6, 2, 1, 1};
    for (size_t i = 0; i < 3; ++i) {
        size_t smaller = 0;
        for (size_t j = i + 1; j < 4; ++j)
            if (perm[j] < perm[i]) ++smaller;
        index += smaller * factorial[i];
    }
    return index;
}

CoverageReport uniformity_impl(uint64_t seeds, bool parallel) {
    uint64_t counts[24] = {0};
    const int64_t n = static_cast<int64_t>(seeds);
#pragma omp parallel if (parallel)
    {
        uint64_t local[24] = {0};
#pragma omp for schedule(static)
        for (int64_t s = 0; s < n; ++s) {
            Xoshiro256 rng(derive_stream(static_cast<uint64_t>(s), 0));
            const std::vector<uint64_t> perm = random_permutation(4, rng);
            ++local[lehmer_index(perm)];
        }
#pragma omp critical
        for (int i = 0; i < 24; ++i) counts[i] += local[i];
    }
    const double expect = static_cast<double>(seeds) / 24.0;
    const double sigma = std::sqrt(static_cast<double>(seeds) * (1.0 / 24.0) * (23.0 / 24.0));
    uint64_t out_of_band = 0;
    double worst = 0;
    for (int i = 0; i < 24; ++i) {
        const double dev = std::abs(static_cast<double>(counts[i]) - expect);
        worst = std::max(worst, dev / sigma);
        if (dev > 5.0 * sigma) ++out_of_band;
    }
    CoverageReport r = make_report("uniformity", seeds, out_of_band, 0.0);
    std::ostringstream d;
    d << "worst cell at " << worst << " sigma";
    r.detail = d.str();
    return r;
}

}  // namespace

std::vector<std::vector<double>> coverage_dataset_suite() {
    return {
        {1, 2, 3, 4, 5, 6, 7, 8},
        {10, 11, 12, 13, 14, 15, 16, 90},    // single large outlier
        {1, 1, 2, 3, 7, 7},                  // duplicate extremes
        {2.5, 2.5, 2.5, 2.5, 2.5, 2.5},      // constant column
        {-4, -2, -1, 0, 1, 2, 4, 8},
        {0, 0.25, 0.5, 0.75, 1.0},
    };
}

CoverageReport exhaustive_coverage(const ExhaustiveParams& p) { return exhaustive_impl(p, true); }
CoverageReport exhaustive_coverage_serial(const ExhaustiveParams& p) {
    return exhaustive_impl(p, false);
}
CoverageReport montecarlo_stopping(const MonteCarloParams& p) { return montecarlo_impl(p, true); }
CoverageReport montecarlo_stopping_serial(const MonteCarloParams& p) {
    return montecarlo_impl(p, false);
}
CoverageReport phos_check(uint64_t states, uint64_t seed) { return phos_impl(states, seed, true); }
CoverageReport phos_check_serial(uint64_t states, uint64_t seed) {
    return phos_impl(states, seed, false);
}
CoverageReport monotonicity_check(uint64_t cases, uint64_t seed) {
    return monotonicity_impl(cases, seed, true);
}
CoverageReport monotonicity_check_serial(uint64_t cases, uint64_t seed) {
    return monotonicity_impl(cases, seed, false);
}
CoverageReport expr_soundness_fuzz(uint64_t cases, uint64_t seed) {
    return expr_impl(cases, seed, true);
}
CoverageReport expr_soundness_fuzz_serial(uint64_t cases, uint64_t seed) {
    return expr_impl(cases, seed, false);
}
CoverageReport permutation_uniformity(uint64_t seeds) { return uniformity_impl(seeds, true); }
CoverageReport permutation_uniformity_serial(uint64_t seeds) {
    return uniformity_impl(seeds, false);
}

CoverageReport strategy_compare(const StrategyCompareParams& params) {
    // two sparse groups confined to ~5% of blocks each, one dense group
    // everywhere; top-1(max) separation is bottlenecked on the sparse groups
    GenSpec spec;
    spec.rows = params.rows;
    spec.seed = params.seed;
    GenColumn grp;
    grp.name = "grp";
    grp.type = ColumnType::categorical;
    grp.values = {"dense", "hi", "mid"};
    const double sparse_rows = 0.0513 * (static_cast<double>(params.rows) / params.block_size);
    const double w = sparse_rows / static_cast<double>(params.rows);
    grp.weights = {1.0 - 2 * w, w, w};
    GenColumn val;
    val.name = "val";
    val.type = ColumnType::numeric;
    val.dist = {GenDist::Kind::uniform, -2.0, 2.0};
    val.offsets_by = "grp";
    val.offsets = {2.5, 100.0, 55.0};  // dense ~[0.5,4.5], hi ~[98,102], mid ~[53,57]
    spec.columns = {grp, val};

    const TableData table = generate_table(spec);
    BuildOptions opts;
    opts.block_size = params.block_size;
    const Scramble scramble = build_scramble(table, params.seed, opts);

    const Query query = parse_query("SELECT grp, AVG(val) FROM t GROUP BY grp");
    ExecOptions options;
    options.delta = 1e-6;
    options.bounder = {BounderId::bernstein, true};
    options.stop = StoppingCondition::topk(1, TopDirection::largest);
    options.seed = params.seed + 1;

    options.strategy = StrategyId::scan;
    const ExecResult scan = execute(plan(query, scramble, options), scramble);
    options.strategy = StrategyId::active_sync;
    const ExecResult sync = execute(plan(query, scramble, options), scramble);
    options.strategy = StrategyId::active_peek;
    const ExecResult peek = execute(plan(query, scramble, options), scramble);

    std::vector<uint64_t> sync_sorted = sync.consumed_blocks;
    std::sort(sync_sorted.begin(), sync_sorted.end());
    bool subset = true;
    for (uint64_t b : peek.consumed_blocks)
        if (!std::binary_search(sync_sorted.begin(), sync_sorted.end(), b)) subset = false;

    const bool pass = sync.metrics.blocks_fetched * 2 <= scan.metrics.blocks_fetched && subset;
    CoverageReport r;
    r.mode = "strategy-compare";
    r.trials = scan.metrics.blocks_fetched;
    r.misses = sync.metrics.blocks_fetched;
    r.miss_rate = scan.metrics.blocks_fetched == 0
                      ? 0.0
                      : static_cast<double>(sync.metrics.blocks_fetched) /
                            static_cast<double>(scan.metrics.blocks_fetched);
    r.delta = 0.5;
    r.pass = pass;
    std::ostringstream d;
    d << "scan=" << scan.metrics.blocks_fetched << " activesync=" << sync.metrics.blocks_fetched
      << " activepeek=" << peek.metrics.blocks_fetched << " subset=" << (subset ? "yes" : "no");
    r.detail = d.str();
    return r;
}

}  // namespace aqe
