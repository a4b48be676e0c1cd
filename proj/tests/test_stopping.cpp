#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "aqe/rangetrim.hpp"
#include "aqe/rng.hpp"
#include "aqe/stopping.hpp"

using namespace aqe;

TEST_CASE("round delta schedule") {
    CHECK(std::abs(round_delta(0.5, 1) - 0.5 * 0.607927) < 1e-6);
    CHECK(round_delta(0.2, 2) == doctest::Approx(round_delta(0.2, 1) / 4.0));
    CHECK_THROWS_AS(round_delta(0.1, 0), std::invalid_argument);

    // partial sums stay strictly under the budget out to a million rounds
    const double delta = 0.05;
    double total = 0;
    for (uint64_t k = 1; k <= 1000000; ++k) total += round_delta(delta, k);
    CHECK(total < delta);
    CHECK(total > 0.99 * delta);
}

TEST_CASE("condition string round trips") {
    for (const char* text :
         {"taken:5000", "abs:0.5", "rel:0.1", "thresh:-3", "topk:2:min", "topk:7:max",
          "ordered"}) {
        const StoppingCondition c = StoppingCondition::parse(text);
        CHECK(StoppingCondition::parse(c.to_string()).to_string() == c.to_string());
    }
    CHECK(StoppingCondition::parse("taken:12").kind == StopKind::samples_taken);
    CHECK(StoppingCondition::parse("topk:3:max").direction == TopDirection::largest);
    CHECK_THROWS_AS(StoppingCondition::parse("bogus:1"), std::invalid_argument);
    CHECK_THROWS_AS(StoppingCondition::parse("topk:3:sideways"), std::invalid_argument);
}

TEST_CASE("relative accuracy evaluator") {
    CHECK(eval_relative({10, 10.5, 0.1}, 0.1));
    CHECK_FALSE(eval_relative({-1, 1, 0.1}, 100.0));
    CHECK_FALSE(eval_relative({10, 12, 0.1}, 0.1));
    CHECK(eval_relative({-10.5, -10, 0.1}, 0.1));
}

TEST_CASE("threshold evaluator") {
    CHECK(eval_threshold({-3, -1, 0.1}, 0.0));
    CHECK_FALSE(eval_threshold({-1, 1, 0.1}, 0.0));
    CHECK_FALSE(eval_threshold({0, 0, 0.1}, 0.0));  // closed interval
    CHECK(eval_threshold({2, 5, 0.1}, 1.0));
}

namespace {

// brute-force oracle over all K-subsets
bool topk_oracle(const std::map<std::string, ConfidenceInterval>& cis, uint64_t k,
                 TopDirection dir) {
    std::vector<ConfidenceInterval> v;
    for (const auto& [name, ci] : cis) v.push_back(ci);
    const size_t n = v.size();
    for (uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        if (static_cast<uint64_t>(__builtin_popcountll(mask)) != k) continue;
        bool ok = true;
        for (size_t i = 0; i < n && ok; ++i) {
            if (!((mask >> i) & 1)) continue;
            for (size_t j = 0; j < n && ok; ++j) {
                if ((mask >> j) & 1) continue;
                const bool below = v[i].upper < v[j].lower;
                const bool above = v[i].lower > v[j].upper;
                ok = dir == TopDirection::smallest ? below : above;
            }
        }
        if (ok) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("topk evaluator") {
    using M = std::map<std::string, ConfidenceInterval>;
    const M a{{"A", {0, 1, 0.1}}, {"B", {2, 3, 0.1}}, {"C", {2.5, 4, 0.1}}};
    CHECK(eval_topk(a, 1, TopDirection::smallest));
    const M b{{"A", {0, 2.2, 0.1}}, {"B", {2, 3, 0.1}}};
    CHECK_FALSE(eval_topk(b, 1, TopDirection::smallest));
    const M c{{"A", {5, 6, 0.1}}, {"B", {3, 4, 0.1}}, {"C", {0, 1, 0.1}}};
    CHECK(eval_topk(c, 2, TopDirection::largest));
    CHECK(topk_oracle(c, 2, TopDirection::largest));
}

TEST_CASE("topk evaluator agrees with subset brute force") {
    Xoshiro256 rng(13);
    for (int trial = 0; trial < 500; ++trial) {
        std::map<std::string, ConfidenceInterval> cis;
        const int n = 2 + static_cast<int>(rng.below(5));
        for (int i = 0; i < n; ++i) {
            const double lo = rng.uniform(0, 10);
            cis.emplace(std::string(1, static_cast<char>('A' + i)),
                        ConfidenceInterval{lo, lo + rng.uniform(0, 4), 0.1});
        }
        const uint64_t k = 1 + rng.below(n);
        for (TopDirection dir : {TopDirection::smallest, TopDirection::largest})
            CHECK(eval_topk(cis, k, dir) == topk_oracle(cis, k, dir));
    }
}

TEST_CASE("ordered evaluator") {
    using M = std::map<std::string, ConfidenceInterval>;
    CHECK(eval_ordered(M{{"A", {1, 2, 0.1}}, {"B", {3, 4, 0.1}}, {"C", {5, 6, 0.1}}}));
    CHECK_FALSE(eval_ordered(M{{"A", {1, 3, 0.1}}, {"B", {2, 4, 0.1}}}));
    CHECK(eval_ordered(M{{"A", {1, 2, 0.1}}}));
}

// --- controller ----------------------------------------------------------------

namespace {

// A toy view over an in-memory shuffled column with a known population size:
// enough structure to drive the controller without the query engine.
struct ToyView {
    std::vector<double> data;  // scramble order
    uint64_t block = 0;        // rows per round
    uint64_t cursor = 0;
    RangeTrimState state;
    Bounder bounder{BounderId::hoeffding, false};
    RangeBounds range{0, 1};

    ViewPort port(double delta_share) {
        ViewPort p;
        p.delta_share = delta_share;
        p.group_code = -1;
        p.group_key = "";
        p.compute = [this](double d) {
            return bounder.interval(state, range, data.size(), d);
        };
        p.samples = [this] { return state.m(); };
        p.exact_value = [this] { return state.total.mean(); };
        return p;
    }

    bool pump() {
        if (cursor >= data.size()) return false;
        const uint64_t end = std::min<uint64_t>(cursor + block, data.size());
        for (; cursor < end; ++cursor) state.update(data[cursor]);
        return true;
    }
};

ToyView make_toy(uint64_t n, uint64_t block, uint64_t seed) {
    ToyView v;
    v.block = block;
    Xoshiro256 rng(seed);
    v.data.resize(n);
    for (auto& x : v.data) x = rng.unit();
    shuffle_in_place(v.data, rng);
    return v;
}

}  // namespace

TEST_CASE("taken:0 stops before any sampling") {
    ToyView toy = make_toy(1000, 100, 1);
    std::vector<ViewPort> views{toy.port(0.1)};
    int pumps = 0;
    const RunResult res = run_until_stopped(
        views,
        [&](const std::vector<uint8_t>&, bool) {
            ++pumps;
            return toy.pump();
        },
        {0.1, 100}, StoppingCondition::taken(0), 0);
    CHECK(res.outcome == StopOutcome::condition_met);
    CHECK(res.rounds == 0);
    CHECK(pumps == 0);
    CHECK(views[0].final_ci.lower == 0.0);
    CHECK(views[0].final_ci.upper == 1.0);
}

TEST_CASE("census reproduces the exact mean") {
    ToyView toy = make_toy(1000, 128, 2);
    std::vector<ViewPort> views{toy.port(0.1)};
    const RunResult res = run_until_stopped(
        views, [&](const std::vector<uint8_t>&, bool) { return toy.pump(); }, {0.1, 128},
        StoppingCondition::taken(1000), 0);
    CHECK(res.outcome == StopOutcome::condition_met);
    double exact = 0;
    for (double x : toy.data) exact += x;
    exact /= static_cast<double>(toy.data.size());
    CHECK(views[0].final_ci.contains(exact));
    CHECK(views[0].samples() == 1000);
}

TEST_CASE("unsatisfiable condition exhausts to a forced-exact result") {
    ToyView toy = make_toy(500, 100, 3);
    double exact = 0;
    for (double x : toy.data) exact += x;
    exact /= static_cast<double>(toy.data.size());
    // a threshold exactly at the mean can never be certified, even exactly
    std::vector<ViewPort> views{toy.port(0.1)};
    const RunResult res = run_until_stopped(
        views, [&](const std::vector<uint8_t>&, bool) { return toy.pump(); }, {0.1, 100},
        StoppingCondition::threshold(exact), 0);
    CHECK(res.outcome == StopOutcome::exhausted_exact);
    CHECK(views[0].forced_exact);
    CHECK(views[0].final_ci.lower == doctest::Approx(exact));
    CHECK(views[0].final_ci.upper == doctest::Approx(exact));
}

TEST_CASE("deterministic across repeated runs") {
    for (int rep = 0; rep < 2; ++rep) {
        ToyView toy = make_toy(20000, 500, 77);
        std::vector<ViewPort> views{toy.port(0.05)};
        const RunResult res = run_until_stopped(
            views, [&](const std::vector<uint8_t>&, bool) { return toy.pump(); }, {0.05, 500},
            StoppingCondition::absolute(0.2), 0);
        static double first_lo = 0, first_hi = 0;
        static uint64_t first_rounds = 0;
        if (rep == 0) {
            first_lo = views[0].final_ci.lower;
            first_hi = views[0].final_ci.upper;
            first_rounds = res.rounds;
        } else {
            CHECK(views[0].final_ci.lower == first_lo);
            CHECK(views[0].final_ci.upper == first_hi);
            CHECK(res.rounds == first_rounds);
        }
    }
}

TEST_CASE("monte carlo optional-stopping validity") {
    // 1000 seeded runs at delta_total = 0.1 on a known-mean view; count runs
    // in which ANY round's interval misses the truth, and check the running
    // interval stays monotone
    const int trials = 1000;
    int bad_runs = 0;
    for (int t = 0; t < trials; ++t) {
        ToyView toy = make_toy(100000, 40000, derive_stream(555, t));
        double truth = 0;
        for (double x : toy.data) truth += x;
        truth /= static_cast<double>(toy.data.size());

        std::vector<ViewPort> views{toy.port(0.1)};
        bool missed = false;
        double prev_lo = -INFINITY, prev_hi = INFINITY;
        const RunResult res = run_until_stopped(
            views, [&](const std::vector<uint8_t>&, bool) { return toy.pump(); }, {0.1, 40000},
            StoppingCondition::absolute(0.05), 0,
            [&](uint64_t, const std::vector<ViewPort>& vs) {
                const auto& run = vs[0].running;
                if (truth < run.best_lower || truth > run.best_upper) missed = true;
                CHECK(run.best_lower >= prev_lo);
                CHECK(run.best_upper <= prev_hi);
                prev_lo = run.best_lower;
                prev_hi = run.best_upper;
            });
        CHECK(res.outcome == StopOutcome::condition_met);
        if (missed) ++bad_runs;
    }
    CHECK(static_cast<double>(bad_runs) / trials <= 0.1);
}
