#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aqe/estimators.hpp"
#include "aqe/rng.hpp"
#include "oracles.hpp"

using namespace aqe;

TEST_CASE("selectivity worked value") {
    const SelectivityState s{100, 50, 10000};
    const ConfidenceInterval ci = selectivity_ci(s, 0.05);
    CHECK(std::abs(ci.lower - 0.36486) < 1e-4);
    CHECK(std::abs(ci.upper - 0.63514) < 1e-4);
}

TEST_CASE("selectivity degenerates on a full scan") {
    const SelectivityState s{10000, 4000, 10000};
    const ConfidenceInterval ci = selectivity_ci(s, 0.1);
    CHECK(ci.lower == doctest::Approx(0.4));
    CHECK(ci.upper == doctest::Approx(0.4));
}

TEST_CASE("selectivity clamps to feasibility") {
    const ConfidenceInterval ci = selectivity_ci({3, 0, 1000}, 0.5);
    CHECK(ci.lower == 0.0);
    CHECK(ci.upper <= 1.0);

    const ConfidenceInterval vac = selectivity_ci({0, 0, 1000}, 0.5);
    CHECK(vac.lower == 0.0);
    CHECK(vac.upper == 1.0);
}

TEST_CASE("count interval scales and rounds outward") {
    const SelectivityState s{100, 50, 10000};
    const ConfidenceInterval ci = count_ci(s, 0.05);
    CHECK(ci.lower == 3648.0);
    CHECK(ci.upper == 6352.0);

    const ConfidenceInterval exact = count_ci({10000, 4000, 10000}, 0.1);
    CHECK(exact.lower == 4000.0);
    CHECK(exact.upper == 4000.0);
}

TEST_CASE("count coverage, exhaustive over prefixes of a 10-row scramble") {
    // view of 4 rows, scan stopped at r = 5; every 5-subset of positions is an
    // equally likely prefix set of some permutation
    const double delta = 0.3;
    uint64_t samples = 0, misses = 0;
    oracle::for_each_subset(10, 5, [&](const std::vector<size_t>& idx) {
        uint64_t m_v = 0;
        for (size_t i : idx)
            if (i < 4) ++m_v;  // rows 0..3 form the view
        const ConfidenceInterval ci = count_ci({5, m_v, 10}, delta);
        ++samples;
        if (!ci.contains(4.0)) ++misses;
    });
    CHECK(samples == 252);
    CHECK(static_cast<double>(misses) / samples <= delta);
}

TEST_CASE("upper_bound_n behavior") {
    const SelectivityState s{100, 50, 10000};
    // monotone in alpha: weight shifted off the size bound inflates N+
    uint64_t prev = 0;
    for (double alpha : {0.5, 0.9, 0.99, 0.999}) {
        const uint64_t n_plus = upper_bound_n(s, 0.05, alpha);
        CHECK(n_plus >= prev);
        prev = n_plus;
    }
    // pure view: cap at R
    CHECK(upper_bound_n({100, 100, 10000}, 0.05, 0.99) == 10000);
    // cap respects rows already known to be outside
    CHECK(upper_bound_n({10000, 100, 10000}, 0.05, 0.99) == 100);
}

TEST_CASE("avg_ci_unknown_size matches the plain bounder when N+ is forced") {
    Xoshiro256 rng(17);
    RangeTrimState s;
    for (int i = 0; i < 400; ++i) s.update(rng.uniform(0.0, 1.0));
    const Bounder bounder{BounderId::hoeffding, false};
    const RangeBounds r(0, 1);
    // every scanned row belonged to the view and the scan is complete, so
    // N+ = R exactly; with alpha near 1 the interval approaches the plain one
    const SelectivityState sel{10000, 10000, 10000};
    const double delta = 0.1;
    const double alpha = 1.0 - 1e-12;
    const ConfidenceInterval unknown = avg_ci_unknown_size(bounder, s, sel, r, delta, alpha);
    const ConfidenceInterval plain = bounder.interval(s, r, 10000, delta);
    CHECK(unknown.lower == doctest::Approx(plain.lower).epsilon(1e-9));
    CHECK(unknown.upper == doctest::Approx(plain.upper).epsilon(1e-9));
}

TEST_CASE("avg_ci_unknown_size width shrinks as the scan advances") {
    // deterministic closed-form scan: every second scanned row is a view row,
    // view values alternate so the sample moments stay fixed
    RangeTrimState s;
    const Bounder bounder{BounderId::bernstein, false};
    const RangeBounds r(0, 1);
    double prev_width = INFINITY;
    uint64_t r_scanned = 0, m_v = 0;
    for (int step = 1; step <= 40; ++step) {
        for (int i = 0; i < 250; ++i) {
            r_scanned += 2;
            m_v += 1;
            s.update(m_v % 2 == 0 ? 0.25 : 0.35);
        }
        const ConfidenceInterval ci =
            avg_ci_unknown_size(bounder, s, {r_scanned, m_v, 1000000}, r, 0.05, 0.99);
        CHECK(ci.width() <= prev_width + 1e-9);
        prev_width = ci.width();
    }
}

TEST_CASE("avg_ci_unknown_size monte carlo coverage") {
    // filtered view with unknown size; miss rate over seeded trials must stay
    // within delta = 0.1
    const double delta = 0.1;
    const uint64_t population = 20000;
    int misses = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        Xoshiro256 rng(derive_stream(424242, t));
        // population: ~30% of rows in view, view values uniform in [0.3, 0.7]
        std::vector<uint8_t> member(population);
        for (uint64_t i = 0; i < population; ++i) member[i] = rng.unit() < 0.3;
        std::vector<double> values(population);
        double truth_sum = 0;
        uint64_t truth_n = 0;
        for (uint64_t i = 0; i < population; ++i) {
            values[i] = rng.uniform(0.3, 0.7);
            if (member[i]) {
                truth_sum += values[i];
                ++truth_n;
            }
        }
        const double truth = truth_sum / static_cast<double>(truth_n);
        // scan a random prefix of a fresh permutation
        std::vector<uint64_t> perm(population);
        for (uint64_t i = 0; i < population; ++i) perm[i] = i;
        shuffle_in_place(perm, rng);
        const uint64_t r_scanned = 2000;
        RangeTrimState s;
        uint64_t m_v = 0;
        for (uint64_t i = 0; i < r_scanned; ++i) {
            if (member[perm[i]]) {
                ++m_v;
                s.update(values[perm[i]]);
            }
        }
        const ConfidenceInterval ci = avg_ci_unknown_size(
            {BounderId::bernstein, false}, s, {r_scanned, m_v, population}, RangeBounds(0, 1),
            delta, 0.99);
        if (!ci.contains(truth)) ++misses;
    }
    CHECK(static_cast<double>(misses) / trials <= delta);
}

TEST_CASE("sum interval from count and avg") {
    const ConfidenceInterval count{90, 110, 0.05};
    const ConfidenceInterval avg{2, 3, 0.05};
    ConfidenceInterval sum = sum_ci(count, avg);
    CHECK(sum.lower == 180.0);
    CHECK(sum.upper == 330.0);

    sum = sum_ci(count, {-2, 3, 0.05});
    CHECK(sum.lower == -220.0);
    CHECK(sum.upper == 330.0);

    sum = sum_ci({7, 7, 0.05}, {1.5, 1.5, 0.05});
    CHECK(sum.lower == 10.5);
    CHECK(sum.upper == 10.5);
}

TEST_CASE("sum interval contains every covered product") {
    Xoshiro256 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const double cl = rng.uniform(-50, 50);
        const double cu = cl + rng.uniform(0, 50);
        const double al = rng.uniform(-5, 5);
        const double au = al + rng.uniform(0, 5);
        const ConfidenceInterval sum = sum_ci({cl, cu, 0.1}, {al, au, 0.1});
        for (int i = 0; i <= 10; ++i) {
            for (int j = 0; j <= 10; ++j) {
                const double c = cl + (cu - cl) * i / 10.0;
                const double a = al + (au - al) * j / 10.0;
                CHECK(sum.lower <= c * a + 1e-9);
                CHECK(sum.upper >= c * a - 1e-9);
            }
        }
    }
}

TEST_CASE("budget splits evenly") {
    CHECK(budget(0.1, 2) == doctest::Approx(0.05));
    CHECK(budget(0.3, 1) == 0.3);
    double total = 0;
    for (int i = 0; i < 7; ++i) total += budget(0.21, 7);
    CHECK(total == doctest::Approx(0.21));
    CHECK_THROWS_AS(budget(0.1, 0), std::invalid_argument);
}

TEST_CASE("sum joint monte carlo coverage") {
    // end-to-end SUM interval (count at delta/2, unknown-size avg at delta/2)
    // over seeded trials at delta = 0.1
    const double delta = 0.1;
    const uint64_t population = 20000;
    int misses = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        Xoshiro256 rng(derive_stream(808080, t));
        std::vector<uint8_t> member(population);
        std::vector<double> values(population);
        double truth = 0;
        for (uint64_t i = 0; i < population; ++i) {
            member[i] = rng.unit() < 0.25;
            values[i] = rng.uniform(-1.0, 3.0);
            if (member[i]) truth += values[i];
        }
        std::vector<uint64_t> perm(population);
        for (uint64_t i = 0; i < population; ++i) perm[i] = i;
        shuffle_in_place(perm, rng);
        const uint64_t r_scanned = 3000;
        RangeTrimState s;
        uint64_t m_v = 0;
        for (uint64_t i = 0; i < r_scanned; ++i) {
            if (member[perm[i]]) {
                ++m_v;
                s.update(values[perm[i]]);
            }
        }
        const SelectivityState sel{r_scanned, m_v, population};
        const ConfidenceInterval count = count_ci(sel, delta / 2);
        const ConfidenceInterval avg = avg_ci_unknown_size(
            {BounderId::bernstein, false}, s, sel, RangeBounds(-1, 3), delta / 2, 0.99);
        const ConfidenceInterval sum = sum_ci(count, avg);
        if (!sum.contains(truth)) ++misses;
    }
    CHECK(static_cast<double>(misses) / trials <= delta);
}

TEST_CASE("unknown-size interval is the bounder interval at N+") {
    Xoshiro256 rng(55);
    RangeTrimState s;
    for (int i = 0; i < 300; ++i) s.update(rng.uniform(0.0, 1.0));
    const SelectivityState sel{1000, 300, 50000};
    const Bounder b{BounderId::bernstein, true};
    const double delta = 0.05, alpha = 0.99;
    const uint64_t n_plus = upper_bound_n(sel, delta, alpha);
    const ConfidenceInterval got =
        avg_ci_unknown_size(b, s, sel, RangeBounds(0, 1), delta, alpha);
    const ConfidenceInterval expect = b.interval(s, RangeBounds(0, 1), n_plus, alpha * delta);
    CHECK(got.lower == expect.lower);
    CHECK(got.upper == expect.upper);
}
