#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aqe/gen.hpp"
#include "aqe/plan.hpp"
#include "aqe/query.hpp"

using namespace aqe;

TEST_CASE("simple aggregate") {
    const Query q = parse_query("SELECT AVG(DepDelay) FROM flights");
    CHECK(q.aggregates.size() == 1);
    CHECK(q.aggregates[0].fn == AggFn::avg);
    CHECK(q.aggregates[0].label == "AVG(DepDelay)");
    CHECK(q.table == "flights");
    CHECK(q.filter.empty());
    CHECK_FALSE(q.group_by.has_value());
}

TEST_CASE("group by with having") {
    const Query q = parse_query(
        "SELECT Origin, AVG(DepDelay) FROM flights GROUP BY Origin HAVING AVG(DepDelay) < 0");
    CHECK(q.select_columns == std::vector<std::string>{"Origin"});
    CHECK(q.group_by == "Origin");
    REQUIRE(q.having.has_value());
    CHECK(q.having->aggregate_index == 0);
    CHECK(q.having->op == CmpOp::lt);
    CHECK(q.having->value == 0.0);
}

TEST_CASE("expression aggregate") {
    const Query q = parse_query("SELECT AVG((2*c1+3*c2-1)^2) FROM t");
    REQUIRE(q.aggregates.size() == 1);
    REQUIRE(q.aggregates[0].expr);
    CHECK(q.expr_columns == std::vector<std::string>{"c1", "c2"});
    CHECK(eval_expr(*q.aggregates[0].expr, {1, 3}) == 100.0);
}

TEST_CASE("where clause atoms") {
    const Query q = parse_query(
        "SELECT COUNT(*) FROM t WHERE Origin = 'ORD' AND DepTime >= 1800 AND Day != Sat");
    REQUIRE(q.filter.size() == 3);
    CHECK(q.filter[0].column == "Origin");
    CHECK(q.filter[0].op == CmpOp::eq);
    CHECK(q.filter[0].text == "ORD");
    CHECK(q.filter[1].op == CmpOp::ge);
    CHECK(q.filter[1].number == 1800.0);
    CHECK(q.filter[2].op == CmpOp::ne);
    CHECK(q.filter[2].text == "Sat");
    CHECK(q.aggregates[0].fn == AggFn::count);
}

TEST_CASE("keywords are case-insensitive") {
    const Query q = parse_query("select avg(x) from t where x > -1 group by g");
    CHECK(q.aggregates[0].fn == AggFn::avg);
    CHECK(q.group_by == "g");
    CHECK(q.filter[0].number == -1.0);
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse_query(""), ParseError);
    CHECK_THROWS_AS(parse_query("SELECT FROM t"), ParseError);
    CHECK_THROWS_AS(parse_query("SELECT AVG(x) FROM"), ParseError);
    CHECK_THROWS_AS(parse_query("SELECT COUNT(x) FROM t"), ParseError);
    CHECK_THROWS_AS(parse_query("SELECT AVG(x) FROM t HAVING AVG(y) < 0"), ParseError);
    CHECK_THROWS_AS(parse_query("SELECT AVG(x) FROM t GROUP BY g HAVING AVG(x) != 0"),
                    ParseError);
    CHECK_THROWS_AS(parse_query("SELECT AVG(x^-2) FROM t"), ParseError);
    CHECK_THROWS_AS(parse_query("SELECT AVG(x) FROM t extra"), ParseError);
    try {
        parse_query("SELECT AVG(x) FROM t WHERE ???");
    } catch (const ParseError& e) {
        CHECK(e.offset == 27);
    }
}

namespace {

Scramble test_scramble() {
    GenSpec spec;
    spec.rows = 2000;
    spec.seed = 9;
    GenColumn g;
    g.name = "origin";
    g.type = ColumnType::categorical;
    g.values = {"A", "B", "C"};
    GenColumn d;
    d.name = "delay";
    d.type = ColumnType::numeric;
    d.dist = {GenDist::Kind::uniform, -5, 15};
    GenColumn w;
    w.name = "wind";
    w.type = ColumnType::numeric;
    w.dist = {GenDist::Kind::uniform, 0, 1};
    spec.columns = {g, d, w};
    return build_scramble(generate_table(spec), 2, {100, 1.0});
}

}  // namespace

TEST_CASE("plan shapes views and budgets") {
    const Scramble s = test_scramble();
    ExecOptions opts;
    opts.delta = 0.12;

    // G groups, one aggregate each: delta split across G views
    QueryPlan p = plan(parse_query("SELECT origin, AVG(delay) FROM t GROUP BY origin"), s, opts);
    CHECK(p.n_views == 3);
    CHECK(p.delta_per_view == doctest::Approx(0.04));
    CHECK_FALSE(p.covers_whole_scramble);

    // no group by, two aggregates -> two views
    p = plan(parse_query("SELECT AVG(delay), SUM(delay) FROM t"), s, opts);
    CHECK(p.n_views == 2);
    CHECK(p.covers_whole_scramble);

    // count with a filter -> one selectivity view
    p = plan(parse_query("SELECT COUNT(*) FROM t WHERE origin = 'A'"), s, opts);
    CHECK(p.n_views == 1);
    CHECK_FALSE(p.covers_whole_scramble);
    CHECK(p.filter[0].code == s.code_of(0, "A"));

    // derived expression range from catalog boxes
    p = plan(parse_query("SELECT AVG(delay*wind) FROM t"), s, opts);
    CHECK(p.aggregates[0].range.a < -4.0);
    CHECK(p.aggregates[0].range.b > 10.0);

    // HAVING lowers to a threshold stop by default
    p = plan(parse_query(
                 "SELECT origin, AVG(delay) FROM t GROUP BY origin HAVING AVG(delay) > 5"),
             s, opts);
    CHECK(p.stop.kind == StopKind::threshold);
    CHECK(p.stop.value == 5.0);
}

TEST_CASE("plan rejects malformed queries") {
    const Scramble s = test_scramble();
    const ExecOptions opts;
    CHECK_THROWS_AS(plan(parse_query("SELECT AVG(delay) FROM t GROUP BY delay"), s, opts),
                    std::invalid_argument);
    CHECK_THROWS_AS(plan(parse_query("SELECT AVG(origin) FROM t"), s, opts),
                    std::invalid_argument);
    CHECK_THROWS_AS(plan(parse_query("SELECT AVG(nope) FROM t"), s, opts),
                    std::invalid_argument);
    CHECK_THROWS_AS(plan(parse_query("SELECT AVG(delay) FROM t WHERE origin < 'A'"), s, opts),
                    std::invalid_argument);
    CHECK_THROWS_AS(plan(parse_query("SELECT AVG(delay) FROM t WHERE origin = 'ZZ'"), s, opts),
                    std::invalid_argument);
    CHECK_THROWS_AS(plan(parse_query("SELECT wind, AVG(delay) FROM t GROUP BY origin"), s, opts),
                    std::invalid_argument);
    ExecOptions topk = opts;
    topk.stop = StoppingCondition::topk(9, TopDirection::smallest);
    CHECK_THROWS_AS(
        plan(parse_query("SELECT origin, AVG(delay) FROM t GROUP BY origin"), s, topk),
        std::invalid_argument);
}
