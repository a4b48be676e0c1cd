#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aqe/expr.hpp"
#include "aqe/rng.hpp"

using namespace aqe;

namespace {

ExprPtr c0() { return Expr::make_column(0); }
ExprPtr c1() { return Expr::make_column(1); }
ExprPtr k(double v) { return Expr::make_const(v); }
ExprPtr add(ExprPtr a, ExprPtr b) { return Expr::make_binary(ExprOp::add, a, b); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return Expr::make_binary(ExprOp::sub, a, b); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return Expr::make_binary(ExprOp::mul, a, b); }

// random expression trees for the soundness fuzz
ExprPtr random_expr(Xoshiro256& rng, int depth, size_t n_cols) {
    const uint64_t pick = rng.below(depth <= 0 ? 2 : 8);
    switch (pick) {
        case 0: return Expr::make_const(rng.uniform(-4.0, 4.0));
        case 1: return Expr::make_column(rng.below(n_cols));
        case 2: return add(random_expr(rng, depth - 1, n_cols), random_expr(rng, depth - 1, n_cols));
        case 3: return sub(random_expr(rng, depth - 1, n_cols), random_expr(rng, depth - 1, n_cols));
        case 4: return mul(random_expr(rng, depth - 1, n_cols), random_expr(rng, depth - 1, n_cols));
        case 5:
            return Expr::make_binary(ExprOp::div, random_expr(rng, depth - 1, n_cols),
                                     random_expr(rng, depth - 1, n_cols));
        case 6: return Expr::make_pow(random_expr(rng, depth - 1, n_cols),
                                      static_cast<uint32_t>(rng.below(4)));
        default: return Expr::make_neg(random_expr(rng, depth - 1, n_cols));
    }
}

}  // namespace

TEST_CASE("worked example: (2c0 + 3c1 - 1)^2 over [-3,1] x [-1,3]") {
    const ExprPtr inner = sub(add(mul(k(2), c0()), mul(k(3), c1())), k(1));
    const ExprPtr e = Expr::make_pow(inner, 2);
    const std::vector<RangeBounds> boxes{{-3, 1}, {-1, 3}};
    const DerivedRange r = derive_range(*e, boxes);
    CHECK(r.lo == 0.0);
    CHECK(r.hi == 100.0);
    CHECK(r.method == RangeMethod::convex_corner);
}

TEST_CASE("monotone sum evaluates at the corners exactly") {
    const ExprPtr e = add(c0(), c1());
    const DerivedRange r = derive_range(*e, {{0, 1}, {2, 3}});
    CHECK(r.lo == 2.0);
    CHECK(r.hi == 4.0);
    CHECK(r.method == RangeMethod::monotone);
}

TEST_CASE("bilinear product falls back but stays exact on corners here") {
    const ExprPtr e = mul(c0(), c1());
    const DerivedRange r = derive_range(*e, {{-1, 2}, {-3, 4}});
    CHECK(r.lo == -6.0);
    CHECK(r.hi == 8.0);
}

TEST_CASE("monotonicity certification") {
    const std::vector<RangeBounds> boxes{{-5, 5}, {-5, 5}};
    const ExprPtr lin = add(mul(k(2), c0()), mul(k(3), c1()));
    auto signs = certify_monotone(*lin, boxes);
    CHECK(signs[0] == MonotoneSign::increasing);
    CHECK(signs[1] == MonotoneSign::increasing);

    const ExprPtr mixed = add(Expr::make_neg(c0()), c1());
    signs = certify_monotone(*mixed, boxes);
    CHECK(signs[0] == MonotoneSign::decreasing);
    CHECK(signs[1] == MonotoneSign::increasing);

    const ExprPtr bilinear = mul(c0(), c1());
    signs = certify_monotone(*bilinear, boxes);
    CHECK(signs[0] == MonotoneSign::unknown);
    CHECK(signs[1] == MonotoneSign::unknown);

    // product of nonnegative increasing terms is certifiable
    const ExprPtr pos = mul(c0(), c1());
    signs = certify_monotone(*pos, {{0, 5}, {1, 2}});
    CHECK(signs[0] == MonotoneSign::increasing);
    CHECK(signs[1] == MonotoneSign::increasing);
}

TEST_CASE("division by a zero-straddling box is rejected") {
    const ExprPtr e = Expr::make_binary(ExprOp::div, k(1), c0());
    CHECK_THROWS_AS(derive_range(*e, {{-1, 1}}), UnboundedRangeError);
    // nonzero box divides fine
    const DerivedRange r = derive_range(*e, {{1, 2}});
    CHECK(r.lo == doctest::Approx(0.5));
    CHECK(r.hi == doctest::Approx(1.0));
}

TEST_CASE("grid soundness fuzz") {
    Xoshiro256 rng(2024);
    int checked = 0;
    while (checked < 3000) {
        const size_t n_cols = 1 + rng.below(3);
        const ExprPtr e = random_expr(rng, 3, n_cols);
        std::vector<RangeBounds> boxes;
        for (size_t i = 0; i < n_cols; ++i) {
            const double lo = rng.uniform(-5, 5);
            boxes.emplace_back(lo, lo + rng.uniform(0.0, 5.0));
        }
        DerivedRange r{0, 0, RangeMethod::monotone};
        try {
            r = derive_range(*e, boxes);
        } catch (const UnboundedRangeError&) {
            continue;  // rejected division; nothing to check
        }
        ++checked;
        // dense grid sampling must stay inside [lo, hi]
        const int grid = 7;
        std::vector<double> row(n_cols);
        std::vector<int> digit(n_cols, 0);
        for (;;) {
            for (size_t c = 0; c < n_cols; ++c)
                row[c] = boxes[c].a + (boxes[c].b - boxes[c].a) * digit[c] / (grid - 1);
            const double v = eval_expr(*e, row);
            if (std::isfinite(v)) {
                CHECK(v >= r.lo - 1e-7 * (1 + std::abs(r.lo)));
                CHECK(v <= r.hi + 1e-7 * (1 + std::abs(r.hi)));
            }
            size_t c = 0;
            while (c < n_cols && ++digit[c] == grid) digit[c++] = 0;
            if (c == n_cols) break;
        }
    }
}

TEST_CASE("monotone-certified ranges are attained by grid refinement") {
    const ExprPtr e = add(mul(k(2), c0()), Expr::make_neg(mul(k(5), c1())));
    const std::vector<RangeBounds> boxes{{-1, 3}, {0, 2}};
    const DerivedRange r = derive_range(*e, boxes);
    CHECK(r.method == RangeMethod::monotone);
    double lo = INFINITY, hi = -INFINITY;
    const int grid = 41;
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const double v = eval_expr(
                *e, {boxes[0].a + (boxes[0].b - boxes[0].a) * i / (grid - 1),
                     boxes[1].a + (boxes[1].b - boxes[1].a) * j / (grid - 1)});
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    CHECK(lo == doctest::Approx(r.lo));
    CHECK(hi == doctest::Approx(r.hi));
}

TEST_CASE("expression printing and evaluation") {
    const ExprPtr e = Expr::make_pow(sub(add(mul(k(2), c0()), mul(k(3), c1())), k(1)), 2);
    CHECK(eval_expr(*e, {1, 3}) == 100.0);
    const std::string text = expr_to_string(*e, {"c0", "c1"});
    CHECK(text.find("c0") != std::string::npos);
    CHECK(text.find("^2") != std::string::npos);
    const auto cols = expr_columns(*e);
    CHECK(cols == std::vector<size_t>{0, 1});
}
