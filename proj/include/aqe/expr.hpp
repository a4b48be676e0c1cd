#pragma once
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "aqe/ci.hpp"

namespace aqe {

// Arithmetic expression over numeric columns: constants, column references,
// + - * /, integer powers, unary minus.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprOp { constant, column, add, sub, mul, div, pow, neg };

struct Expr {
    ExprOp op;
    double value = 0.0;        // constant
    size_t column = 0;         // column index
    ExprPtr lhs, rhs;          // operands (rhs unused for neg)
    uint32_t exponent = 0;     // pow

    static ExprPtr make_const(double v);
    static ExprPtr make_column(size_t idx);
    static ExprPtr make_binary(ExprOp op, ExprPtr l, ExprPtr r);
    static ExprPtr make_pow(ExprPtr base, uint32_t exponent);
    static ExprPtr make_neg(ExprPtr e);
};

double eval_expr(const Expr& e, const std::vector<double>& row);

// Columns referenced by the expression (sorted, unique).
std::vector<size_t> expr_columns(const Expr& e);

std::string expr_to_string(const Expr& e, const std::vector<std::string>& column_names);

// Thrown when a derived range cannot be bounded (division by a box that
// straddles zero); an unbounded range would make every range-based bounder
// vacuous, so callers must reject the expression instead.
struct UnboundedRangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RangeMethod { monotone, convex_corner, interval_arithmetic };

struct DerivedRange {
    double lo;
    double hi;
    RangeMethod method;
};

// Per-column monotonicity certificate. `unknown` is the safe answer: the
// analysis never claims monotonicity that does not hold.
enum class MonotoneSign { none, increasing, decreasing, unknown };

std::vector<MonotoneSign> certify_monotone(const Expr& e, const std::vector<RangeBounds>& boxes);

// Sound range bounds for the expression image over the box product:
//  - monotone in every referenced column: exact via the two sign-selected corners;
//  - certifiably convex (or concave): exact corner maximum (resp. minimum) on
//    the convex side, interval arithmetic on the other;
//  - otherwise: plain interval arithmetic.
DerivedRange derive_range(const Expr& e, const std::vector<RangeBounds>& boxes);

// Interval arithmetic evaluation (always sound, possibly loose).
RangeBounds interval_eval(const Expr& e, const std::vector<RangeBounds>& boxes);

}  // namespace aqe
