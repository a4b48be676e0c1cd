#include "aqe/expr.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace aqe {

ExprPtr Expr::make_const(double v) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::constant;
    e->value = v;
    return e;
}
ExprPtr Expr::make_column(size_t idx) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::column;
    e->column = idx;
    return e;
}
ExprPtr Expr::make_binary(ExprOp op, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
}
ExprPtr Expr::make_pow(ExprPtr base, uint32_t exponent) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::pow;
    e->lhs = std::move(base);
    e->exponent = exponent;
    return e;
}
ExprPtr Expr::make_neg(ExprPtr inner) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::neg;
    e->lhs = std::move(inner);
    return e;
}

double eval_expr(const Expr& e, const std::vector<double>& row) {
    switch (e.op) {
        case ExprOp::constant: return e.value;
        case ExprOp::column: return row.at(e.column);
        case ExprOp::add: return eval_expr(*e.lhs, row) + eval_expr(*e.rhs, row);
        case ExprOp::sub: return eval_expr(*e.lhs, row) - eval_expr(*e.rhs, row);
        case ExprOp::mul: return eval_expr(*e.lhs, row) * eval_expr(*e.rhs, row);
        case ExprOp::div: return eval_expr(*e.lhs, row) / eval_expr(*e.rhs, row);
        case ExprOp::pow: {
            double base = eval_expr(*e.lhs, row);
            double out = 1.0;
            for (uint32_t i = 0; i < e.exponent; ++i) out *= base;
            return out;
        }
        case ExprOp::neg: return -eval_expr(*e.lhs, row);
    }
    throw std::logic_error("eval_expr: bad op");
}

namespace {

void collect_columns(const Expr& e, std::set<size_t>& out) {
    if (e.op == ExprOp::column) out.insert(e.column);
    if (e.lhs) collect_columns(*e.lhs, out);
    if (e.rhs) collect_columns(*e.rhs, out);
}

}  // namespace

std::vector<size_t> expr_columns(const Expr& e) {
    std::set<size_t> cols;
    collect_columns(e, cols);
    return {cols.begin(), cols.end()};
}

std::string expr_to_string(const Expr& e, const std::vector<std::string>& names) {
    std::ostringstream out;
    switch (e.op) {
        case ExprOp::constant: out << e.value; break;
        case ExprOp::column: out << names.at(e.column); break;
        case ExprOp::add:
            out << "(" << expr_to_string(*e.lhs, names) << "+" << expr_to_string(*e.rhs, names)
                << ")";
            break;
        case ExprOp::sub:
            out << "(" << expr_to_string(*e.lhs, names) << "-" << expr_to_string(*e.rhs, names)
                << ")";
            break;
        case ExprOp::mul:
            out << "(" << expr_to_string(*e.lhs, names) << "*" << expr_to_string(*e.rhs, names)
                << ")";
            break;
        case ExprOp::div:
            out << "(" << expr_to_string(*e.lhs, names) << "/" << expr_to_string(*e.rhs, names)
                << ")";
            break;
        case ExprOp::pow: out << expr_to_string(*e.lhs, names) << "^" << e.exponent; break;
        case ExprOp::neg: out << "-" << expr_to_string(*e.lhs, names); break;
    }
    return out.str();
}

// --- Interval arithmetic -----------------------------------------------------

RangeBounds interval_eval(const Expr& e, const std::vector<RangeBounds>& boxes) {
    switch (e.op) {
        case ExprOp::constant: return {e.value, e.value};
        case ExprOp::column: return boxes.at(e.column);
        case ExprOp::add: {
            const RangeBounds l = interval_eval(*e.lhs, boxes);
            const RangeBounds r = interval_eval(*e.rhs, boxes);
            return {l.a + r.a, l.b + r.b};
        }
        case ExprOp::sub: {
            const RangeBounds l = interval_eval(*e.lhs, boxes);
            const RangeBounds r = interval_eval(*e.rhs, boxes);
            return {l.a - r.b, l.b - r.a};
        }
        case ExprOp::mul: {
            const RangeBounds l = interval_eval(*e.lhs, boxes);
            const RangeBounds r = interval_eval(*e.rhs, boxes);
            const double c[4] = {l.a * r.a, l.a * r.b, l.b * r.a, l.b * r.b};
            return {std::min(std::min(c[0], c[1]), std::min(c[2], c[3])),
                    std::max(std::max(c[0], c[1]), std::max(c[2], c[3]))};
        }
        case ExprOp::div: {
            const RangeBounds l = interval_eval(*e.lhs, boxes);
            const RangeBounds r = interval_eval(*e.rhs, boxes);
            if (r.a <= 0.0 && 0.0 <= r.b)
                throw UnboundedRangeError("denominator range contains zero");
            const double c[4] = {l.a / r.a, l.a / r.b, l.b / r.a, l.b / r.b};
            return {std::min(std::min(c[0], c[1]), std::min(c[2], c[3])),
                    std::max(std::max(c[0], c[1]), std::max(c[2], c[3]))};
        }
        case ExprOp::pow: {
            const RangeBounds base = interval_eval(*e.lhs, boxes);
            if (e.exponent == 0) return {1.0, 1.0};
            auto ipow = [](double x, uint32_t n) {
                double out = 1.0;
                for (uint32_t i = 0; i < n; ++i) out *= x;
                return out;
            };
            const double pa = ipow(base.a, e.exponent);
            const double pb = ipow(base.b, e.exponent);
            if (e.exponent % 2 == 1) return {pa, pb};
            if (base.a >= 0.0) return {pa, pb};
            if (base.b <= 0.0) return {pb, pa};
            return {0.0, std::max(pa, pb)};
        }
        case ExprOp::neg: {
            const RangeBounds inner = interval_eval(*e.lhs, boxes);
            return {-inner.b, -inner.a};
        }
    }
    throw std::logic_error("interval_eval: bad op");
}

// --- Monotonicity certification ----------------------------------------------

namespace {

using SignVec = std::vector<MonotoneSign>;

MonotoneSign flip(MonotoneSign s) {
    if (s == MonotoneSign::increasing) return MonotoneSign::decreasing;
    if (s == MonotoneSign::decreasing) return MonotoneSign::increasing;
    return s;
}

MonotoneSign combine_add(MonotoneSign x, MonotoneSign y) {
    if (x == MonotoneSign::none) return y;
    if (y == MonotoneSign::none) return x;
    if (x == y && x != MonotoneSign::unknown) return x;
    return MonotoneSign::unknown;
}

SignVec certify(const Expr& e, const std::vector<RangeBounds>& boxes, size_t n_cols) {
    SignVec out(n_cols, MonotoneSign::none);
    switch (e.op) {
        case ExprOp::constant: return out;
        case ExprOp::column:
            out.at(e.column) = MonotoneSign::increasing;
            return out;
        case ExprOp::neg: {
            SignVec inner = certify(*e.lhs, boxes, n_cols);
            for (auto& s : inner) s = flip(s);
            return inner;
        }
        case ExprOp::add:
        case ExprOp::sub: {
            SignVec l = certify(*e.lhs, boxes, n_cols);
            SignVec r = certify(*e.rhs, boxes, n_cols);
            if (e.op == ExprOp::sub)
                for (auto& s : r) s = flip(s);
            for (size_t i = 0; i < n_cols; ++i) out[i] = combine_add(l[i], r[i]);
            return out;
        }
        case ExprOp::mul: {
            // Constant factors scale signs; otherwise both factors must be
            // sign-definite over the box for the product rule to apply.
            if (e.lhs->op == ExprOp::constant || e.rhs->op == ExprOp::constant) {
                const bool lhs_const = e.lhs->op == ExprOp::constant;
                const double c = lhs_const ? e.lhs->value : e.rhs->value;
                SignVec inner = certify(lhs_const ? *e.rhs : *e.lhs, boxes, n_cols);
                if (c < 0)
                    for (auto& s : inner) s = flip(s);
                if (c == 0) return SignVec(n_cols, MonotoneSign::none);
                return inner;
            }
            const RangeBounds lr = interval_eval(*e.lhs, boxes);
            const RangeBounds rr = interval_eval(*e.rhs, boxes);
            SignVec l = certify(*e.lhs, boxes, n_cols);
            SignVec r = certify(*e.rhs, boxes, n_cols);
            if (lr.a >= 0.0 && rr.a >= 0.0) {
                // product of nonnegative terms: monotone where the factor
                // signs agree (treating an absent column as agreeing)
                for (size_t i = 0; i < n_cols; ++i) out[i] = combine_add(l[i], r[i]);
                return out;
            }
            if (lr.b <= 0.0 && rr.b <= 0.0) {
                // u*v = (-u)*(-v) with both factors nonnegative
                for (size_t i = 0; i < n_cols; ++i)
                    out[i] = combine_add(flip(l[i]), flip(r[i]));
                return out;
            }
            // mixed or straddling signs: only certify columns neither side uses
            for (size_t i = 0; i < n_cols; ++i)
                out[i] = (l[i] == MonotoneSign::none && r[i] == MonotoneSign::none)
                             ? MonotoneSign::none
                             : MonotoneSign::unknown;
            return out;
        }
        case ExprOp::div: {
            if (e.rhs->op == ExprOp::constant) {
                if (e.rhs->value == 0.0) throw UnboundedRangeError("division by zero constant");
                SignVec inner = certify(*e.lhs, boxes, n_cols);
                if (e.rhs->value < 0)
                    for (auto& s : inner) s = flip(s);
                return inner;
            }
            SignVec l = certify(*e.lhs, boxes, n_cols);
            SignVec r = certify(*e.rhs, boxes, n_cols);
            for (size_t i = 0; i < n_cols; ++i)
                out[i] = (l[i] == MonotoneSign::none && r[i] == MonotoneSign::none)
                             ? MonotoneSign::none
                             : MonotoneSign::unknown;
            return out;
        }
        case ExprOp::pow: {
            if (e.exponent == 0) return out;
            SignVec inner = certify(*e.lhs, boxes, n_cols);
            if (e.exponent == 1) return inner;
            if (e.exponent % 2 == 1) return inner;  // odd powers preserve order
            const RangeBounds base = interval_eval(*e.lhs, boxes);
            if (base.a >= 0.0) return inner;
            if (base.b <= 0.0) {
                for (auto& s : inner) s = flip(s);
                return inner;
            }
            for (auto& s : inner)
                if (s != MonotoneSign::none) s = MonotoneSign::unknown;
            return inner;
        }
    }
    throw std::logic_error("certify: bad op");
}

// Curvature certificate for the convex-corner path.
enum class Shape { affine, convex, concave, unknown };

Shape flip_shape(Shape s) {
    if (s == Shape::convex) return Shape::concave;
    if (s == Shape::concave) return Shape::convex;
    return s;
}

Shape combine_shape(Shape x, Shape y) {
    if (x == Shape::affine) return y;
    if (y == Shape::affine) return x;
    if (x == y) return x;
    return Shape::unknown;
}

Shape classify_shape(const Expr& e, const std::vector<RangeBounds>& boxes) {
    switch (e.op) {
        case ExprOp::constant:
        case ExprOp::column: return Shape::affine;
        case ExprOp::neg: return flip_shape(classify_shape(*e.lhs, boxes));
        case ExprOp::add:
            return combine_shape(classify_shape(*e.lhs, boxes), classify_shape(*e.rhs, boxes));
        case ExprOp::sub:
            return combine_shape(classify_shape(*e.lhs, boxes),
                                 flip_shape(classify_shape(*e.rhs, boxes)));
        case ExprOp::mul: {
            if (e.lhs->op == ExprOp::constant) {
                Shape s = classify_shape(*e.rhs, boxes);
                return e.lhs->value >= 0 ? s : flip_shape(s);
            }
            if (e.rhs->op == ExprOp::constant) {
                Shape s = classify_shape(*e.lhs, boxes);
                return e.rhs->value >= 0 ? s : flip_shape(s);
            }
            return Shape::unknown;
        }
        case ExprOp::div:
            if (e.rhs->op == ExprOp::constant && e.rhs->value != 0.0) {
                Shape s = classify_shape(*e.lhs, boxes);
                return e.rhs->value > 0 ? s : flip_shape(s);
            }
            return Shape::unknown;
        case ExprOp::pow: {
            if (e.exponent == 0) return Shape::affine;
            const Shape base_shape = classify_shape(*e.lhs, boxes);
            if (e.exponent == 1) return base_shape;
            if (base_shape == Shape::unknown) return Shape::unknown;
            const RangeBounds base = interval_eval(*e.lhs, boxes);
            if (e.exponent % 2 == 0) {
                if (base_shape == Shape::affine) return Shape::convex;
                // x^even is convex and nondecreasing on x >= 0
                if (base_shape == Shape::convex && base.a >= 0.0) return Shape::convex;
                if (base_shape == Shape::concave && base.b <= 0.0) return Shape::convex;
                return Shape::unknown;
            }
            // odd exponent >= 3: convex on the nonnegative side only
            if (base.a >= 0.0 &&
                (base_shape == Shape::affine || base_shape == Shape::convex))
                return Shape::convex;
            if (base.b <= 0.0 &&
                (base_shape == Shape::affine || base_shape == Shape::concave))
                return Shape::concave;
            return Shape::unknown;
        }
    }
    throw std::logic_error("classify_shape: bad op");
}

double corner_extreme(const Expr& e, const std::vector<RangeBounds>& boxes,
                      const std::vector<size_t>& cols, bool want_max) {
    std::vector<double> row(boxes.size(), 0.0);
    for (size_t c = 0; c < boxes.size(); ++c) row[c] = boxes[c].a;
    const size_t n = cols.size();
    double best = 0.0;
    bool first = true;
    for (uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        for (size_t i = 0; i < n; ++i)
            row[cols[i]] = (mask >> i) & 1 ? boxes[cols[i]].b : boxes[cols[i]].a;
        const double v = eval_expr(e, row);
        if (first || (want_max ? v > best : v < best)) best = v;
        first = false;
    }
    return best;
}

constexpr size_t kMaxCornerColumns = 20;

}  // namespace

std::vector<MonotoneSign> certify_monotone(const Expr& e,
                                           const std::vector<RangeBounds>& boxes) {
    return certify(e, boxes, boxes.size());
}

namespace {

DerivedRange checked(DerivedRange r) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi))
        throw UnboundedRangeError("derived range is not finite");
    return r;
}

}  // namespace

DerivedRange derive_range(const Expr& e, const std::vector<RangeBounds>& boxes) {
    const std::vector<size_t> cols = expr_columns(e);
    for (size_t c : cols)
        if (c >= boxes.size()) throw std::invalid_argument("derive_range: missing column box");

    const SignVec signs = certify_monotone(e, boxes);
    const bool monotone = std::all_of(cols.begin(), cols.end(), [&](size_t c) {
        return signs[c] != MonotoneSign::unknown;
    });
    if (monotone) {
        std::vector<double> lo_row(boxes.size()), hi_row(boxes.size());
        for (size_t c = 0; c < boxes.size(); ++c) lo_row[c] = hi_row[c] = boxes[c].a;
        for (size_t c : cols) {
            const bool inc = signs[c] != MonotoneSign::decreasing;
            lo_row[c] = inc ? boxes[c].a : boxes[c].b;
            hi_row[c] = inc ? boxes[c].b : boxes[c].a;
        }
        return checked({eval_expr(e, lo_row), eval_expr(e, hi_row), RangeMethod::monotone});
    }

    if (cols.size() <= kMaxCornerColumns) {
        const Shape shape = classify_shape(e, boxes);
        if (shape == Shape::convex) {
            const double hi = corner_extreme(e, boxes, cols, /*want_max=*/true);
            const double lo = interval_eval(e, boxes).a;  // no convex solver; sound, looser
            return checked({std::min(lo, hi), hi, RangeMethod::convex_corner});
        }
        if (shape == Shape::concave) {
            const double lo = corner_extreme(e, boxes, cols, /*want_max=*/false);
            const double hi = interval_eval(e, boxes).b;
            return checked({lo, std::max(lo, hi), RangeMethod::convex_corner});
        }
    }

    const RangeBounds ia = interval_eval(e, boxes);
    return checked({ia.a, ia.b, RangeMethod::interval_arithmetic});
}

}  // namespace aqe
