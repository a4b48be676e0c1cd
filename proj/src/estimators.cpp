#include "aqe/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aqe {

namespace {

void check(const SelectivityState& s) {
    if (s.scramble_rows == 0)
        throw std::invalid_argument("selectivity state needs a nonempty scramble");
    if (s.rows_in_view > s.rows_scanned || s.rows_scanned > s.scramble_rows)
        throw std::invalid_argument("selectivity state violates m_v <= r <= R");
}

}  // namespace

ConfidenceInterval selectivity_ci(const SelectivityState& s, double delta) {
    require_delta(delta);
    check(s);
    const double big_r = static_cast<double>(s.scramble_rows);
    // Deterministic feasibility: the unseen R-r rows can add at most R-r
    // members, and the m_v already seen are certain.
    const double feas_lo = static_cast<double>(s.rows_in_view) / big_r;
    const double feas_hi =
        1.0 - static_cast<double>(s.rows_scanned - s.rows_in_view) / big_r;
    if (s.rows_scanned == 0) return {0.0, 1.0, delta};
    const double r = static_cast<double>(s.rows_scanned);
    const double p_hat = static_cast<double>(s.rows_in_view) / r;
    const double eps =
        std::sqrt(std::log(2.0 / delta) / (2.0 * r) * (1.0 - (r - 1.0) / big_r));
    double lo = std::max(p_hat - eps, feas_lo);
    double hi = std::min(p_hat + eps, feas_hi);
    lo = std::min(std::max(lo, 0.0), 1.0);
    hi = std::min(std::max(hi, 0.0), 1.0);
    if (lo > hi) hi = lo;
    return {lo, hi, delta};
}

ConfidenceInterval count_ci(const SelectivityState& s, double delta) {
    const ConfidenceInterval sel = selectivity_ci(s, delta);
    const double big_r = static_cast<double>(s.scramble_rows);
    return {std::floor(sel.lower * big_r), std::ceil(sel.upper * big_r), delta};
}

uint64_t upper_bound_n(const SelectivityState& s, double delta, double alpha) {
    require_delta(delta);
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0, 1)");
    check(s);
    const double big_r = static_cast<double>(s.scramble_rows);
    const uint64_t cap = s.scramble_rows - (s.rows_scanned - s.rows_in_view);
    if (s.rows_scanned == 0) return cap;
    const double r = static_cast<double>(s.rows_scanned);
    const double eps = std::sqrt(std::log(1.0 / ((1.0 - alpha) * delta)) / (2.0 * r) *
                                 (1.0 - (r - 1.0) / big_r));
    const double raw = (static_cast<double>(s.rows_in_view) / r + eps) * big_r;
    uint64_t n_plus = static_cast<uint64_t>(std::ceil(raw));
    n_plus = std::min(n_plus, cap);
    return std::max(n_plus, s.rows_in_view);
}

ConfidenceInterval avg_ci_unknown_size(const Bounder& bounder, const RangeTrimState& state,
                                       const SelectivityState& sel, RangeBounds range,
                                       double delta, double alpha) {
    require_delta(delta);
    const uint64_t n_plus = upper_bound_n(sel, delta, alpha);
    const double half = alpha * delta / 2.0;
    double lo = bounder.lower(state, range, n_plus, half);
    double hi = bounder.upper(state, range, n_plus, half);
    if (lo > hi) hi = lo;
    return {lo, hi, delta};
}

ConfidenceInterval sum_ci(const ConfidenceInterval& count, const ConfidenceInterval& avg) {
    const double products[4] = {count.lower * avg.lower, count.lower * avg.upper,
                                count.upper * avg.lower, count.upper * avg.upper};
    double lo = products[0], hi = products[0];
    for (double p : products) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    return {lo, hi, count.delta + avg.delta};
}

double budget(double delta_query, uint64_t n_views) {
    require_delta(delta_query);
    if (n_views == 0) throw std::invalid_argument("budget: need at least one view");
    return delta_query / static_cast<double>(n_views);
}

}  // namespace aqe
