#pragma once
#include <cstdint>

#include "aqe/ci.hpp"
#include "aqe/rangetrim.hpp"

namespace aqe {

// Selectivity bookkeeping for one aggregate view: after r of the scramble's R
// rows have been processed, m_v of them belonged to the view.
struct SelectivityState {
    uint64_t rows_scanned = 0;   // r
    uint64_t rows_in_view = 0;   // m_v
    uint64_t scramble_rows = 0;  // R
};

// Hoeffding-Serfling on 0/1 membership indicators:
//   eps = sqrt(ln(2/delta) / (2r) * (1 - (r-1)/R))
// intersected with the deterministic feasibility interval
//   [m_v/R, 1 - (r - m_v)/R].
ConfidenceInterval selectivity_ci(const SelectivityState& s, double delta);

// Selectivity interval scaled by R, endpoints rounded outward to integers.
ConfidenceInterval count_ci(const SelectivityState& s, double delta);

// N+ = ceil((m_v/r + sqrt(ln(1/((1-alpha) delta)) / (2r) * (1 - (r-1)/R))) * R),
// capped at R - (r - m_v). Holds with probability >= 1 - (1-alpha) delta.
uint64_t upper_bound_n(const SelectivityState& s, double delta, double alpha);

// [Lbound(S, a, b, N+, alpha*delta/2), Rbound(S, a, b, N+, alpha*delta/2)]:
// a (1-delta) interval for the view mean without knowing the view size,
// licensed by dataset-size monotonicity of the bounder.
ConfidenceInterval avg_ci_unknown_size(const Bounder& bounder, const RangeTrimState& state,
                                       const SelectivityState& sel, RangeBounds range,
                                       double delta, double alpha);

// Given a (1-delta/2) COUNT interval and a (1-delta/2) AVG interval, the
// min/max over the four endpoint products contains count*avg for every covered
// pair, which generalizes the nonnegative-endpoint product formula.
ConfidenceInterval sum_ci(const ConfidenceInterval& count, const ConfidenceInterval& avg);

// Per-view share of the query error budget.
double budget(double delta_query, uint64_t n_views);

constexpr double kDefaultAlpha = 0.99;

}  // namespace aqe
