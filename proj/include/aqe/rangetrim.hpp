#pragma once
#include <cstdint>
#include <string>

#include "aqe/bounder.hpp"
#include "aqe/ci.hpp"

namespace aqe {

// Range trimming removes phantom outlier sensitivity: the lower bound is
// computed over the sample minus one occurrence of its maximum, against range
// [a, max seen] and population N-1, so it never depends on the catalog b.
// The upper bound mirrors this with the minimum and [min seen, b].
//
// Occurrence counts at the extremes keep the derived trimmed state exact when
// the extreme value is duplicated.
struct RangeTrimState {
    BounderState total;
    uint64_t count_at_min = 0;
    uint64_t count_at_max = 0;

    static RangeTrimState for_bounder(BounderId id) {
        RangeTrimState s;
        if (bounder_needs_values(id)) s.total = BounderState::with_values();
        return s;
    }

    void update(double v) {
        const bool first = total.m() == 0;
        const double old_min = first ? 0.0 : total.min_seen();
        const double old_max = first ? 0.0 : total.max_seen();
        total.update(v);
        if (first) {
            count_at_min = count_at_max = 1;
            return;
        }
        if (v < old_min) count_at_min = 1;
        else if (v == old_min) ++count_at_min;
        if (v > old_max) count_at_max = 1;
        else if (v == old_max) ++count_at_max;
    }

    uint64_t m() const { return total.m(); }
};

double rt_lower(const RangeTrimState& s, RangeBounds range, uint64_t n_population,
                double delta, BounderId inner);
double rt_upper(const RangeTrimState& s, RangeBounds range, uint64_t n_population,
                double delta, BounderId inner);

// [rt_lower(delta/2), rt_upper(delta/2)], mutually clamped.
ConfidenceInterval rt_interval(const RangeTrimState& s, RangeBounds range,
                               uint64_t n_population, double delta, BounderId inner);

// Bounder selection as exposed on the command line: an inner inequality plus
// the optional trimming wrapper.
struct Bounder {
    BounderId id = BounderId::bernstein;
    bool range_trim = false;

    static Bounder parse(const std::string& text);
    std::string name() const;

    ConfidenceInterval interval(const RangeTrimState& s, RangeBounds range,
                                uint64_t n_population, double delta) const;
    double lower(const RangeTrimState& s, RangeBounds range, uint64_t n_population,
                 double delta) const;
    double upper(const RangeTrimState& s, RangeBounds range, uint64_t n_population,
                 double delta) const;
};

}  // namespace aqe
