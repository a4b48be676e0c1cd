#pragma once
#include <algorithm>
#include <stdexcept>

namespace aqe {

// Closed interval [lower, upper] that fails to contain the true aggregate
// with probability at most delta.
struct ConfidenceInterval {
    double lower;
    double upper;
    double delta;

    double width() const { return upper - lower; }
    bool contains(double v) const { return lower <= v && v <= upper; }
};

// A-priori column bounds from the catalog: a <= min(column), max(column) <= b.
struct RangeBounds {
    double a;
    double b;

    RangeBounds(double a_, double b_) : a(a_), b(b_) {
        if (!(a <= b)) throw std::invalid_argument("RangeBounds: a must be <= b");
    }

    double width() const { return b - a; }
    double clamp(double x) const { return std::min(std::max(x, a), b); }
};

inline void require_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("delta must lie in (0, 1)");
}

}  // namespace aqe
