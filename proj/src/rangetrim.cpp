#include "aqe/rangetrim.hpp"

#include <algorithm>
#include <stdexcept>

namespace aqe {

namespace {

void require_args(const RangeTrimState& s, uint64_t n_population, double delta) {
    require_delta(delta);
    if (n_population < s.m())
        throw std::invalid_argument("range trim: population size smaller than sample");
}

}  // namespace

double rt_lower(const RangeTrimState& s, RangeBounds range, uint64_t n_population,
                double delta, BounderId inner) {
    require_args(s, n_population, delta);
    if (s.m() <= 1) return range.a;  // trimmed sample would be empty
    const double b_trim = s.total.max_seen();
    const BounderState trimmed = s.total.without_one(b_trim);
    const double lo =
        bound_lower(inner, trimmed, RangeBounds(range.a, b_trim), n_population - 1, delta);
    // Already within [a, b_trim] and b_trim <= b, so clamping to [a, b] cannot
    // bind above; the result is therefore independent of b.
    return range.clamp(lo);
}

double rt_upper(const RangeTrimState& s, RangeBounds range, uint64_t n_population,
                double delta, BounderId inner) {
    require_args(s, n_population, delta);
    if (s.m() <= 1) return range.b;
    const double a_trim = s.total.min_seen();
    const BounderState trimmed = s.total.without_one(a_trim);
    const double hi =
        bound_upper(inner, trimmed, RangeBounds(a_trim, range.b), n_population - 1, delta);
    return range.clamp(hi);
}

ConfidenceInterval rt_interval(const RangeTrimState& s, RangeBounds range,
                               uint64_t n_population, double delta, BounderId inner) {
    require_delta(delta);
    const double half = delta / 2.0;
    double lo = rt_lower(s, range, n_population, half, inner);
    double hi = rt_upper(s, range, n_population, half, inner);
    if (lo > hi) hi = lo;
    return {lo, hi, delta};
}

Bounder Bounder::parse(const std::string& text) {
    std::string base = text;
    bool rt = false;
    const auto plus = text.find('+');
    if (plus != std::string::npos) {
        base = text.substr(0, plus);
        const std::string suffix = text.substr(plus + 1);
        if (suffix != "rt") throw std::invalid_argument("unknown bounder suffix: " + suffix);
        rt = true;
    }
    BounderId id;
    if (base == "hoeffding") id = BounderId::hoeffding;
    else if (base == "bernstein") id = BounderId::bernstein;
    else if (base == "dkw") id = BounderId::dkw;
    else throw std::invalid_argument("unknown bounder: " + text);
    return Bounder{id, rt};
}

std::string Bounder::name() const { return range_trim ? to_string(id) + "+rt" : to_string(id); }

ConfidenceInterval Bounder::interval(const RangeTrimState& s, RangeBounds range,
                                     uint64_t n_population, double delta) const {
    if (range_trim) return rt_interval(s, range, n_population, delta, id);
    return bound_interval(id, s.total, range, n_population, delta);
}

double Bounder::lower(const RangeTrimState& s, RangeBounds range, uint64_t n_population,
                      double delta) const {
    if (range_trim) return rt_lower(s, range, n_population, delta, id);
    return bound_lower(id, s.total, range, n_population, delta);
}

double Bounder::upper(const RangeTrimState& s, RangeBounds range, uint64_t n_population,
                      double delta) const {
    if (range_trim) return rt_upper(s, range, n_population, delta, id);
    return bound_upper(id, s.total, range, n_population, delta);
}

}  // namespace aqe
