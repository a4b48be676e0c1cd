#include "aqe/bounder.hpp"

#include <algorithm>
#include <cmath>

namespace aqe {

namespace {

void require_sample(const BounderState& s, uint64_t n_population) {
    if (n_population < s.m())
        throw std::invalid_argument("bound: population size smaller than sample");
}

// Finite-population factor of the empirical Bernstein-Serfling result.
double ebs_rho(uint64_t m, uint64_t n) {
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    if (2 * m <= n) return 1.0 - (md - 1.0) / nd;
    return (1.0 - md / nd) * (1.0 + 1.0 / md);
}

constexpr double kEbsKappa = 7.0 / 3.0 + 3.0 / 1.4142135623730951;  // 7/3 + 3/sqrt(2)

double ebs_epsilon(const BounderState& s, RangeBounds range, uint64_t n_population,
                   double delta) {
    const double m = static_cast<double>(s.m());
    const double log_term = std::log(5.0 / delta);
    const double rho = ebs_rho(s.m(), n_population);
    const double sigma_hat = std::sqrt(s.variance());
    return sigma_hat * std::sqrt(2.0 * rho * log_term / m) +
           kEbsKappa * range.width() * log_term / m;
}

// Exact integral over [a, b] of g(Fhat(x)) for a step CDF, where g is the
// clipped band edge. `shift` is +eps for the upper edge, -eps for the lower.
double integrate_band(const std::vector<double>& sorted, RangeBounds range, double shift) {
    const double m = static_cast<double>(sorted.size());
    auto edge = [&](double cdf) { return std::min(1.0, std::max(0.0, cdf + shift)); };
    double total = 0.0;
    double prev = range.a;
    size_t i = 0;
    while (i < sorted.size()) {
        const double x = std::min(std::max(sorted[i], range.a), range.b);
        total += (x - prev) * edge(static_cast<double>(i) / m);
        prev = x;
        // advance over duplicates in one step
        size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        i = j;
    }
    total += (range.b - prev) * edge(1.0);
    return total;
}

}  // namespace

double hs_epsilon(uint64_t m, uint64_t n_population, RangeBounds range, double delta) {
    require_delta(delta);
    if (m == 0) throw std::invalid_argument("hs_epsilon: no samples");
    if (m > n_population) throw std::invalid_argument("hs_epsilon: m exceeds N");
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n_population);
    const double frac = 1.0 - (md - 1.0) / nd;
    return range.width() * std::sqrt(frac * std::log(1.0 / delta) / (2.0 * md));
}

double hs_lower(const BounderState& s, RangeBounds range, uint64_t n_population, double delta) {
    require_delta(delta);
    if (s.m() == 0) return range.a;
    require_sample(s, n_population);
    return range.clamp(s.mean() - hs_epsilon(s.m(), n_population, range, delta));
}

double hs_upper(const BounderState& s, RangeBounds range, uint64_t n_population, double delta) {
    require_delta(delta);
    if (s.m() == 0) return range.b;
    require_sample(s, n_population);
    return range.clamp(s.mean() + hs_epsilon(s.m(), n_population, range, delta));
}

double ebs_lower(const BounderState& s, RangeBounds range, uint64_t n_population, double delta) {
    require_delta(delta);
    if (s.m() == 0) return range.a;
    require_sample(s, n_population);
    return range.clamp(s.mean() - ebs_epsilon(s, range, n_population, delta));
}

double ebs_upper(const BounderState& s, RangeBounds range, uint64_t n_population, double delta) {
    require_delta(delta);
    if (s.m() == 0) return range.b;
    require_sample(s, n_population);
    return range.clamp(s.mean() + ebs_epsilon(s, range, n_population, delta));
}

double dkw_epsilon(uint64_t m, double delta) {
    require_delta(delta);
    if (m == 0) throw std::invalid_argument("dkw_epsilon: no samples");
    return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(m)));
}

double dkw_lower(const BounderState& s, RangeBounds range, double delta) {
    require_delta(delta);
    if (!s.tracks_values())
        throw std::logic_error("dkw_lower: state was not configured to retain samples");
    if (s.m() == 0) return range.a;
    std::vector<double> sorted = s.values();
    std::sort(sorted.begin(), sorted.end());
    const double eps = dkw_epsilon(s.m(), delta);
    return range.clamp(range.b - integrate_band(sorted, range, eps));
}

double dkw_upper(const BounderState& s, RangeBounds range, double delta) {
    require_delta(delta);
    if (!s.tracks_values())
        throw std::logic_error("dkw_upper: state was not configured to retain samples");
    if (s.m() == 0) return range.b;
    std::vector<double> sorted = s.values();
    std::sort(sorted.begin(), sorted.end());
    const double eps = dkw_epsilon(s.m(), delta);
    return range.clamp(range.b - integrate_band(sorted, range, -eps));
}

bool bounder_needs_values(BounderId id) { return id == BounderId::dkw; }

double bound_lower(BounderId id, const BounderState& s, RangeBounds range,
                   uint64_t n_population, double delta) {
    switch (id) {
        case BounderId::hoeffding: return hs_lower(s, range, n_population, delta);
        case BounderId::bernstein: return ebs_lower(s, range, n_population, delta);
        case BounderId::dkw: return dkw_lower(s, range, delta);
    }
    throw std::logic_error("bound_lower: unknown bounder");
}

double bound_upper(BounderId id, const BounderState& s, RangeBounds range,
                   uint64_t n_population, double delta) {
    switch (id) {
        case BounderId::hoeffding: return hs_upper(s, range, n_population, delta);
        case BounderId::bernstein: return ebs_upper(s, range, n_population, delta);
        case BounderId::dkw: return dkw_upper(s, range, delta);
    }
    throw std::logic_error("bound_upper: unknown bounder");
}

ConfidenceInterval bound_interval(BounderId id, const BounderState& s, RangeBounds range,
                                  uint64_t n_population, double delta) {
    require_delta(delta);
    const double half = delta / 2.0;
    double lo = bound_lower(id, s, range, n_population, half);
    double hi = bound_upper(id, s, range, n_population, half);
    if (lo > hi) hi = lo;
    return {lo, hi, delta};
}

std::string to_string(BounderId id) {
    switch (id) {
        case BounderId::hoeffding: return "hoeffding";
        case BounderId::bernstein: return "bernstein";
        case BounderId::dkw: return "dkw";
    }
    return "?";
}

}  // namespace aqe
