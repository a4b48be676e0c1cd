#pragma once
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aqe/ci.hpp"

namespace aqe {

// Incremental sufficient statistics for one aggregate view. Mean and the
// centered second moment are maintained with Welford updates; sum_sq() is
// derived from them, so the naive sum-of-squares cancellation never happens
// at bound time. The raw value multiset is retained only when the bounder
// needs the empirical CDF.
class BounderState {
public:
    BounderState() = default;
    static BounderState with_values() {
        BounderState s;
        s.values_.emplace();
        return s;
    }

    void update(double v) {
        if (!std::isfinite(v)) throw std::invalid_argument("update: value must be finite");
        ++m_;
        sum_ += v;
        const double d = v - mean_;
        mean_ += d / static_cast<double>(m_);
        m2_ += d * (v - mean_);
        if (m_ == 1) {
            min_ = max_ = v;
        } else {
            if (v < min_) min_ = v;
            if (v > max_) max_ = v;
        }
        if (values_) values_->push_back(v);
    }

    uint64_t m() const { return m_; }
    double sum() const { return sum_; }
    double sum_sq() const { return m_ == 0 ? 0.0 : m2_ + sum_ * sum_ / static_cast<double>(m_); }
    double mean() const {
        if (m_ == 0) throw std::logic_error("mean: empty state");
        return sum_ / static_cast<double>(m_);
    }
    // Biased sample variance (1/m)*sum (x - mean)^2, the estimator the
    // empirical Bernstein-Serfling inequality is stated for.
    double variance() const {
        if (m_ == 0) throw std::logic_error("variance: empty state");
        return std::max(0.0, m2_ / static_cast<double>(m_));
    }
    double min_seen() const {
        if (m_ == 0) throw std::logic_error("min_seen: empty state");
        return min_;
    }
    double max_seen() const {
        if (m_ == 0) throw std::logic_error("max_seen: empty state");
        return max_;
    }
    bool tracks_values() const { return values_.has_value(); }
    const std::vector<double>& values() const {
        if (!values_) throw std::logic_error("values: state does not retain samples");
        return *values_;
    }

    // State for the sample with one occurrence of `v` removed. Exactly one
    // copy is dropped even under duplicates, matching the unique-label
    // construction that fixes ties.
    BounderState without_one(double v) const {
        if (m_ == 0) throw std::logic_error("without_one: empty state");
        BounderState out;
        out.m_ = m_ - 1;
        out.sum_ = sum_ - v;
        if (out.m_ > 0) {
            out.mean_ = out.sum_ / static_cast<double>(out.m_);
            out.m2_ = std::max(0.0, m2_ - (v - out.mean_) * (v - mean_));
            // [min_, max_] still encloses the remainder; the exact extremes are
            // recomputed below only when the value multiset is retained.
            out.min_ = min_;
            out.max_ = max_;
        }
        if (values_) {
            out.values_.emplace();
            out.values_->reserve(values_->size() - 1);
            bool removed = false;
            for (double x : *values_) {
                if (!removed && x == v) {
                    removed = true;
                    continue;
                }
                out.values_->push_back(x);
            }
            if (!removed) throw std::invalid_argument("without_one: value not present");
            if (out.m_ > 0) {
                double lo = (*out.values_)[0], hi = lo;
                for (double x : *out.values_) {
                    lo = std::min(lo, x);
                    hi = std::max(hi, x);
                }
                out.min_ = lo;
                out.max_ = hi;
            }
        }
        return out;
    }

private:
    uint64_t m_ = 0;
    double sum_ = 0.0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double min_ = 0.0;
    double max_ = 0.0;
    std::optional<std::vector<double>> values_;
};

// --- Hoeffding-Serfling ---------------------------------------------------
//
// eps = (b-a) * sqrt((1 - (m-1)/N) * ln(1/delta) / (2m)), the inversion of
// the without-replacement maximal inequality at k = m.

double hs_epsilon(uint64_t m, uint64_t n_population, RangeBounds range, double delta);
double hs_lower(const BounderState& s, RangeBounds range, uint64_t n_population, double delta);
double hs_upper(const BounderState& s, RangeBounds range, uint64_t n_population, double delta);

// --- Empirical Bernstein-Serfling -----------------------------------------
//
// mean -+ ( sigma_hat * sqrt(2 rho_m ln(5/delta) / m) + kappa (b-a) ln(5/delta) / m )
// with rho_m = 1-(m-1)/N for m <= N/2, else (1-m/N)(1+1/m), kappa = 7/3 + 3/sqrt(2).

double ebs_lower(const BounderState& s, RangeBounds range, uint64_t n_population, double delta);
double ebs_upper(const BounderState& s, RangeBounds range, uint64_t n_population, double delta);

// --- DKW / Anderson ---------------------------------------------------------
//
// mean of F equals b - integral_a^b F, so shifting the empirical CDF by
// eps_dkw = sqrt(ln(2/delta) / (2m)) in each direction and integrating the
// step function exactly gives mean bounds. Valid without replacement for any
// population size, which the interface N parameter therefore ignores.

double dkw_epsilon(uint64_t m, double delta);
double dkw_lower(const BounderState& s, RangeBounds range, double delta);
double dkw_upper(const BounderState& s, RangeBounds range, double delta);

// --- Common dispatch --------------------------------------------------------

enum class BounderId { hoeffding, bernstein, dkw };

bool bounder_needs_values(BounderId id);

double bound_lower(BounderId id, const BounderState& s, RangeBounds range,
                   uint64_t n_population, double delta);
double bound_upper(BounderId id, const BounderState& s, RangeBounds range,
                   uint64_t n_population, double delta);

// Two one-sided (1 - delta/2) bounds union-bounded into a (1 - delta) interval.
ConfidenceInterval bound_interval(BounderId id, const BounderState& s, RangeBounds range,
                                  uint64_t n_population, double delta);

std::string to_string(BounderId id);

}  // namespace aqe
