#pragma once
// Independent test oracles: plain enumeration and batch-recomputation helpers
// kept deliberately naive so they cannot share bugs with the library paths
// they check.
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

// Visit every size-m index subset of {0..n-1} in lexicographic order.
inline void for_each_subset(size_t n, size_t m,
                            const std::function<void(const std::vector<size_t>&)>& fn) {
    std::vector<size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    if (m > n) return;
    for (;;) {
        fn(idx);
        // advance
        size_t i = m;
        while (i > 0) {
            --i;
            if (idx[i] != i + n - m) break;
            if (i == 0) return;
        }
        if (idx[i] == i + n - m) return;
        ++idx[i];
        for (size_t j = i + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
    }
}

inline double mean_of(const std::vector<double>& xs) {
    double s = 0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Exhaustive coverage of an interval procedure over all C(N,m) samples of a
// dataset: returns {samples, misses}.
struct Coverage {
    uint64_t samples = 0;
    uint64_t misses = 0;
    double miss_rate() const {
        return samples == 0 ? 0.0 : static_cast<double>(misses) / static_cast<double>(samples);
    }
};

inline Coverage enumerate_coverage(
    const std::vector<double>& dataset, size_t m,
    const std::function<std::pair<double, double>(const std::vector<double>&)>& interval) {
    Coverage cov;
    const double truth = mean_of(dataset);
    for_each_subset(dataset.size(), m, [&](const std::vector<size_t>& idx) {
        std::vector<double> sample;
        sample.reserve(m);
        for (size_t i : idx) sample.push_back(dataset[i]);
        const auto [lo, hi] = interval(sample);
        ++cov.samples;
        if (truth < lo || truth > hi) ++cov.misses;
    });
    return cov;
}

inline uint64_t binomial(uint64_t n, uint64_t k) {
    if (k > n) return 0;
    uint64_t out = 1;
    for (uint64_t i = 0; i < k; ++i) out = out * (n - i) / (i + 1);
    return out;
}

}  // namespace oracle
