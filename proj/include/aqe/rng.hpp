#pragma once
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace aqe {

// splitmix64: used for seeding and for deriving independent substreams
// (stream k of master seed s is splitmix64(s ^ golden*k)). Output sequence
// is fixed by the reference constants, so shuffles are portable.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t derive_stream(uint64_t seed, uint64_t stream) {
    uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    return splitmix64(s);
}

// xoshiro256** by Blackman/Vigna. State seeded via splitmix64 so that a
// 64-bit seed expands to the full 256-bit state.
class Xoshiro256 {
public:
    using result_type = uint64_t;

    explicit Xoshiro256(uint64_t seed = 0) {
        uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    static constexpr uint64_t min() { return 0; }
    static constexpr uint64_t max() { return std::numeric_limits<uint64_t>::max(); }

    uint64_t operator()() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Unbiased bounded draw (Lemire's rejection method); part of the fixed
    // stream discipline, do not substitute std::uniform_int_distribution
    // (its output is implementation-defined).
    uint64_t below(uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("below: bound must be positive");
        uint64_t x = (*this)();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        uint64_t l = static_cast<uint64_t>(m);
        if (l < bound) {
            uint64_t t = (0 - bound) % bound;
            while (l < t) {
                x = (*this)();
                m = static_cast<__uint128_t>(x) * bound;
                l = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double unit() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

// Fisher-Yates, descending index order, one bounded draw per step.
template <typename T>
void shuffle_in_place(std::vector<T>& items, Xoshiro256& rng) {
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

inline std::vector<uint64_t> random_permutation(uint64_t n, Xoshiro256& rng) {
    std::vector<uint64_t> perm(n);
    for (uint64_t i = 0; i < n; ++i) perm[i] = i;
    shuffle_in_place(perm, rng);
    return perm;
}

}  // namespace aqe
