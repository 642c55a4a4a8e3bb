#pragma once

#include <cstdint>

namespace pq {

inline constexpr std::uint64_t kDefaultSeed = 20250808ULL;

// SplitMix64. Used for seeded sample points and bumps so golden values are
// reproducible across platforms; std::mt19937 distributions are not portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed = kDefaultSeed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

} // namespace pq
