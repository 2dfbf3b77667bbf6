#pragma once

#include <cstdint>
#include <cmath>

namespace lmce {

// Deterministic splitmix64 generator. We do not use <random> distributions:
// their output is implementation-defined, and the suite reports promise
// byte-identical results for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [a, b)
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // standard normal via Marsaglia polar (deterministic draw order)
    double normal() {
        for (;;) {
            double x = 2.0 * uniform() - 1.0;
            double y = 2.0 * uniform() - 1.0;
            double s = x * x + y * y;
            if (s > 0.0 && s < 1.0) return x * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

private:
    std::uint64_t state_;
};

// Per-sample derived seed: batch loops draw sample i from Rng(derive_seed(seed, i)),
// which keeps results independent of thread count and iteration order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i) {
    std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ull * (i + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace lmce
