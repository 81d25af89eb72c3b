#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace geomsplat {

// Seedable RNG with distribution code owned here, so streams are identical
// across standard libraries and compilers.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one fresh pair per call keeps the stream position predictable.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // uniform integer in [0, n)
    uint64_t index(uint64_t n) {
        return static_cast<uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    Rng fork(uint64_t salt) { return Rng(engine_() ^ (salt * 0x9e3779b97f4a7c15ULL)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace geomsplat
