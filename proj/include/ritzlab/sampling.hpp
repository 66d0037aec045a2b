#pragma once

#include <cstdint>
#include <random>

#include "ritzlab/geometry.hpp"

namespace ritzlab {

/// Deterministic uniform sampling helpers. All experiment randomness goes
/// through this wrapper so reruns are bit-identical.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // in [0,1)
        return (gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int n) {  // in [0,n)
        return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
    }

private:
    std::mt19937_64 gen_;
};

/// Van der Corput radical inverse.
inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * (i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

/// Low-discrepancy point in the unit square (Halton, bases 2 and 3).
inline Vec2 halton2(std::uint64_t i) {
    return {radical_inverse(i + 1, 2), radical_inverse(i + 1, 3)};
}

}  // namespace ritzlab
