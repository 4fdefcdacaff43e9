#pragma once

// Deterministic draws on top of mt19937_64.  The engine's output stream is
// pinned by the standard; the standard library distributions are not, so
// uniforms are built from raw bits to keep generated files identical across
// platforms.

#include <cstdint>
#include <random>

namespace bfi {

inline double uniform01(std::mt19937_64& eng) {
    return double(eng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double log_uniform(std::mt19937_64& eng, double lo, double hi) {
    return lo * std::pow(hi / lo, uniform01(eng));
}

// unbiased integer in [0, n)
inline std::uint64_t uniform_below(std::mt19937_64& eng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = eng();
    } while (x >= limit);
    return x % n;
}

}  // namespace bfi
