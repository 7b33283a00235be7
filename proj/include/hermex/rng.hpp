#pragma once

#include <cmath>
#include <cstdint>

namespace hermex {
namespace detail {

// splitmix64 finalizer: full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in (0, 1]: top 53 bits, zero mapped to the smallest step.
inline double uniform_unit(std::uint64_t bits) {
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
}

}  // namespace detail

// Standard normal draw addressed by (seed, path, step).  Counter-based:
// no stream state, so ensembles are reproducible and order-independent.
inline double gaussian_draw(std::uint64_t seed, std::uint64_t path, std::uint64_t step) {
    const std::uint64_t key = detail::mix64(detail::mix64(seed) ^ path);
    const std::uint64_t w1 = detail::mix64(key ^ (2 * step));
    const std::uint64_t w2 = detail::mix64(key ^ (2 * step + 1));
    const double r = std::sqrt(-2.0 * std::log(detail::uniform_unit(w1)));
    const double theta = 6.283185307179586476925286766559 * detail::uniform_unit(w2);
    return r * std::cos(theta);
}

}  // namespace hermex
