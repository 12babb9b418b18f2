#ifndef RINGLWR_RNG_HPP
#define RINGLWR_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace ringlwr {

// All randomness in the project flows through mt19937_64 plus the helpers
// below. std::uniform_*_distribution is implementation-defined, so we never
// use it: draws must be identical on every platform for a given seed.

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n) by rejection; unbiased and portable.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive a named sub-seed from the master seed, so that e.g. network
/// initialization and collocation sampling consume independent streams.
inline std::uint64_t sub_seed(std::uint64_t master, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(master ^ h);
}

} // namespace ringlwr

#endif
