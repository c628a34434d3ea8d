#ifndef OMICSFLOW_CORE_RANDOM_HPP
#define OMICSFLOW_CORE_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

/**
 * @file random.hpp
 * @brief Seed derivation so that every stochastic task owns an independent, reproducible stream.
 */

namespace omicsflow {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * Derives a child seed from a parent seed and a list of task coordinates,
 * e.g. `derive_seed(seed, group, index)`.
 * The result depends only on the arguments, never on scheduling.
 */
template<typename... Keys>
std::uint64_t derive_seed(std::uint64_t seed, Keys... keys) {
    std::uint64_t h = mix64(seed);
    ((h = mix64(h ^ mix64(static_cast<std::uint64_t>(keys)))), ...);
    return h;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline Rng make_rng(std::uint64_t seed) {
    return Rng(seed);
}

/**
 * Uniform double in [0, 1) from the top 53 bits.
 * Used instead of `std::uniform_real_distribution` where bit-for-bit reproducibility across standard libraries matters.
 */
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

/// Fisher-Yates with `uniform_index`, independent of the standard library's shuffle.
template<typename Vec>
void shuffle_in_place(Vec& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = uniform_index(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

}

#endif
