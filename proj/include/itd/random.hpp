#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace itd {

using Rng = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace detail

/// Purposes of derived random streams. Streams with different tags never share state.
enum class Stream : std::uint64_t {
    particles = 1,
    candidates = 2,
    rounding = 3,
    experiment = 4,
    monte_carlo = 5,
};

/**
Derive an independent generator from a master seed and a path of tags
(stage index, source index, ...). The same inputs always give the same stream.
*/
inline Rng derive_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = detail::splitmix64(master);
    for (auto tag : path) h = detail::splitmix64(h ^ detail::splitmix64(tag + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(detail::splitmix64(h)),
                      static_cast<std::uint32_t>(detail::splitmix64(h) >> 32)};
    return Rng(seq);
}

inline Rng derive_rng(std::uint64_t master, Stream stream, std::initializer_list<std::uint64_t> path = {}) {
    std::uint64_t h = detail::splitmix64(master ^ (static_cast<std::uint64_t>(stream) << 56));
    for (auto tag : path) h = detail::splitmix64(h ^ detail::splitmix64(tag + 0x632be59bd9b4e019ULL));
    return derive_rng(h, {static_cast<std::uint64_t>(stream)});
}

} // namespace itd
