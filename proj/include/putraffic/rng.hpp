#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace putraffic {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent sub-stream seeds from
// (base seed, grid index, replicate index, ...) so results do not depend on
// execution order.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = mix64(base);
    for (auto k : keys) s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
    return s;
}

// Uniform on [0, 1) with 53 random bits. Spelled out rather than using
// std::uniform_real_distribution so streams are identical across standard
// library implementations.
inline double uniform01(Rng &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng &rng, double p) { return uniform01(rng) < p; }

// Inverse-CDF exponential variate with the given rate.
inline double exponential(Rng &rng, double rate) {
    return -std::log1p(-uniform01(rng)) / rate;
}

} // namespace putraffic
