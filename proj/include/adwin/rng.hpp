#pragma once

#include <initializer_list>
#include <random>

#include "adwin/common.hpp"

namespace adwin {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Child seed from a parent seed and a path of stream labels. Independent of
// call order, so realizations can be farmed out to any number of workers.
inline std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(parent);
    for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

inline cplx qpsk_symbol(Rng& rng) {
    static constexpr double a = 0.70710678118654752440;
    const auto bits = rng();
    return {(bits & 1U) ? a : -a, (bits & 2U) ? a : -a};
}

// Circularly-symmetric complex Gaussian with E|n|^2 = variance.
inline cplx complex_gaussian(Rng& rng, double variance = 1.0) {
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

}  // namespace adwin
