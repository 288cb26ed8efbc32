#pragma once

#include <random>

#include "adwin/adwin.hpp"

namespace adwin::fixtures {

// Two users at desk scale: N and 2N with CP rate 3/32 (K = 3N/32), four and
// two symbols, both in one 7.68 MHz band.
inline ScenarioConfig toy_config(std::size_t n = 32, std::size_t m_small = 12) {
    ScenarioConfig c;
    c.bandwidth_hz = 7.68e6;
    c.cp_rate = {3, 32};
    c.guard_band_hz = 7.68e6 / static_cast<double>(n);
    c.dl_dmrs = DmrsPattern::every_nth(2);
    c.ul_dmrs = DmrsPattern::every_nth(2);
    UserConfig a;
    a.name = "fast";
    a.fft_size = n;
    a.subcarrier_spacing_hz = 7.68e6 / static_cast<double>(n);
    a.num_symbols = 4;
    a.num_subcarriers = m_small;
    a.snr_db = 15;
    UserConfig b = a;
    b.name = "slow";
    b.fft_size = 2 * n;
    b.subcarrier_spacing_hz = a.subcarrier_spacing_hz / 2;
    b.num_symbols = 2;
    b.num_subcarriers = 2 * m_small;
    b.snr_db = 15;
    c.users = {a, b};
    return c;
}

inline ScenarioConfig single_user_config(std::size_t n, std::size_t m, std::size_t l, CpRate cp = {3, 32}) {
    ScenarioConfig c;
    c.bandwidth_hz = 7.68e6;
    c.cp_rate = cp;
    c.guard_band_hz = 0;
    c.dl_dmrs = DmrsPattern::every_nth(2);
    UserConfig a;
    a.name = "solo";
    a.fft_size = n;
    a.subcarrier_spacing_hz = 7.68e6 / static_cast<double>(n);
    a.num_symbols = l;
    a.num_subcarriers = m;
    c.users = {a};
    return c;
}

inline std::vector<ResourceGrid> make_grids(const Scenario& sc, const DmrsPattern& p, std::uint64_t seed) {
    std::vector<ResourceGrid> g;
    for (std::size_t u = 0; u < sc.num_users(); ++u) g.push_back(make_resource_grid(sc.users[u], p, derive_seed(seed, {u})));
    return g;
}

// K + 1 taps, the last one zero, decaying power; `taps` nonzero leading taps.
inline std::vector<cplx> random_cir(std::size_t K, std::size_t taps, std::uint64_t seed, double gain = 1.0) {
    Rng rng(seed);
    std::vector<cplx> h(K + 1);
    for (std::size_t t = 0; t < std::min(taps, K); ++t) h[t] = complex_gaussian(rng, gain * std::pow(0.5, static_cast<double>(t)));
    return h;
}

inline std::vector<std::vector<cplx>> random_cirs(const Scenario& sc, std::size_t taps, std::uint64_t seed, double gain = 1.0) {
    std::vector<std::vector<cplx>> h;
    for (std::size_t u = 0; u < sc.num_users(); ++u)
        h.push_back(random_cir(sc.users[u].numerology.cp_len, taps, derive_seed(seed, {100 + u}), gain));
    return h;
}

inline std::vector<IGrid> random_plan(const Scenario& sc, std::uint64_t seed, double density = 1.0) {
    Rng rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<IGrid> plan;
    for (const auto& u : sc.users) {
        std::uniform_int_distribution<int> dur(0, static_cast<int>(u.numerology.cp_len));
        IGrid p(u.num_subcarriers, u.numerology.num_symbols, 0);
        for (auto& v : p.raw()) v = coin(rng) < density ? dur(rng) : 0;
        plan.push_back(std::move(p));
    }
    return plan;
}

inline std::vector<cplx> random_samples(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<cplx> v(n);
    for (auto& x : v) x = complex_gaussian(rng);
    return v;
}

// Reference DFT-matrix synthesis of one user's slot (no FFT library).
inline std::vector<cplx> dft_synthesis(const UserAllocation& u, const ResourceGrid& g) {
    const std::size_t N = u.numerology.fft_size, K = u.numerology.cp_len;
    std::vector<cplx> out;
    for (std::size_t l = 0; l < u.numerology.num_symbols; ++l) {
        std::vector<cplx> body(N);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t m = 0; m < u.num_subcarriers; ++m)
                body[n] += g.symbol(m, l) *
                           std::exp(cplx(0, -two_pi * static_cast<double>(u.subcarrier_index(m)) * static_cast<double>(n) /
                                                static_cast<double>(N))) /
                           std::sqrt(static_cast<double>(N));
        out.insert(out.end(), body.end() - static_cast<std::ptrdiff_t>(K), body.end());
        out.insert(out.end(), body.begin(), body.end());
    }
    return out;
}

inline double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
    double e = 0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return a.size() == b.size() ? e : std::numeric_limits<double>::infinity();
}

}  // namespace adwin::fixtures
