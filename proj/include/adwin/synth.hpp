#pragma once

#include "adwin/fft.hpp"
#include "adwin/grid.hpp"
#include "adwin/taper.hpp"

namespace adwin {

struct SampleStream {
    enum class Origin { Base, TxWindowed, Received };

    std::vector<cplx> samples;
    double sample_rate_hz = 0.0;
    Origin origin = Origin::Base;

    std::size_t size() const { return samples.size(); }
};

// Per-user transmit window durations T_u, each in [0, K_u].
using TxWindowPlan = std::vector<IGrid>;

inline TxWindowPlan zero_tx_plan(const Scenario& sc) {
    TxWindowPlan p;
    for (const auto& u : sc.users) p.emplace_back(u.num_subcarriers, u.numerology.num_symbols, 0);
    return p;
}

inline void check_grid(const UserAllocation& u, const ResourceGrid& g) {
    if (!g.data.same_shape(u.num_subcarriers, u.numerology.num_symbols) || !g.pilots.same_shape(g.data))
        throw std::invalid_argument("resource grid does not match allocation " + u.name);
}

// CP-OFDM samples of one user's grid: each symbol is the normalized synthesis
// transform of its mapped subcarriers, preceded by a copy of its last K samples.
inline std::vector<cplx> synthesize_user(const UserAllocation& u, const ResourceGrid& g) {
    check_grid(u, g);
    const auto& nm = u.numerology;
    const std::size_t N = nm.fft_size, K = nm.cp_len;
    std::vector<cplx> out(nm.slot_len());
    std::vector<cplx> bins(N), body(N);
    for (std::size_t l = 0; l < nm.num_symbols; ++l) {
        std::fill(bins.begin(), bins.end(), cplx{});
        for (std::size_t m = 0; m < u.num_subcarriers; ++m) bins[wrap_index(u.subcarrier_index(m), N)] = g.symbol(m, l);
        Fft::synthesis(bins, body);
        cplx* sym = out.data() + l * nm.symbol_len();
        std::copy(body.end() - static_cast<std::ptrdiff_t>(K), body.end(), sym);
        std::copy(body.begin(), body.end(), sym + K);
    }
    return out;
}

inline SampleStream synthesize_cp_ofdm(const Scenario& sc, std::span<const ResourceGrid> grids) {
    if (grids.size() != sc.num_users()) throw std::invalid_argument("one resource grid per user required");
    SampleStream s{std::vector<cplx>(sc.slot_len()), sc.sample_rate_hz(), SampleStream::Origin::Base};
    for (std::size_t u = 0; u < sc.num_users(); ++u) {
        const auto part = synthesize_user(sc.users[u], grids[u]);
        for (std::size_t i = 0; i < part.size(); ++i) s.samples[i] += part[i];
    }
    return s;
}

// The per-sample change that tx windowing RE (m, l) with the given rising
// edge (length T) makes to CP sample k < T of symbol l:
//   (1 - rise[k]) exp(-j2pi M k/N)/sqrt(N) * (X[m,l-1] - exp(j2pi M K/N) X[m,l])
// The first symbol has a silent predecessor. Counts 10 mults and 6 adds per
// sample when `ops` is given.
inline void tx_window_deltas(const UserAllocation& u, const ResourceGrid& g, std::size_t m, std::size_t l,
                             std::span<const double> edge, std::span<cplx> out, OpCounter* ops = nullptr) {
    const std::size_t N = u.numerology.fft_size, K = u.numerology.cp_len;
    const std::size_t T = edge.size();
    if (T > K) throw std::invalid_argument("tx window duration exceeds CP length");
    if (out.size() < T) throw std::invalid_argument("delta buffer too small");
    const double M = static_cast<double>(u.subcarrier_index(m));
    const cplx prev = l > 0 ? g.symbol(m, l - 1) : cplx{};
    const cplx cur = g.symbol(m, l);
    const cplx cp_rot = phasor(two_pi * M * static_cast<double>(K) / static_cast<double>(N));
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    for (std::size_t k = 0; k < T; ++k) {
        const cplx ph = phasor(-two_pi * M * static_cast<double>(k) / static_cast<double>(N)) * inv_sqrt_n;
        const cplx diff = prev - cp_rot * cur;
        out[k] = (1.0 - edge[k]) * (ph * diff);
    }
    if (ops) {
        ops->mults += 10 * T;
        ops->adds += 6 * T;
    }
}

inline cplx tx_window_sample_delta(const UserAllocation& u, const ResourceGrid& g, std::size_t m, std::size_t l,
                                   std::size_t k, std::span<const double> edge) {
    if (k >= edge.size()) throw std::out_of_range("sample index outside the windowed range");
    std::vector<cplx> d(edge.size());
    tx_window_deltas(u, g, m, l, edge, d);
    return d[k];
}

// Adds one user's windowing deltas to `samples` in place.
inline void add_tx_window_deltas(std::span<cplx> samples, const UserAllocation& u, const ResourceGrid& g,
                                 const IGrid& plan, const TaperTable& taper) {
    const auto& nm = u.numerology;
    if (!plan.same_shape(u.num_subcarriers, nm.num_symbols))
        throw std::invalid_argument("tx plan dimensions do not match grid of " + u.name);
    std::vector<cplx> d(nm.cp_len);
    for (std::size_t l = 0; l < nm.num_symbols; ++l) {
        const std::size_t g0 = l * nm.symbol_len();
        for (std::size_t m = 0; m < u.num_subcarriers; ++m) {
            const int T = plan(m, l);
            if (T == 0) continue;
            if (T < 0 || static_cast<std::size_t>(T) > nm.cp_len)
                throw std::invalid_argument("tx window duration outside [0, K]");
            tx_window_deltas(u, g, m, l, taper.rise(static_cast<std::size_t>(T)), d);
            for (int k = 0; k < T; ++k) samples[g0 + static_cast<std::size_t>(k)] += d[static_cast<std::size_t>(k)];
        }
    }
}

inline SampleStream apply_tx_windowing(const SampleStream& base, const Scenario& sc, std::span<const ResourceGrid> grids,
                                       const TxWindowPlan& plan, const TaperTable& taper) {
    if (grids.size() != sc.num_users() || plan.size() != sc.num_users())
        throw std::invalid_argument("plan/grid count does not match users");
    if (base.size() != sc.slot_len()) throw std::invalid_argument("base stream length mismatch");
    SampleStream x = base;
    x.origin = SampleStream::Origin::TxWindowed;
    for (std::size_t u = 0; u < sc.num_users(); ++u) add_tx_window_deltas(x.samples, sc.users[u], grids[u], plan[u], taper);
    return x;
}

inline TaperTable default_taper_table(const Scenario& sc) {
    std::size_t kmax = 0;
    for (const auto& u : sc.users) kmax = std::max(kmax, u.numerology.cp_len);
    return TaperTable(RaisedCosineTaper{}, kmax);
}

}  // namespace adwin
