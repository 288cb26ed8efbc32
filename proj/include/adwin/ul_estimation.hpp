#pragma once

#include "adwin/channel.hpp"
#include "adwin/rx.hpp"

namespace adwin {

// Time-invariant CIR prediction for one user: K_u + 1 taps (tau = 0..K_u),
// already scaled by sqrt(gamma_u). The fit keeps K_u coefficients, so the
// last tap is zero; it is kept so leakage sums run over the full CP span.
using CirPrediction = std::vector<cplx>;

// Uplink observation at the gNB: every user's UL grid through its
// own channel (delayed by the common timing offset), superposed with unit noise.
inline SampleStream uplink_observation(const Scenario& sc, std::span<const ResourceGrid> ul_grids,
                                       std::span<const ChannelRealization> ul_channels, std::size_t timing_offset,
                                       std::optional<std::uint64_t> noise_seed) {
    if (ul_grids.size() != sc.num_users() || ul_channels.size() != sc.num_users())
        throw std::invalid_argument("uplink: one grid and channel per user required");
    std::size_t max_delay = 0;
    for (const auto& ch : ul_channels) max_delay = std::max(max_delay, ch.max_delay());
    const std::size_t len = sc.slot_len() + timing_offset + max_delay;
    SampleStream y{std::vector<cplx>(len), sc.sample_rate_hz(), SampleStream::Origin::Received};
    for (std::size_t u = 0; u < sc.num_users(); ++u) {
        SampleStream xu{synthesize_user(sc.users[u], ul_grids[u]), sc.sample_rate_hz(), SampleStream::Origin::Base};
        ChannelRealization ch = ul_channels[u];
        ch.delay_offset = timing_offset;
        const auto part = apply_channel(xu, ch, sc.users[u].snr_db, std::nullopt, len);
        for (std::size_t i = 0; i < len; ++i) y.samples[i] += part.samples[i];
    }
    if (noise_seed) {
        Rng rng(*noise_seed);
        for (auto& v : y.samples) v += complex_gaussian(rng);
    }
    return y;
}

inline constexpr int ridge_reweighting_passes = 1;

// LS at the UL pilot REs, averaged over the pilot symbols (the estimate is
// time invariant), then reduced to K_u taps. A partial-band tap fit is badly
// conditioned, so the reduction is ridge regularized with the measured noise
// level against per-tap power priors (flat, then re-estimated from the
// previous pass); without noise it is plain LS.
// The timing offset is compensated by extracting at `timing`.
inline std::vector<CirPrediction> estimate_ul_channel(const SampleStream& y, const Scenario& sc,
                                                      std::span<const ResourceGrid> ul_grids, std::size_t timing) {
    if (ul_grids.size() != sc.num_users()) throw std::invalid_argument("uplink: one grid per user required");
    std::vector<CirPrediction> out;
    for (std::size_t u = 0; u < sc.num_users(); ++u) {
        const auto& a = sc.users[u];
        const auto& g = ul_grids[u];
        bool any = false;
        for (auto v : g.pilot_mask.raw()) any = any || v;
        if (!any) throw std::invalid_argument("uplink: no pilots configured for " + a.name);
        const auto blocks = extract_symbols(y.samples, a.numerology, timing);
        const auto base = receive_base_grid(blocks, a);
        const std::size_t K = a.numerology.cp_len, M = a.num_subcarriers;
        const CirFitter fitter(a, K);
        const auto fit = fit_pilot_cirs(base, g.pilots, g.pilot_mask, a, fitter);
        std::vector<cplx> ls(M);
        for (std::size_t l : fit.pilot_symbols)
            for (std::size_t m = 0; m < M; ++m) ls[m] += base(m, l) / g.pilots(m, l);
        double power = 0;
        for (auto& v : ls) {
            v /= static_cast<double>(fit.pilot_symbols.size());
            power += std::norm(v);
        }
        const double noise = fit.noise_var / static_cast<double>(fit.pilot_symbols.size());
        const double floor = std::max(power / static_cast<double>(M) - noise, 1e-12) / static_cast<double>(K);
        std::vector<double> rho(K, noise / floor);
        auto taps = fitter.fit_ridge(ls, rho);
        for (int it = 0; it < ridge_reweighting_passes; ++it) {
            for (std::size_t t = 0; t < K; ++t) rho[t] = noise / std::max(std::norm(taps[t]), 1e-3 * floor);
            taps = fitter.fit_ridge(ls, rho);
        }
        CirPrediction h(K + 1);
        std::copy(taps.begin(), taps.end(), h.begin());
        out.push_back(std::move(h));
    }
    return out;
}

// Genie prediction: the true taps averaged over [start, start+len), scaled by sqrt(gamma_u).
inline CirPrediction genie_cir(const ChannelRealization& ch, std::size_t start, std::size_t len,
                               const UserAllocation& u) {
    auto h = ch.mean_taps(start, len, u.numerology.cp_len + 1);
    const double a = std::sqrt(u.snr_linear());
    for (auto& v : h) v *= a;
    return h;
}

}  // namespace adwin
