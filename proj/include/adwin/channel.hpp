#pragma once

#include <map>

#include "adwin/grid.hpp"
#include "adwin/synth.hpp"

namespace adwin {

struct TdlTap {
    double normalized_delay;
    double power_db;
};

// Normalized-delay power delay profiles of 3GPP TR 38.901 Tables 7.7.2-1..3.
inline std::span<const TdlTap> tdl_profile(PdpProfile p) {
    static constexpr TdlTap a[] = {
        {0.0000, -13.4}, {0.3819, 0.0},   {0.4025, -2.2},  {0.5868, -4.0},  {0.4610, -6.0},  {0.5375, -8.2},
        {0.6708, -9.9},  {0.5750, -10.5}, {0.7618, -7.5},  {1.5375, -15.9}, {1.8978, -6.6},  {2.2242, -16.7},
        {2.1718, -12.4}, {2.4942, -15.2}, {2.5119, -10.8}, {3.0582, -11.3}, {4.0810, -12.7}, {4.4579, -16.2},
        {4.5695, -18.3}, {4.7966, -18.9}, {5.0066, -16.6}, {5.3043, -19.9}, {9.6586, -29.7}};
    static constexpr TdlTap b[] = {
        {0.0000, 0.0},  {0.1072, -2.2}, {0.2155, -4.0}, {0.2095, -3.2}, {0.2870, -9.8},  {0.2986, -1.2},
        {0.3752, -3.4}, {0.5055, -5.2}, {0.3681, -7.6}, {0.3697, -3.0}, {0.5700, -8.9},  {0.5283, -9.0},
        {1.1021, -4.8}, {1.2756, -5.7}, {1.5474, -7.5}, {1.7842, -1.9}, {2.0169, -7.6},  {2.8294, -12.2},
        {3.0219, -9.8}, {3.6187, -11.4}, {4.1067, -14.9}, {4.2790, -9.2}, {4.7834, -11.3}};
    static constexpr TdlTap c[] = {
        {0.0000, -4.4}, {0.2099, -1.2}, {0.2219, -3.5}, {0.2329, -5.2}, {0.2176, -2.5},  {0.6366, 0.0},
        {0.6448, -2.2}, {0.6560, -3.9}, {0.6584, -7.4}, {0.7935, -7.1}, {0.8213, -10.7}, {0.9336, -11.1},
        {1.2285, -5.1}, {1.3083, -6.8}, {2.1704, -8.7}, {2.7105, -13.2}, {4.2589, -13.9}, {4.6003, -13.9},
        {5.4902, -15.8}, {5.6077, -17.1}, {6.3065, -16.0}, {6.6374, -15.7}, {7.0427, -21.6}, {8.6523, -22.8}};
    switch (p) {
        case PdpProfile::TdlA: return a;
        case PdpProfile::TdlB: return b;
        case PdpProfile::TdlC: return c;
    }
    return a;
}

// Taps of a profile scaled to `rms_ds_s` and quantized to whole samples;
// taps landing on the same sample are merged (powers add). Powers sum to 1.
inline std::vector<std::pair<std::size_t, double>> quantized_pdp(PdpProfile p, double rms_ds_s, double sample_rate_hz) {
    std::map<std::size_t, double> merged;
    double total = 0;
    for (const auto& tap : tdl_profile(p)) {
        const auto d = static_cast<std::size_t>(std::llround(tap.normalized_delay * rms_ds_s * sample_rate_hz));
        const double pw = db_to_linear(tap.power_db);
        merged[d] += pw;
        total += pw;
    }
    std::vector<std::pair<std::size_t, double>> out;
    for (auto [d, pw] : merged) out.emplace_back(d, pw / total);
    return out;
}

inline double rms_delay_spread(std::span<const std::pair<std::size_t, double>> taps, double sample_rate_hz) {
    double p = 0, m1 = 0, m2 = 0;
    for (auto [d, pw] : taps) {
        const double t = static_cast<double>(d) / sample_rate_hz;
        p += pw;
        m1 += pw * t;
        m2 += pw * t * t;
    }
    m1 /= p;
    m2 /= p;
    return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

inline double doppler_hz(double speed_kmh, double carrier_hz) {
    return speed_kmh / 3.6 * carrier_hz / 299792458.0;
}

// h_{u,tau,t}: sparse taps at distinct sample delays, each a gain trace over time.
struct ChannelRealization {
    std::vector<std::size_t> delays;
    std::vector<std::vector<cplx>> gains;  // gains[i][t]
    std::size_t delay_offset = 0;          // Delta_{t,u}, samples
    PdpProfile pdp = PdpProfile::TdlA;
    double doppler_hz = 0.0;
    double sample_rate_hz = 0.0;

    std::size_t duration() const { return gains.empty() ? 0 : gains.front().size(); }
    std::size_t max_delay() const { return delays.empty() ? 0 : *std::max_element(delays.begin(), delays.end()); }

    ChannelRealization segment(std::size_t start, std::size_t len) const {
        if (start + len > duration()) throw std::out_of_range("channel segment outside realization");
        ChannelRealization s = *this;
        for (auto& g : s.gains) g = std::vector<cplx>(g.begin() + static_cast<std::ptrdiff_t>(start),
                                                      g.begin() + static_cast<std::ptrdiff_t>(start + len));
        return s;
    }

    // Dense CIR (num_taps entries) averaged over t in [start, start+len).
    std::vector<cplx> mean_taps(std::size_t start, std::size_t len, std::size_t num_taps) const {
        std::vector<cplx> h(num_taps);
        if (len == 0) return h;
        for (std::size_t i = 0; i < delays.size(); ++i) {
            if (delays[i] >= num_taps) continue;
            cplx acc{};
            for (std::size_t t = start; t < start + len; ++t) acc += gains[i][t];
            h[delays[i]] += acc / static_cast<double>(len);
        }
        return h;
    }

    double mean_power() const {
        double acc = 0;
        for (const auto& g : gains)
            for (auto v : g) acc += std::norm(v);
        return duration() ? acc / static_cast<double>(duration()) : 0.0;
    }
};

struct TdlChannelSpec {
    std::vector<std::pair<std::size_t, double>> taps;  // (delay samples, power)
    double doppler_hz = 0.0;
    double sample_rate_hz = 0.0;
    std::size_t duration = 0;
    bool normalize = true;  // rescale so the time-averaged total power is exactly 1
    PdpProfile pdp = PdpProfile::TdlA;
};

inline constexpr std::size_t jakes_sinusoids = 64;

// Each tap evolves as an independent sum of 64 sinusoids with random phases
// and evenly spread, randomly rotated arrival angles (classical Jakes spectrum).
inline ChannelRealization make_channel(const TdlChannelSpec& spec, std::uint64_t seed) {
    if (!(spec.sample_rate_hz > 0)) throw std::invalid_argument("sample rate must be positive");
    Rng rng(seed);
    std::uniform_real_distribution<double> uni(0.0, two_pi);
    ChannelRealization ch;
    ch.pdp = spec.pdp;
    ch.doppler_hz = spec.doppler_hz;
    ch.sample_rate_hz = spec.sample_rate_hz;
    for (auto [delay, power] : spec.taps) {
        const double theta = uni(rng);
        std::vector<cplx> state(jakes_sinusoids), step(jakes_sinusoids);
        const double amp = std::sqrt(power / static_cast<double>(jakes_sinusoids));
        for (std::size_t s = 0; s < jakes_sinusoids; ++s) {
            const double alpha = (two_pi * static_cast<double>(s) + theta) / static_cast<double>(jakes_sinusoids);
            const double w = two_pi * spec.doppler_hz * std::cos(alpha) / spec.sample_rate_hz;
            state[s] = amp * phasor(uni(rng));
            step[s] = phasor(w);
        }
        std::vector<cplx> g(spec.duration);
        for (std::size_t t = 0; t < spec.duration; ++t) {
            cplx acc{};
            for (std::size_t s = 0; s < jakes_sinusoids; ++s) {
                acc += state[s];
                state[s] *= step[s];
            }
            g[t] = acc;
        }
        ch.delays.push_back(delay);
        ch.gains.push_back(std::move(g));
    }
    if (spec.normalize && spec.duration > 0) {
        const double p = ch.mean_power();
        if (p > 0) {
            const double s = 1.0 / std::sqrt(p);
            for (auto& g : ch.gains)
                for (auto& v : g) v *= s;
        }
    }
    return ch;
}

// TDL channel with the profile scaled to the RMS delay spread and quantized
// to the sample grid. Throws if any tap would reach `max_delay_exclusive`.
inline ChannelRealization make_tdl_channel(PdpProfile profile, double rms_ds_ns, double doppler, double sample_rate_hz,
                                           std::size_t duration, std::uint64_t seed,
                                           std::size_t max_delay_exclusive = static_cast<std::size_t>(-1)) {
    if (!(sample_rate_hz > 0)) throw std::invalid_argument("sample rate must be positive");
    TdlChannelSpec spec;
    spec.taps = quantized_pdp(profile, rms_ds_ns * 1e-9, sample_rate_hz);
    for (auto [d, p] : spec.taps)
        if (d >= max_delay_exclusive) throw std::invalid_argument("channel delay exceeds the cyclic prefix");
    spec.doppler_hz = doppler;
    spec.sample_rate_hz = sample_rate_hz;
    spec.duration = duration;
    spec.pdp = profile;
    return make_channel(spec, seed);
}

// y[t] = n + sqrt(gamma) * sum_tau h[tau, t] x[t - Delta - tau], x zero
// outside its support. Noise is skipped when no seed is given. The output
// covers the whole channel response unless `out_len` is set.
inline SampleStream apply_channel(const SampleStream& x, const ChannelRealization& ch, double snr_db,
                                  std::optional<std::uint64_t> noise_seed,
                                  std::optional<std::size_t> out_len = std::nullopt) {
    const std::size_t len = out_len.value_or(x.size() + ch.delay_offset + ch.max_delay());
    if (ch.duration() < len) throw std::invalid_argument("channel realization shorter than output");
    SampleStream y{std::vector<cplx>(len), x.sample_rate_hz, SampleStream::Origin::Received};
    const double amp = std::sqrt(db_to_linear(snr_db));  // -inf dB gives noise only
    if (amp > 0) {
        for (std::size_t i = 0; i < ch.delays.size(); ++i) {
            const std::size_t shift = ch.delay_offset + ch.delays[i];
            const auto& g = ch.gains[i];
            for (std::size_t t = shift; t < len && t - shift < x.size(); ++t) y.samples[t] += amp * g[t] * x.samples[t - shift];
        }
    }
    if (noise_seed) {
        Rng rng(*noise_seed);
        for (auto& v : y.samples) v += complex_gaussian(rng);
    }
    return y;
}

}  // namespace adwin
