#pragma once

#include "adwin/fft.hpp"

namespace adwin {

// Welch-averaged periodogram, bins ordered from -fs/2 upwards. Bin k sits at
// k * fs / segment_len in the same frequency convention as subcarrier indices.
struct PsdEstimate {
    std::vector<double> freq_hz;
    std::vector<double> power_db;  // relative to the in-band peak (0 dB)
    std::size_t segment_len = 0;
    std::size_t overlap = 0;
    std::size_t segments = 0;
};

struct WelchAccumulator {
    std::size_t segment_len = 0;
    std::size_t overlap = 0;
    double sample_rate_hz = 0;
    std::vector<double> power;  // linear, summed over segments
    std::size_t segments = 0;

    WelchAccumulator(std::size_t seg, std::size_t ovl, double fs) : segment_len(seg), overlap(ovl), sample_rate_hz(fs), power(seg, 0.0) {
        if (seg == 0) throw std::invalid_argument("psd: segment length must be positive");
        if (ovl >= seg) throw std::invalid_argument("psd: overlap must be shorter than the segment");
        if (!(fs > 0)) throw std::invalid_argument("psd: sample rate must be positive");
    }

    void add(std::span<const cplx> x) {
        if (x.size() < segment_len) throw std::invalid_argument("psd: segment longer than stream");
        const std::size_t n = segment_len, hop = segment_len - overlap;
        std::vector<double> w(n);
        double wp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n));
            wp += w[i] * w[i];
        }
        std::vector<cplx> seg(n), spec(n);
        for (std::size_t start = 0; start + n <= x.size(); start += hop) {
            for (std::size_t i = 0; i < n; ++i) seg[i] = w[i] * x[start + i];
            Fft::analysis(seg, spec);
            for (std::size_t i = 0; i < n; ++i) power[i] += std::norm(spec[i]) / wp;
            ++segments;
        }
    }

    // Mean linear power in the bin nearest to `freq_hz`.
    double at(double freq_hz) const {
        const long long k = std::llround(freq_hz / sample_rate_hz * static_cast<double>(segment_len));
        return power[wrap_index(k, segment_len)] / static_cast<double>(std::max<std::size_t>(segments, 1));
    }

    // Mean linear power over [lo_hz, hi_hz].
    double band_mean(double lo_hz, double hi_hz) const {
        const double df = sample_rate_hz / static_cast<double>(segment_len);
        const long long k0 = static_cast<long long>(std::ceil(lo_hz / df - 1e-9));
        const long long k1 = static_cast<long long>(std::floor(hi_hz / df + 1e-9));
        if (k1 < k0) throw std::invalid_argument("psd: empty band");
        double acc = 0;
        for (long long k = k0; k <= k1; ++k) acc += power[wrap_index(k, segment_len)];
        return acc / static_cast<double>(k1 - k0 + 1) / static_cast<double>(std::max<std::size_t>(segments, 1));
    }

    // Normalized to the strongest bin, which for a transmitted stream lies in band.
    PsdEstimate estimate() const {
        if (segments == 0) throw std::invalid_argument("psd: no segments accumulated");
        PsdEstimate e;
        e.segment_len = segment_len;
        e.overlap = overlap;
        e.segments = segments;
        const double peak = *std::max_element(power.begin(), power.end());
        const long long half = static_cast<long long>(segment_len / 2);
        for (long long k = -half; k < static_cast<long long>(segment_len) - half; ++k) {
            e.freq_hz.push_back(static_cast<double>(k) * sample_rate_hz / static_cast<double>(segment_len));
            const double p = power[wrap_index(k, segment_len)];
            e.power_db.push_back(p > 0 && peak > 0 ? linear_to_db(p / peak) : -400.0);
        }
        return e;
    }
};

inline PsdEstimate estimate_psd(std::span<const cplx> x, double sample_rate_hz, std::size_t segment_len, std::size_t overlap) {
    WelchAccumulator acc(segment_len, overlap, sample_rate_hz);
    acc.add(x);
    return acc.estimate();
}

}  // namespace adwin
