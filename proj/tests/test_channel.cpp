#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace adwin;

namespace {

TdlChannelSpec single_tap(double doppler, double fs, std::size_t duration) {
    TdlChannelSpec s;
    s.taps = {{0, 1.0}};
    s.doppler_hz = doppler;
    s.sample_rate_hz = fs;
    s.duration = duration;
    s.normalize = false;
    return s;
}

ScenarioConfig fast_only(double snr_db) {
    auto c = ScenarioConfig::paper_default();
    c.users.pop_back();
    c.users[0].snr_db = snr_db;
    return c;
}

}  // namespace

TEST(TdlChannel, StaticChannelHasConstantTaps) {
    const auto ch = make_tdl_channel(PdpProfile::TdlA, 100, 0.0, 7.68e6, 500, 1, 9);
    for (const auto& g : ch.gains)
        for (auto v : g) EXPECT_LT(std::abs(v - g.front()), 1e-12);
}

TEST(TdlChannel, TimeAveragedPowerIsNormalized) {
    for (auto p : {PdpProfile::TdlA, PdpProfile::TdlB, PdpProfile::TdlC}) {
        const auto ch = make_tdl_channel(p, 100, 300.0, 7.68e6, 3836, 5, 9);
        EXPECT_NEAR(ch.mean_power(), 1.0, 0.01);
        EXPECT_LT(ch.max_delay(), 9u);
    }
}

TEST(TdlChannel, TdlBDelaySpreadMatchesTarget) {
    const auto taps = quantized_pdp(PdpProfile::TdlB, 100e-9, 7.68e6);
    EXPECT_NEAR(rms_delay_spread(taps, 7.68e6), 100e-9, 10e-9);
}

TEST(TdlChannel, ExcessiveDelayAndZeroRateAreRejected) {
    EXPECT_THROW(make_tdl_channel(PdpProfile::TdlA, 1000, 0.0, 7.68e6, 10, 1, 9), std::invalid_argument);
    EXPECT_THROW(make_tdl_channel(PdpProfile::TdlA, 100, 0.0, 0.0, 10, 1, 9), std::invalid_argument);
}

TEST(TdlChannel, AutocorrelationFollowsBessel) {
    // f_D * lag / fs = 0.5
    const double fs = 1000.0, fd = 10.0;
    const std::size_t lag = 50;
    cplx corr{};
    double power = 0;
    for (std::uint64_t s = 0; s < 10000; ++s) {
        const auto ch = make_channel(single_tap(fd, fs, lag + 1), s);
        const auto& g = ch.gains[0];
        corr += g[lag] * std::conj(g[0]);
        power += std::norm(g[0]);
    }
    const double rho = corr.real() / power;
    EXPECT_NEAR(rho, std::cyl_bessel_j(0.0, two_pi * fd * static_cast<double>(lag) / fs), 0.05);
}

TEST(TdlChannel, DopplerSpectrumIsBandLimited) {
    const double fs = 1000.0, fd = 50.0;
    const std::size_t n = 2048;
    const auto ch = make_channel(single_tap(fd, fs, n), 3);
    const auto& g = ch.gains[0];
    double inside = 0, total = 0;
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{};
        for (std::size_t t = 0; t < n; ++t) {
            const double w = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(t) / static_cast<double>(n));
            acc += w * g[t] * phasor(-two_pi * static_cast<double>(k * t) / static_cast<double>(n));
        }
        const double f = (k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n)) * fs /
                         static_cast<double>(n);
        total += std::norm(acc);
        // Two bins of slack for the window's main lobe.
        if (std::abs(f) <= fd + 2.0 * fs / static_cast<double>(n)) inside += std::norm(acc);
    }
    EXPECT_GT(inside / total, 0.99);
}

TEST(ApplyChannel, IdentityWithoutNoiseReproducesInput) {
    const auto x = fixtures::random_samples(300, 1);
    const SampleStream xs{x, 7.68e6, SampleStream::Origin::Base};
    const auto ch = make_channel(TdlChannelSpec{{{0, 1.0}}, 0.0, 7.68e6, 300, false}, 1);
    ChannelRealization unit = ch;
    std::fill(unit.gains[0].begin(), unit.gains[0].end(), cplx{1, 0});
    const auto y = apply_channel(xs, unit, 0.0, std::nullopt);
    EXPECT_EQ(y.samples, x);
}

TEST(ApplyChannel, NoiseOnlyHasUnitVariance) {
    const std::size_t n = 200000;
    const SampleStream xs{fixtures::random_samples(n, 2), 7.68e6, SampleStream::Origin::Base};
    const auto ch = make_channel(TdlChannelSpec{{{0, 1.0}}, 0.0, 7.68e6, n, true}, 1);
    const auto y = apply_channel(xs, ch, -std::numeric_limits<double>::infinity(), 77);
    double acc = 0, acc2 = 0;
    for (auto v : y.samples) {
        acc += std::norm(v);
        acc2 += std::norm(v) * std::norm(v);
    }
    const double mean = acc / static_cast<double>(n);
    const double sd = std::sqrt(acc2 / static_cast<double>(n) - mean * mean);
    EXPECT_NEAR(mean, 1.0, 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST(ApplyChannel, TwoTapImpulseResponse) {
    ChannelRealization ch;
    ch.delays = {0, 3};
    ch.gains = {std::vector<cplx>(20, cplx{0.7, 0.2}), std::vector<cplx>(20, cplx{-0.1, 0.5})};
    ch.sample_rate_hz = 1.0;
    std::vector<cplx> x(10);
    x[2] = 1.0;
    const auto y = apply_channel({x, 1.0, SampleStream::Origin::Base}, ch, 0.0, std::nullopt);
    ASSERT_EQ(y.size(), 13u);
    for (std::size_t t = 0; t < y.size(); ++t) {
        cplx want{};
        if (t == 2) want = cplx{0.7, 0.2};
        if (t == 5) want = cplx{-0.1, 0.5};
        EXPECT_LT(std::abs(y.samples[t] - want), 1e-15);
    }
}

TEST(ApplyChannel, DirectConvolutionOracleForTimeVaryingTaps) {
    const auto ch = make_tdl_channel(PdpProfile::TdlC, 100, 500.0, 7.68e6, 400, 4, 9);
    const auto x = fixtures::random_samples(380, 9);
    const double snr_db = 6.0;
    const auto y = apply_channel({x, 7.68e6, SampleStream::Origin::Base}, ch, snr_db, std::nullopt);
    const double a = std::sqrt(std::pow(10.0, snr_db / 10.0));
    for (std::size_t t = 0; t < y.size(); ++t) {
        cplx want{};
        for (std::size_t i = 0; i < ch.delays.size(); ++i) {
            const long long k = static_cast<long long>(t) - static_cast<long long>(ch.delays[i]);
            if (k >= 0 && k < static_cast<long long>(x.size())) want += a * ch.gains[i][t] * x[static_cast<std::size_t>(k)];
        }
        EXPECT_LT(std::abs(y.samples[t] - want), 1e-12);
    }
}

TEST(ApplyChannel, PowerIsConserved) {
    const std::size_t n = 100000;
    const auto ch = make_tdl_channel(PdpProfile::TdlA, 100, 200.0, 7.68e6, n + 16, 8, 9);
    const auto y = apply_channel({fixtures::random_samples(n, 8), 7.68e6, SampleStream::Origin::Base}, ch, 0.0,
                                 std::nullopt);
    double p = 0;
    for (std::size_t t = 16; t < n; ++t) p += std::norm(y.samples[t]);
    EXPECT_NEAR(p / static_cast<double>(n - 16), 1.0, 0.03);
}

TEST(UplinkEstimation, NoiselessStaticChannelIsExact) {
    const auto sc = build_scenario(fast_only(15));
    const auto& u = sc.users[0];
    const auto grids = fixtures::make_grids(sc, DmrsPattern::ul_type_b(), 3);
    const auto ch = make_tdl_channel(PdpProfile::TdlB, 100, 0.0, sc.sample_rate_hz(), sc.slot_len() + 200, 3,
                                     u.numerology.cp_len);
    const std::vector<ChannelRealization> chs{ch};
    const auto y = uplink_observation(sc, grids, chs, 64, std::nullopt);
    const auto h = estimate_ul_channel(y, sc, grids, 64);
    const auto want = genie_cir(ch, 0, sc.slot_len(), u);
    ASSERT_EQ(h[0].size(), u.numerology.cp_len + 1);
    for (std::size_t t = 0; t < want.size(); ++t) EXPECT_LT(std::abs(h[0][t] - want[t]), 1e-6);
}

TEST(UplinkEstimation, TimingOffsetShiftsBlocks) {
    const auto sc = build_scenario(fast_only(15));
    const auto grids = fixtures::make_grids(sc, DmrsPattern::ul_type_b(), 4);
    const auto ch = make_tdl_channel(PdpProfile::TdlA, 100, 0.0, sc.sample_rate_hz(), sc.slot_len() + 200, 4, 9);
    const std::vector<ChannelRealization> chs{ch};
    const auto y = uplink_observation(sc, grids, chs, 64, std::nullopt);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(y.samples[i], cplx{});
    const auto b = extract_symbols(y.samples, sc.users[0].numerology, 64);
    EXPECT_EQ(b.block(0).front(), y.samples[64]);
}

TEST(UplinkEstimation, GenieReturnsScaledMeanTaps) {
    const auto sc = build_scenario(fast_only(10));
    const auto ch = make_tdl_channel(PdpProfile::TdlA, 100, 300.0, sc.sample_rate_hz(), 1000, 6, 9);
    const auto h = genie_cir(ch, 100, 500, sc.users[0]);
    std::vector<cplx> want(10);
    for (std::size_t i = 0; i < ch.delays.size(); ++i) {
        cplx acc{};
        for (std::size_t t = 100; t < 600; ++t) acc += ch.gains[i][t];
        want[ch.delays[i]] += acc / 500.0 * std::sqrt(10.0);
    }
    for (std::size_t t = 0; t < 10; ++t) EXPECT_LT(std::abs(h[t] - want[t]), 1e-12);
}

TEST(UplinkEstimation, TenDbTapErrorBelowMinusTenDb) {
    const auto sc = build_scenario(fast_only(10));
    const auto& u = sc.users[0];
    double err = 0, pow = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto grids = fixtures::make_grids(sc, DmrsPattern::ul_type_b(), s);
        const auto ch = make_tdl_channel(PdpProfile::TdlB, 100, 0.0, sc.sample_rate_hz(), sc.slot_len() + 200, s,
                                         u.numerology.cp_len);
        const std::vector<ChannelRealization> chs{ch};
        const auto y = uplink_observation(sc, grids, chs, 64, 1000 + s);
        const auto h = estimate_ul_channel(y, sc, grids, 64)[0];
        const auto want = genie_cir(ch, 0, sc.slot_len(), u);
        for (std::size_t t = 0; t < want.size(); ++t) {
            err += std::norm(h[t] - want[t]);
            pow += std::norm(want[t]);
        }
    }
    EXPECT_LT(10.0 * std::log10(err / pow), -10.0);
}

TEST(UplinkEstimation, NoPilotsIsAnError) {
    const auto sc = build_scenario(fast_only(10));
    const auto grids = fixtures::make_grids(sc, DmrsPattern::ul_type_b(), 1);
    auto bare = grids;
    bare[0].pilot_mask = Mask(bare[0].pilot_mask.rows(), bare[0].pilot_mask.cols(), 0);
    SampleStream y{std::vector<cplx>(sc.slot_len() + 100), sc.sample_rate_hz(), SampleStream::Origin::Received};
    EXPECT_THROW(estimate_ul_channel(y, sc, bare, 64), std::invalid_argument);
}
