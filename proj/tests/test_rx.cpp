#include <gtest/gtest.h>

#include "support.hpp"

using namespace adwin;
using adwin::fixtures::max_abs_diff;

namespace {

Scenario solo(std::size_t n, std::size_t m, std::size_t l) {
    return build_scenario(fixtures::single_user_config(n, m, l, {1, 4}));
}

// Static received grid: Y = H * (D + P) with H the CFR of `h`.
CGrid static_reception(const UserAllocation& u, const ResourceGrid& g, std::span<const cplx> h) {
    const auto H = cir_to_cfr(h, u);
    CGrid y(u.num_subcarriers, u.numerology.num_symbols);
    for (std::size_t l = 0; l < y.cols(); ++l)
        for (std::size_t m = 0; m < y.rows(); ++m) y(m, l) = H[m] * g.symbol(m, l);
    return y;
}

}  // namespace

TEST(ExtractSymbols, ConsecutiveDisjointBlocks) {
    const auto sc = solo(16, 8, 2);
    const auto& nm = sc.users[0].numerology;
    std::vector<cplx> y(nm.slot_len());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i);
    const auto b = extract_symbols(y, nm, 0);
    ASSERT_EQ(b.count(), 2u);
    EXPECT_EQ(b.block(0).front(), 0.0);
    EXPECT_EQ(b.block(0).back(), 19.0);
    EXPECT_EQ(b.block(1).front(), 20.0);
    EXPECT_EQ(b.block(1).back(), 39.0);
}

TEST(ExtractSymbols, TimingOffsetShiftsBlocks) {
    const auto sc = solo(16, 8, 2);
    const auto& nm = sc.users[0].numerology;
    std::vector<cplx> y(nm.slot_len() + 64);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i);
    const auto b = extract_symbols(y, nm, 64);
    EXPECT_EQ(b.block(0).front(), 64.0);
    EXPECT_EQ(b.block(1).front(), 84.0);
}

TEST(ExtractSymbols, ShortStreamIsAnError) {
    const auto sc = solo(16, 8, 2);
    const auto& nm = sc.users[0].numerology;
    std::vector<cplx> y(nm.slot_len() - 1);
    EXPECT_THROW(extract_symbols(y, nm, 0), std::invalid_argument);
}

TEST(FftReceive, LoopbackRecoversSymbols) {
    const auto sc = build_scenario(ScenarioConfig::paper_default());
    const auto grids = fixtures::make_grids(sc, DmrsPattern::dl_type_a(), 2);
    for (std::size_t u = 0; u < 2; ++u) {
        const auto& a = sc.users[u];
        const auto x = synthesize_user(a, grids[u]);
        const auto y = receive_base_grid(extract_symbols(x, a.numerology, 0), a);
        for (std::size_t l = 0; l < y.cols(); ++l)
            for (std::size_t m = 0; m < y.rows(); ++m) EXPECT_LT(std::abs(y(m, l) - grids[u].symbol(m, l)), 1e-10);
    }
}

TEST(FftReceive, MatchesDftMatrixOracle) {
    const auto sc = solo(32, 20, 1);
    const auto& a = sc.users[0];
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto block = fixtures::random_samples(40, s);
        const auto got = fft_receive(block, a);
        for (std::size_t m = 0; m < a.num_subcarriers; ++m) {
            cplx want{};
            for (std::size_t n = 0; n < 32; ++n)
                want += block[8 + n] * std::exp(cplx(0, two_pi * static_cast<double>(a.subcarrier_index(m)) *
                                                             static_cast<double>(n) / 32.0));
            EXPECT_LT(std::abs(got[m] - want / std::sqrt(32.0)), 1e-12);
        }
    }
}

TEST(FftReceive, WhiteNoiseHasUnitVariancePerRe) {
    const auto sc = solo(64, 64, 1);
    double acc = 0, acc2 = 0;
    std::size_t n = 0;
    for (std::uint64_t s = 0; s < 500; ++s) {
        const auto block = fixtures::random_samples(80, s);
        for (auto v : fft_receive(block, sc.users[0])) {
            acc += std::norm(v);
            acc2 += std::norm(v) * std::norm(v);
            ++n;
        }
    }
    const double mean = acc / static_cast<double>(n);
    const double sd = std::sqrt(acc2 / static_cast<double>(n) - mean * mean);
    EXPECT_NEAR(mean, 1.0, 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST(RxWindowDelta, ZeroDurationIsZero) {
    const auto block = fixtures::random_samples(20, 1);
    EXPECT_EQ(rx_window_symbol_delta(block, 16, 4, 3, {}), cplx{});
}

TEST(RxWindowDelta, CyclicInputGivesZeroForEveryDuration) {
    auto block = fixtures::random_samples(20, 2);
    for (std::size_t k = 0; k < 4; ++k) block[k] = block[16 + k];
    TaperTable taper(RaisedCosineTaper{}, 4);
    for (std::size_t r = 0; r <= 4; ++r)
        for (long long M = -8; M < 8; ++M) EXPECT_EQ(rx_window_symbol_delta(block, 16, 4, M, taper.rise(r)), cplx{});
}

TEST(RxWindowDelta, MatchesWeightedOverlapAddOracle) {
    TaperTable taper(RaisedCosineTaper{}, 16);
    for (auto [N, K] : {std::pair<std::size_t, std::size_t>{16, 4}, {32, 3}, {64, 16}}) {
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto block = fixtures::random_samples(N + K, s);
            std::vector<cplx> bins(N);
            Fft::analysis(std::span<const cplx>(block).subspan(K, N), bins);
            for (std::size_t r = 0; r <= K; ++r)
                for (long long M = -static_cast<long long>(N) / 2; M < static_cast<long long>(N) / 2; ++M) {
                    const cplx got = bins[wrap_index(M, N)] + rx_window_symbol_delta(block, N, K, M, taper.rise(r));
                    EXPECT_LT(std::abs(got - oracle::brute_force_rx_window(block, N, K, M, r)), 1e-12);
                }
        }
    }
}

TEST(RxWindowDelta, DurationBeyondCpIsAnError) {
    const auto block = fixtures::random_samples(20, 1);
    TaperTable taper(RaisedCosineTaper{}, 5);
    EXPECT_THROW(rx_window_symbol_delta(block, 16, 4, 0, taper.rise(5)), std::invalid_argument);
}

TEST(RxWindowing, ZeroPlanEntriesKeepBaseSymbols) {
    const auto sc = solo(16, 8, 3);
    const auto& a = sc.users[0];
    const auto y = fixtures::random_samples(a.numerology.slot_len(), 3);
    const auto blocks = extract_symbols(y, a.numerology, 0);
    const auto base = receive_base_grid(blocks, a);
    IGrid plan(8, 3, 0);
    plan(2, 1) = 3;
    const auto rg = apply_rx_windowing(blocks, a, base, plan, default_taper_table(sc));
    for (std::size_t l = 0; l < 3; ++l)
        for (std::size_t m = 0; m < 8; ++m) {
            if (plan(m, l) == 0) {
                EXPECT_EQ(rg.windowed(m, l), base(m, l));
            }
        }
    EXPECT_LT(std::abs(rg.windowed(2, 1) - oracle::brute_force_rx_window(blocks.block(1), 16, 4, a.subcarrier_index(2), 3)),
              1e-12);
    plan(0, 0) = 5;
    EXPECT_THROW(apply_rx_windowing(blocks, a, base, plan, default_taper_table(sc)), std::invalid_argument);
}

TEST(RxWindowing, NoiseVarianceMatchesAnalyticValue) {
    const std::size_t N = 32, K = 8, trials = 20000;
    TaperTable taper(RaisedCosineTaper{}, K);
    for (std::size_t r : {std::size_t{2}, std::size_t{8}}) {
        double acc = 0, acc2 = 0;
        for (std::uint64_t s = 0; s < trials; ++s) {
            const auto block = fixtures::random_samples(N + K, s);
            const double v = std::norm(oracle::brute_force_rx_window(block, N, K, 5, r));
            acc += v;
            acc2 += v * v;
        }
        const double mean = acc / trials;
        const double sd = std::sqrt(acc2 / trials - mean * mean);
        const double want = rx_window_noise_variance(taper.rise(r), N);
        EXPECT_LT(want, 1.0);
        EXPECT_NEAR(mean, want, 3.0 * sd / std::sqrt(static_cast<double>(trials)));
    }
}

TEST(EstimateChannel, FlatNoiselessChannel) {
    const auto sc = solo(64, 40, 6);
    const auto& a = sc.users[0];
    const auto g = make_resource_grid(a, DmrsPattern::every_nth(3), 1);
    const std::vector<cplx> h{cplx{0.4, -1.1}};
    const auto est = estimate_channel(static_reception(a, g, h), g.pilots, g.pilot_mask, a, CirFitter(a, a.numerology.cp_len));
    for (auto v : est.cfr.raw()) EXPECT_LT(std::abs(v - h[0]), 1e-9);
    EXPECT_LT(est.noise_var, 1e-20);
}

TEST(EstimateChannel, TwoTapNoiselessChannelMatchesAnalyticCfr) {
    const auto sc = solo(64, 40, 6);
    const auto& a = sc.users[0];
    const auto g = make_resource_grid(a, DmrsPattern::every_nth(3), 2);
    const std::vector<cplx> h{cplx{0.8, 0.1}, {}, {}, cplx{-0.3, 0.4}};
    const auto est = estimate_channel(static_reception(a, g, h), g.pilots, g.pilot_mask, a, CirFitter(a, a.numerology.cp_len));
    for (std::size_t m = 0; m < a.num_subcarriers; ++m) {
        const double M = static_cast<double>(a.subcarrier_index(m));
        const cplx want = h[0] + h[3] * std::exp(cplx(0, two_pi * M * 3.0 / 64.0));
        for (std::size_t l = 0; l < 6; ++l) EXPECT_LT(std::abs(est.cfr(m, l) - want), 1e-6);
    }
}

TEST(EstimateChannel, TruncationReducesPilotMse) {
    const auto sc = solo(64, 48, 4);
    const auto& a = sc.users[0];
    const CirFitter fitter(a, a.numerology.cp_len);
    double raw = 0, trunc = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto g = make_resource_grid(a, DmrsPattern::every_nth(2), s);
        const auto h = fixtures::random_cir(a.numerology.cp_len, 4, s + 500);
        const auto clean = static_reception(a, g, h);
        auto y = clean;
        Rng rng(s + 900);
        for (auto& v : y.raw()) v += complex_gaussian(rng, 0.1);  // 10 dB
        const auto est = estimate_channel(y, g.pilots, g.pilot_mask, a, fitter);
        const auto H = cir_to_cfr(h, a);
        for (std::size_t l : est.pilot_symbols)
            for (std::size_t m = 0; m < a.num_subcarriers; ++m) {
                raw += std::norm(y(m, l) / g.pilots(m, l) - H[m]);
                trunc += std::norm(est.cfr(m, l) - H[m]);
            }
    }
    EXPECT_LT(trunc, raw);
}

TEST(EstimateChannel, NoiseVarianceFromPilotResiduals) {
    const auto sc = solo(64, 48, 8);
    const auto& a = sc.users[0];
    const CirFitter fitter(a, a.numerology.cp_len);
    double acc = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto g = make_resource_grid(a, DmrsPattern::every_nth(2), s);
        auto y = static_reception(a, g, fixtures::random_cir(a.numerology.cp_len, 3, s));
        Rng rng(s + 77);
        for (auto& v : y.raw()) v += complex_gaussian(rng, 0.5);
        acc += estimate_channel(y, g.pilots, g.pilot_mask, a, fitter).noise_var;
    }
    EXPECT_NEAR(acc / 50.0, 0.5, 0.05);
}

TEST(EstimateChannel, LinearInterpolationAndConstantExtrapolation) {
    const auto sc = solo(64, 40, 7);
    const auto& a = sc.users[0];
    // Pilots on symbols 1 and 4 with different flat channels.
    Mask mask(40, 7, 0);
    CGrid pilots(40, 7), y(40, 7);
    for (std::size_t m = 0; m < 40; ++m) {
        mask(m, 1) = mask(m, 4) = 1;
        pilots(m, 1) = pilots(m, 4) = cplx{0, 1};
        y(m, 1) = 2.0 * pilots(m, 1);
        y(m, 4) = 5.0 * pilots(m, 4);
    }
    const auto est = estimate_channel(y, pilots, mask, a, CirFitter(a, a.numerology.cp_len));
    const double want[] = {2, 2, 3, 4, 5, 5, 5};
    for (std::size_t l = 0; l < 7; ++l) EXPECT_LT(std::abs(est.cfr(7, l) - want[l]), 1e-9);
}

TEST(EstimateChannel, NoPilotSymbolIsAnError) {
    const auto sc = solo(64, 40, 3);
    const auto& a = sc.users[0];
    EXPECT_THROW(estimate_channel(CGrid(40, 3), CGrid(40, 3), Mask(40, 3, 0), a, CirFitter(a, 16)), std::invalid_argument);
}

TEST(Equalize, Examples) {
    CGrid y(1, 1, cplx{2, 0}), one(1, 1, cplx{1, 0}), zero(1, 1);
    EXPECT_EQ(equalize(y, one, 0.0)(0, 0), cplx(2, 0));
    EXPECT_EQ(equalize(y, zero, 0.5)(0, 0), cplx{});
    EXPECT_EQ(equalize(y, zero, 0.0)(0, 0), cplx{});
    EXPECT_EQ(equalize(y, one, 1.0)(0, 0), cplx(1, 0));
    EXPECT_THROW(equalize(y, CGrid(2, 1), 1.0), std::invalid_argument);
}

TEST(Equalize, PilotRefsAreSkipped) {
    CGrid y(2, 1, cplx{2, 0}), h(2, 1, cplx{1, 0});
    Mask pm(2, 1, 0);
    pm(1, 0) = 1;
    const auto d = equalize(y, h, 0.0, &pm);
    EXPECT_EQ(d(0, 0), cplx(2, 0));
    EXPECT_EQ(d(1, 0), cplx{});
}
