#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace adwin;

namespace {

UserAllocation fast_user_14() {
    auto c = ScenarioConfig::paper_default();
    c.users.pop_back();
    c.users[0].num_symbols = 14;
    return build_scenario(c).users[0];
}

CoherenceModel fast_stats(const UserAllocation& u) {
    return {u.rms_delay_spread_ns * 1e-9, doppler_hz(u.mobility_kmh, 4e9)};
}

std::vector<std::uint32_t> sorted(std::span<const std::uint32_t> s) {
    std::vector<std::uint32_t> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    return v;
}

std::size_t new_members(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    const auto x = sorted(a), y = sorted(b);
    std::vector<std::uint32_t> d;
    std::set_difference(y.begin(), y.end(), x.begin(), x.end(), std::back_inserter(d));
    return d.size();
}

// Received symbols of the fast toy user: both users through static multipath
// channels longer than the fast CP, plus noise, so windowing matters.
struct ToyReception {
    Scenario sc;
    SymbolBlocks blocks;
    CGrid y0;
    TaperTable taper;
};

ToyReception toy_reception(std::uint64_t seed) {
    ToyReception t{build_scenario(fixtures::toy_config()), {}, {}, {}};
    const auto& sc = t.sc;
    const auto grids = fixtures::make_grids(sc, DmrsPattern::every_nth(2), seed);
    const auto x = synthesize_cp_ofdm(sc, grids);
    TdlChannelSpec spec;
    spec.taps = {{0, 1.0}, {2, 0.5}, {5, 0.3}};
    spec.sample_rate_hz = sc.sample_rate_hz();
    spec.duration = x.size() + 8;
    const auto ch = make_channel(spec, seed + 11);
    const auto y = apply_channel(x, ch, 20.0, seed + 12);
    const auto& u = sc.users[0];
    t.blocks = extract_symbols(y.samples, u.numerology, 0);
    t.y0 = receive_base_grid(t.blocks, u);
    t.taper = default_taper_table(sc);
    return t;
}

}  // namespace

TEST(NeighborSets, SizeOneIsTheAnchor) {
    const auto u = fast_user_14();
    const auto sets = build_neighbor_sets(u, fast_stats(u), 7.68e6, 1);
    for (std::size_t l = 0; l < 14; ++l)
        for (std::size_t m = 0; m < 60; ++m) {
            ASSERT_EQ(sets.members(m, l).size(), 1u);
            EXPECT_EQ(sets.members(m, l)[0], l * 60 + m);
        }
}

TEST(NeighborSets, FullGridSetsAreIdentical) {
    const auto sc = build_scenario(fixtures::single_user_config(32, 12, 4));
    const auto& u = sc.users[0];
    const auto sets = build_neighbor_sets(u, {100e-9, 200.0}, 7.68e6, 48);
    const auto first = sorted(sets.members(0, 0));
    for (std::size_t l = 0; l < 4; ++l)
        for (std::size_t m = 0; m < 12; ++m) EXPECT_EQ(sorted(sets.members(m, l)), first);
}

TEST(NeighborSets, AnchorFirstAndMembersDistinctAndInBounds) {
    const auto u = fast_user_14();
    const auto sets = build_neighbor_sets(u, fast_stats(u), 7.68e6, 33);
    for (std::size_t l = 0; l < 14; ++l)
        for (std::size_t m = 0; m < 60; ++m) {
            const auto s = sets.members(m, l);
            ASSERT_EQ(s.size(), 33u);
            EXPECT_EQ(s[0], l * 60 + m);
            EXPECT_EQ(std::set<std::uint32_t>(s.begin(), s.end()).size(), 33u);
            for (auto i : s) EXPECT_LT(i, 60u * 14u);
        }
}

TEST(NeighborSets, MembersMinimizeCoherenceDistance) {
    const auto u = fast_user_14();
    const auto cm = fast_stats(u);
    const auto sets = build_neighbor_sets(u, cm, 7.68e6, 33);
    const double fs = u.numerology.subcarrier_spacing_hz / cm.coherence_bandwidth_hz();
    const double ts = static_cast<double>(u.numerology.symbol_len()) / 7.68e6 / cm.coherence_time_s();
    auto dist = [&](std::size_t m, std::size_t l, std::uint32_t i) {
        const double a = (static_cast<double>(i % 60) - static_cast<double>(m)) * fs;
        const double b = (static_cast<double>(i / 60) - static_cast<double>(l)) * ts;
        return a * a + b * b;
    };
    for (auto [m, l] : {std::pair<std::size_t, std::size_t>{0, 0}, {30, 7}, {59, 13}, {5, 12}}) {
        const auto s = sets.members(m, l);
        double worst_in = 0;
        for (auto i : s) worst_in = std::max(worst_in, dist(m, l, i));
        const std::set<std::uint32_t> in(s.begin(), s.end());
        for (std::uint32_t i = 0; i < 60 * 14; ++i)
            if (!in.count(i)) {
                EXPECT_GE(dist(m, l, i), worst_in);
            }
    }
}

TEST(NeighborSets, FrequencyAdjacentAnchorsDifferByFewMembers) {
    const auto u = fast_user_14();
    const auto sets = build_neighbor_sets(u, fast_stats(u), 7.68e6, 33);
    const std::size_t bound = static_cast<std::size_t>(std::ceil(std::log(33.0) + 2.0));
    std::size_t worst = 0;
    for (std::size_t l = 0; l < 14; ++l)
        for (std::size_t m = 0; m + 1 < 60; ++m) worst = std::max(worst, new_members(sets.members(m, l), sets.members(m + 1, l)));
    EXPECT_LE(worst, bound);
}

TEST(NeighborSets, OversizedSetIsAnError) {
    const auto sc = build_scenario(fixtures::single_user_config(32, 12, 4));
    EXPECT_THROW(build_neighbor_sets(sc.users[0], {}, 7.68e6, 49), std::invalid_argument);
    EXPECT_THROW(build_neighbor_sets(sc.users[0], {}, 7.68e6, 0), std::invalid_argument);
}

TEST(DeltaCube, MatchesPerSymbolDeltaAndOracle) {
    const auto t = toy_reception(1);
    const auto& u = t.sc.users[0];
    const auto dd = rx_window_delta_cube(t.blocks, u, t.taper);
    const std::size_t N = u.numerology.fft_size, K = u.numerology.cp_len;
    for (std::size_t l = 0; l < u.numerology.num_symbols; ++l)
        for (std::size_t m = 0; m < u.num_subcarriers; ++m)
            for (std::size_t r = 0; r <= K; ++r) {
                const cplx d = dd(l * u.num_subcarriers + m, r);
                EXPECT_LT(std::abs(d - rx_window_symbol_delta(t.blocks.block(l), N, K, u.subcarrier_index(m), t.taper.rise(r))),
                          1e-12);
                EXPECT_LT(std::abs(t.y0(m, l) + d -
                                   oracle::brute_force_rx_window(t.blocks.block(l), N, K, u.subcarrier_index(m), r)),
                          1e-12);
            }
}

TEST(VarianceStatistic, IdenticalMembersGiveZero) {
    CGrid y(4, 2, cplx{0.3, -0.7});
    const DeltaCube dd(4, 2, 3);
    const std::vector<std::uint32_t> set{0, 1, 2, 5, 7};
    for (std::size_t r = 0; r <= 3; ++r) EXPECT_EQ(variance_statistic(y, dd, set, r), 0.0);
}

TEST(VarianceStatistic, UnwindowedEqualsTwoPassVariance) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        CGrid y(10, 4);
        const auto v = fixtures::random_samples(40, s);
        std::copy(v.begin(), v.end(), y.raw().begin());
        const DeltaCube dd(10, 4, 2);
        std::vector<std::uint32_t> set{0, 3, 4, 9, 17, 22, 39};
        std::vector<cplx> members;
        for (auto i : set) members.push_back(y.raw()[i]);
        EXPECT_NEAR(variance_statistic(y, dd, set, 0), oracle::two_pass_variance(members), 1e-12);
    }
}

TEST(VarianceStatistic, WindowedEqualsVarianceOfWindowedSymbols) {
    const auto t = toy_reception(2);
    const auto& u = t.sc.users[0];
    const auto dd = rx_window_delta_cube(t.blocks, u, t.taper);
    const auto sets = build_neighbor_sets(u, {100e-9, 100.0}, t.sc.sample_rate_hz(), 9);
    VarianceTable table(t.y0, dd, 9);
    const std::size_t M = u.num_subcarriers, N = u.numerology.fft_size, K = u.numerology.cp_len;
    for (std::size_t l = 0; l < u.numerology.num_symbols; ++l)
        for (std::size_t m = 0; m < M; ++m) {
            if (m == 0) {
                table.reset(sets.members(m, l));
            } else {
                table.move_to(sets.members(m, l));
            }
            for (std::size_t r = 0; r <= K; ++r) {
                std::vector<cplx> vals;
                for (auto i : sets.members(m, l))
                    vals.push_back(oracle::brute_force_rx_window(t.blocks.block(i / M), N, K, u.subcarrier_index(i % M), r));
                const double want = oracle::two_pass_variance(vals);
                EXPECT_NEAR(table.statistic(r), want, 1e-12 * std::max(1.0, want));
                EXPECT_NEAR(variance_statistic(t.y0, dd, sets.members(m, l), r), want, 1e-12 * std::max(1.0, want));
            }
        }
}

TEST(VarianceStatistic, IncrementalSwapMatchesScratch) {
    CGrid y(8, 3);
    const auto v = fixtures::random_samples(24, 5);
    std::copy(v.begin(), v.end(), y.raw().begin());
    DeltaCube dd(8, 3, 2);
    Rng rng(6);
    for (std::uint32_t i = 0; i < 24; ++i)
        for (std::size_t r = 1; r <= 2; ++r) dd(i, r) = complex_gaussian(rng, 0.2);
    VarianceTable table(y, dd, 5);
    const std::vector<std::uint32_t> a{0, 1, 2, 8, 9}, b{1, 2, 3, 9, 10};
    table.reset(a);
    EXPECT_EQ(table.move_to(b), 2u);
    for (std::size_t r = 0; r <= 2; ++r) EXPECT_NEAR(table.statistic(r), variance_statistic(y, dd, b, r), 1e-12);
    EXPECT_THROW(table.move_to(std::vector<std::uint32_t>{1, 2}), std::invalid_argument);
}

TEST(Algorithm2, CyclicNoiselessInputChoosesFullDurationAndKeepsSymbols) {
    const auto sc = build_scenario(fixtures::single_user_config(32, 12, 4));
    const auto& u = sc.users[0];
    const auto g = make_resource_grid(u, DmrsPattern::every_nth(2), 3);
    const auto x = synthesize_user(u, g);
    const auto blocks = extract_symbols(x, u.numerology, 0);
    const auto y0 = receive_base_grid(blocks, u);
    const auto sets = build_neighbor_sets(u, {100e-9, 100.0}, sc.sample_rate_hz(), 9);
    const auto res = algorithm2(blocks, u, y0, sets, default_taper_table(sc), true);
    for (int r : res.rx_plan.raw()) EXPECT_EQ(r, static_cast<int>(u.numerology.cp_len));
    EXPECT_EQ(res.windowed, y0);
    for (const auto& trace : res.visited)
        for (double v : trace) EXPECT_EQ(v, trace.front());
}

// Member i carries Y0 = -a_i g(r*), delta a_i g(r) with g increasing, so the
// set variance is var(a) (g(r) - g(r*))^2: strictly convex with minimum at r*.
TEST(Algorithm2, SyntheticConvexProfileFindsMinimum) {
    const std::size_t M = 6, L = 2, K = 7;
    const std::vector<std::uint32_t> all{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < M * L; ++i) {
        members.push_back(static_cast<std::uint32_t>(i));
        for (auto j : all)
            if (j != i) members.push_back(j);
    }
    const NeighborSet sets(M, L, M * L, members);
    Rng rng(9);
    for (std::size_t rstar = 0; rstar <= K; ++rstar) {
        CGrid y0(M, L);
        DeltaCube dd(M, L, K);
        for (std::size_t i = 0; i < M * L; ++i) {
            const cplx a = complex_gaussian(rng);
            y0.raw()[i] = cplx{2, 1} - a * std::sqrt(static_cast<double>(rstar));
            for (std::size_t r = 0; r <= K; ++r) dd(i, r) = a * std::sqrt(static_cast<double>(r));
        }
        const auto res = algorithm2(y0, dd, sets);
        for (int r : res.rx_plan.raw()) EXPECT_EQ(r, static_cast<int>(rstar));
    }
}

TEST(Algorithm2, MonotoneInterferenceSelectsItsArgmin) {
    const std::size_t M = 5, L = 1, K = 4;
    std::vector<std::uint32_t> members;
    for (std::uint32_t i = 0; i < 5; ++i) {
        members.push_back(i);
        for (std::uint32_t j = 0; j < 5; ++j)
            if (j != i) members.push_back(j);
    }
    const NeighborSet sets(M, L, 5, members);
    Rng rng(10);
    for (bool increasing : {true, false}) {
        CGrid y0(M, L);
        DeltaCube dd(M, L, K);
        for (std::size_t i = 0; i < M; ++i) {
            const cplx a = complex_gaussian(rng);
            // Interference amplitude (r + 1) or (K + 1 - r), varying over members.
            y0.raw()[i] = a * (increasing ? 1.0 : static_cast<double>(K + 1));
            for (std::size_t r = 0; r <= K; ++r)
                dd(i, r) = a * (increasing ? static_cast<double>(r) : -static_cast<double>(r));
        }
        const auto res = algorithm2(y0, dd, sets);
        for (int r : res.rx_plan.raw()) EXPECT_EQ(r, increasing ? 0 : static_cast<int>(K));
    }
}

TEST(Algorithm2, ChosenDurationIsMinimumOfVisitedStatistics) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto t = toy_reception(s);
        const auto& u = t.sc.users[0];
        const auto sets = build_neighbor_sets(u, {100e-9, 100.0}, t.sc.sample_rate_hz(), 9);
        const auto res = algorithm2(t.blocks, u, t.y0, sets, t.taper, true);
        const std::size_t K = u.numerology.cp_len;
        for (std::size_t l = 0; l < u.numerology.num_symbols; ++l)
            for (std::size_t m = 0; m < u.num_subcarriers; ++m) {
                const auto& trace = res.visited[l * u.num_subcarriers + m];
                const auto R = static_cast<std::size_t>(res.rx_plan(m, l));
                ASSERT_EQ(trace.size(), std::min(R + 1, K) + 1);
                for (double v : trace) EXPECT_LE(trace[R], v);
                EXPECT_GE(trace[R], 0.0);
                const auto want = oracle::brute_force_rx_window(t.blocks.block(l), u.numerology.fft_size, K,
                                                                u.subcarrier_index(m), R);
                EXPECT_LT(std::abs(res.windowed(m, l) - want), 1e-12);
            }
    }
}
