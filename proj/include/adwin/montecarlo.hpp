#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "adwin/psd.hpp"
#include "adwin/rxopt.hpp"
#include "adwin/txopt.hpp"

namespace adwin {

enum class Mode { Baseline, Alg1, Alg2, Alg1Alg2 };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::Baseline: return "baseline";
        case Mode::Alg1: return "alg1";
        case Mode::Alg2: return "alg2";
        case Mode::Alg1Alg2: return "alg1+alg2";
    }
    return "?";
}

inline Mode parse_mode(const std::string& s) {
    for (Mode m : {Mode::Baseline, Mode::Alg1, Mode::Alg2, Mode::Alg1Alg2})
        if (s == to_string(m)) return m;
    throw ConfigError("unknown mode '" + s + "' (expected baseline, alg1, alg2 or alg1+alg2)");
}

inline bool uses_tx(Mode m) { return m == Mode::Alg1 || m == Mode::Alg1Alg2; }
inline bool uses_rx(Mode m) { return m == Mode::Alg2 || m == Mode::Alg1Alg2; }

struct UserRecord {
    double snr_db = 0;
    double excess_snr_db = 0;    // own SNR minus the mean SNR of the other users
    double actual_mean = 0;      // mean capacity over data REs, true channel and reception
    double estimated_mean = 0;   // mean predicted capacity of the transmitted stream
    double mean_tx_ratio = 0;    // mean T/K over data REs
    double mean_rx_ratio = 0;    // mean R/K over data REs
};

struct RealizationRecord {
    std::size_t point = 0;       // sweep point
    double snr_diff_db = 0;
    std::size_t index = 0;       // realization within the point
    std::uint64_t seed = 0;
    Mode mode = Mode::Baseline;
    std::vector<UserRecord> users;
    double actual_network = 0;
    double estimated_before = 0;
    double estimated_after = 0;
    TxWindowPlan tx_plan;
    std::vector<IGrid> rx_plan;
    std::vector<Mask> data;
    OpCounter probe_ops, commit_ops;
    std::size_t probes = 0, commits = 0;
    std::vector<std::vector<double>> tx_psd;  // per user, linear Welch power of its own emission
};

struct RunOptions {
    std::uint64_t seed = 1;
    std::size_t realizations = 1;
    std::vector<Mode> modes{Mode::Baseline};
    std::vector<double> snr_diffs_db;  // empty: the scenario as configured
    std::size_t sweep_user = 0;
    std::size_t workers = 0;           // 0: hardware concurrency
    bool psd = false;
    std::size_t psd_segment = 256;
    std::size_t psd_overlap = 128;
};

struct RunResult {
    Scenario scenario;
    RunOptions options;
    std::vector<RealizationRecord> records;  // by (point, index, mode order)
    std::vector<std::vector<WelchAccumulator>> psd;  // [mode][user], merged in record order
};

// SNRs for one sweep point: the swept user sits `diff` above the reference,
// the first other user's configured SNR; every other user keeps its own.
inline Scenario sweep_point(const Scenario& sc, std::size_t sweep_user, double diff) {
    if (sweep_user >= sc.num_users()) throw ConfigError("sweep user index out of range");
    if (sc.num_users() < 2) throw ConfigError("an SNR-difference sweep needs at least two users");
    Scenario out = sc;
    const std::size_t ref = sweep_user == 0 ? 1 : 0;
    out.users[sweep_user].snr_db = sc.users[ref].snr_db + diff;
    out.config.users[sweep_user].snr_db = out.users[sweep_user].snr_db;
    return out;
}

inline double excess_snr_db(const Scenario& sc, std::size_t u) {
    if (sc.num_users() < 2) return 0.0;
    double others = 0;
    for (std::size_t v = 0; v < sc.num_users(); ++v)
        if (v != u) others += sc.users[v].snr_db;
    return sc.users[u].snr_db - others / static_cast<double>(sc.num_users() - 1);
}

namespace detail {

struct Realization {
    std::vector<ResourceGrid> dl, ul;
    std::vector<ChannelRealization> dl_channels;
    std::vector<CirPrediction> h;
};

// Welch segment and overlap, shrunk to a power of two that fits short slots.
inline std::pair<std::size_t, std::size_t> psd_shape(const Scenario& sc, const RunOptions& opt) {
    if (opt.psd_segment <= sc.slot_len()) return {opt.psd_segment, opt.psd_overlap};
    std::size_t seg = 1;
    while (seg * 2 <= sc.slot_len()) seg *= 2;
    return {seg, seg / 2};
}

inline Realization draw_realization(const Scenario& sc, std::uint64_t seed) {
    const std::size_t U = sc.num_users(), slot = sc.slot_len(), offset = sc.config.ul_timing_offset;
    Realization r;
    std::vector<ChannelRealization> ul_channels;
    std::size_t k_max = 0;
    for (const auto& a : sc.users) k_max = std::max(k_max, a.numerology.cp_len);
    for (std::size_t u = 0; u < U; ++u) {
        const auto& a = sc.users[u];
        const std::size_t K = a.numerology.cp_len;
        r.dl.push_back(make_resource_grid(a, sc.config.dl_dmrs, derive_seed(seed, {1, u})));
        r.ul.push_back(make_resource_grid(a, sc.config.ul_dmrs, derive_seed(seed, {2, u})));
        Rng pick(derive_seed(seed, {3, u}));
        const PdpProfile profile = a.pdp.draw(pick);
        // One fading process: the UL slot (plus timing offset and delay
        // spread of any user) followed by the DL slot.
        const std::size_t ul_len = slot + offset + k_max;
        const auto ch = make_tdl_channel(profile, a.rms_delay_spread_ns, doppler_hz(a.mobility_kmh, sc.config.carrier_hz),
                                         sc.sample_rate_hz(), ul_len + slot, derive_seed(seed, {4, u}), K);
        ul_channels.push_back(ch.segment(0, ul_len));
        r.dl_channels.push_back(ch.segment(ul_len, slot));
    }
    if (sc.config.genie_channel) {
        for (std::size_t u = 0; u < U; ++u) r.h.push_back(genie_cir(r.dl_channels[u], 0, slot, sc.users[u]));
    } else {
        const auto y = uplink_observation(sc, r.ul, ul_channels, offset, derive_seed(seed, {5}));
        r.h = estimate_ul_channel(y, sc, r.ul, offset);
    }
    return r;
}

inline std::vector<std::optional<double>> caps_of(const Scenario& sc) {
    std::vector<std::optional<double>> caps;
    for (const auto& u : sc.users) caps.push_back(u.mcs_bits);
    return caps;
}

inline NeighborSet neighbor_sets_for(const Scenario& sc, const UserAllocation& u) {
    const CoherenceModel cm{u.rms_delay_spread_ns * 1e-9, doppler_hz(u.mobility_kmh, sc.config.carrier_hz)};
    const std::size_t p = std::min(sc.config.neighbor_set_size, u.num_subcarriers * u.numerology.num_symbols);
    return build_neighbor_sets(u, cm, sc.sample_rate_hz(), p);
}

// Receive plans the receive optimizer would choose on the noiseless predicted reception.
inline std::vector<IGrid> predicted_rx_plans(const Scenario& sc, std::span<const cplx> x, std::span<const CirPrediction> h,
                                             const TaperTable& taper) {
    std::vector<IGrid> plans;
    for (std::size_t u = 0; u < sc.num_users(); ++u) {
        const auto& a = sc.users[u];
        const auto y = convolve_cir(x, h[u], sc.slot_len());
        const auto blocks = extract_symbols(y, a.numerology, 0);
        const auto base = receive_base_grid(blocks, a);
        plans.push_back(algorithm2(blocks, a, base, neighbor_sets_for(sc, a), taper).rx_plan);
    }
    return plans;
}

inline double mean_ratio(const IGrid& plan, const Mask& data, std::size_t K) {
    double acc = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < plan.size(); ++i)
        if (data.raw()[i]) {
            acc += static_cast<double>(plan.raw()[i]);
            ++n;
        }
    return n && K ? acc / static_cast<double>(n) / static_cast<double>(K) : 0.0;
}

}  // namespace detail

// One realization under every requested mode, sharing data, channels, noise and
// the channel estimate across modes.
inline std::vector<RealizationRecord> run_realization(const Scenario& sc, const TaperTable& taper, std::uint64_t seed,
                                                      const RunOptions& opt) {
    const std::size_t U = sc.num_users(), slot = sc.slot_len();
    const auto r = detail::draw_realization(sc, seed);
    const auto caps = detail::caps_of(sc);
    const auto x0 = synthesize_cp_ofdm(sc, r.dl);
    const auto pred0 = predict_rx(x0.samples, sc, r.h);
    const double est0 =
        make_capacity_state(pred0.symbols, pred0.cfr, r.dl, caps,
                            sc.config.alg1_capped ? CapacityMode::Capped : CapacityMode::Uncapped)
            .network();

    // True per-symbol CFRs for reporting.
    std::vector<CGrid> h_true;
    for (std::size_t u = 0; u < U; ++u) {
        const auto& a = sc.users[u];
        const auto& nm = a.numerology;
        CGrid H(a.num_subcarriers, nm.num_symbols);
        const double amp = std::sqrt(a.snr_linear());
        for (std::size_t l = 0; l < nm.num_symbols; ++l) {
            auto taps = r.dl_channels[u].mean_taps(l * nm.symbol_len() + nm.cp_len, nm.fft_size, nm.cp_len + 1);
            for (auto& v : taps) v *= amp;
            const auto col = cir_to_cfr(taps, a);
            std::copy(col.begin(), col.end(), H.column(l).begin());
        }
        h_true.push_back(std::move(H));
    }

    std::optional<Alg1Result> alg1;
    std::vector<RealizationRecord> out;
    for (Mode mode : opt.modes) {
        RealizationRecord rec;
        rec.seed = seed;
        rec.mode = mode;
        rec.estimated_before = est0;
        rec.estimated_after = est0;
        rec.tx_plan = zero_tx_plan(sc);
        SampleStream x = x0;
        if (uses_tx(mode)) {
            if (!alg1) {
                const Alg1Options ao{sc.config.alg1_capped, sc.config.alg1_objective};
                std::vector<IGrid> rx_plans;
                if (sc.config.alg1_rx_aware) rx_plans = detail::predicted_rx_plans(sc, x0.samples, r.h, taper);
                alg1 = algorithm1(sc, r.dl, r.h, taper, ao, sc.config.alg1_rx_aware ? &rx_plans : nullptr);
            }
            x = alg1->x;
            rec.tx_plan = alg1->plan;
            rec.estimated_before = alg1->estimated_before;
            rec.estimated_after = alg1->estimated_after;
            rec.probe_ops = alg1->probe_ops;
            rec.commit_ops = alg1->commit_ops;
            rec.probes = alg1->probes;
            rec.commits = alg1->commits;
        }
        const auto est = make_capacity_state(predict_rx(x.samples, sc, r.h).symbols, pred0.cfr, r.dl, caps, CapacityMode::Uncapped);

        std::vector<double> means;
        for (std::size_t u = 0; u < U; ++u) {
            const auto& a = sc.users[u];
            const auto& nm = a.numerology;
            const auto y = apply_channel(x, r.dl_channels[u], a.snr_db, derive_seed(seed, {6, u}), slot);
            const auto blocks = extract_symbols(y.samples, nm, 0);
            CGrid yy = receive_base_grid(blocks, a);
            IGrid rx_plan(a.num_subcarriers, nm.num_symbols, 0);
            if (uses_rx(mode)) {
                auto res = algorithm2(blocks, a, yy, detail::neighbor_sets_for(sc, a), taper);
                yy = std::move(res.windowed);
                rx_plan = std::move(res.rx_plan);
            }
            const auto data = data_mask(r.dl[u]);
            RGrid eta(a.num_subcarriers, nm.num_symbols);
            for (std::size_t l = 0; l < nm.num_symbols; ++l)
                for (std::size_t m = 0; m < a.num_subcarriers; ++m)
                    eta(m, l) = capped_capacity(re_capacity(h_true[u](m, l), yy(m, l), r.dl[u].symbol(m, l)), caps[u]);
            UserRecord ur;
            ur.snr_db = a.snr_db;
            ur.excess_snr_db = excess_snr_db(sc, u);
            ur.actual_mean = mean_over(eta, data);
            ur.estimated_mean = est.users[u].mean();
            ur.mean_tx_ratio = detail::mean_ratio(rec.tx_plan[u], data, nm.cp_len);
            ur.mean_rx_ratio = detail::mean_ratio(rx_plan, data, nm.cp_len);
            means.push_back(ur.actual_mean);
            rec.users.push_back(ur);
            rec.rx_plan.push_back(std::move(rx_plan));
            rec.data.push_back(data);
        }
        rec.actual_network = network_fair_capacity(means);

        if (opt.psd) {
            for (std::size_t u = 0; u < U; ++u) {
                // The user's own emission: its CP-OFDM samples plus its window deltas.
                std::vector<cplx> xu = synthesize_user(sc.users[u], r.dl[u]);
                add_tx_window_deltas(xu, sc.users[u], r.dl[u], rec.tx_plan[u], taper);
                const auto [seg, ovl] = detail::psd_shape(sc, opt);
                WelchAccumulator acc(seg, ovl, sc.sample_rate_hz());
                acc.add(xu);
                for (auto& p : acc.power) p /= static_cast<double>(acc.segments);
                rec.tx_psd.push_back(std::move(acc.power));
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

// Realizations are spread over workers; each derives its seed from the
// master seed and its (point, index), so results do not depend on the
// worker count.
inline RunResult run_monte_carlo(const Scenario& sc, const RunOptions& opt) {
    if (opt.realizations == 0) throw ConfigError("realizations must be at least 1");
    RunResult res;
    res.scenario = sc;
    res.options = opt;
    if (opt.modes.empty()) return res;

    std::vector<Scenario> points;
    std::vector<double> diffs = opt.snr_diffs_db;
    if (diffs.empty()) {
        points.push_back(sc);
        diffs.push_back(sc.num_users() > 1 ? excess_snr_db(sc, opt.sweep_user) : 0.0);
    } else {
        for (double d : diffs) points.push_back(sweep_point(sc, opt.sweep_user, d));
    }
    const TaperTable taper = default_taper_table(sc);

    const std::size_t jobs = points.size() * opt.realizations;
    std::vector<std::vector<RealizationRecord>> slots(jobs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs) return;
            const std::size_t p = j / opt.realizations, i = j % opt.realizations;
            try {
                auto recs = run_realization(points[p], taper, derive_seed(opt.seed, {p, i}), opt);
                for (auto& rec : recs) {
                    rec.point = p;
                    rec.snr_diff_db = diffs[p];
                    rec.index = i;
                }
                slots[j] = std::move(recs);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next = jobs;
                return;
            }
        }
    };
    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min(jobs, opt.workers ? opt.workers : std::thread::hardware_concurrency()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (auto& s : slots)
        for (auto& rec : s) res.records.push_back(std::move(rec));

    if (opt.psd) {
        res.psd.assign(opt.modes.size(), {});
        for (auto& per_mode : res.psd)
            for (std::size_t u = 0; u < sc.num_users(); ++u)
                per_mode.emplace_back(detail::psd_shape(sc, opt).first, detail::psd_shape(sc, opt).second,
                                      sc.sample_rate_hz());
        for (const auto& rec : res.records) {
            const std::size_t k = static_cast<std::size_t>(
                std::find(opt.modes.begin(), opt.modes.end(), rec.mode) - opt.modes.begin());
            for (std::size_t u = 0; u < rec.tx_psd.size(); ++u) {
                auto& acc = res.psd[k][u];
                for (std::size_t b = 0; b < acc.power.size(); ++b) acc.power[b] += rec.tx_psd[u][b];
                ++acc.segments;
            }
        }
    }
    return res;
}

}  // namespace adwin
