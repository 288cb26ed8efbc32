#pragma once

#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "adwin/montecarlo.hpp"
#include "adwin/stats.hpp"

namespace adwin {

inline constexpr int results_schema_version = 1;
inline constexpr std::size_t ratio_histogram_bins = 10;

// Counts of duration/K over data REs in `bins` equal bins of [0, 1], the last closed.
inline std::vector<std::size_t> ratio_histogram(const IGrid& plan, const Mask& data, std::size_t K, std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
    if (!plan.same_shape(data)) throw std::invalid_argument("histogram: shape mismatch");
    std::vector<std::size_t> h(bins, 0);
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (!data.raw()[i]) continue;
        const double r = K ? static_cast<double>(plan.raw()[i]) / static_cast<double>(K) : 0.0;
        h[std::min(bins - 1, static_cast<std::size_t>(r * static_cast<double>(bins)))]++;
    }
    return h;
}

// Counts of |d[i+1] - d[i]| (0..K) between neighbouring data REs, along
// frequency (same symbol) or time (same subcarrier).
inline std::vector<std::size_t> adjacent_differences(const IGrid& plan, const Mask& data, std::size_t K, bool along_frequency) {
    if (!plan.same_shape(data)) throw std::invalid_argument("adjacent differences: shape mismatch");
    std::vector<std::size_t> h(K + 1, 0);
    const std::size_t M = plan.rows(), L = plan.cols();
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t m = 0; m < M; ++m) {
            const std::size_t m2 = along_frequency ? m + 1 : m, l2 = along_frequency ? l : l + 1;
            if (m2 >= M || l2 >= L || !data(m, l) || !data(m2, l2)) continue;
            const auto d = static_cast<std::size_t>(std::abs(plan(m2, l2) - plan(m, l)));
            h[std::min(d, K)]++;
        }
    return h;
}

namespace detail {

inline nlohmann::json stats_json(const std::vector<double>& v) {
    const auto s = summarize(v);
    nlohmann::json j{{"n", s.n}, {"mean", s.mean}, {"stddev", s.stddev}};
    if (!v.empty()) {
        j["q05"] = quantile(v, 0.05);
        j["median"] = quantile(v, 0.5);
        j["q95"] = quantile(v, 0.95);
    }
    return j;
}

inline void add_into(std::vector<std::size_t>& acc, const std::vector<std::size_t>& h) {
    if (acc.size() < h.size()) acc.resize(h.size(), 0);
    for (std::size_t i = 0; i < h.size(); ++i) acc[i] += h[i];
}

}  // namespace detail

inline nlohmann::json summary_json(const RunResult& res) {
    using nlohmann::json;
    const auto& sc = res.scenario;
    json users = json::array();
    for (const auto& u : sc.users)
        users.push_back({{"name", u.name},
                         {"fft_size", u.numerology.fft_size},
                         {"cp_len", u.numerology.cp_len},
                         {"num_symbols", u.numerology.num_symbols},
                         {"num_subcarriers", u.num_subcarriers},
                         {"first_subcarrier", u.first_subcarrier},
                         {"subcarrier_spacing_hz", u.numerology.subcarrier_spacing_hz},
                         {"snr_db", u.snr_db}});
    json modes = json::array();
    for (Mode m : res.options.modes) modes.push_back(to_string(m));

    json out{{"schema_version", results_schema_version},
             {"scenario", {{"bandwidth_hz", sc.bandwidth_hz}, {"users", users}}},
             {"options",
              {{"seed", res.options.seed},
               {"realizations", res.options.realizations},
               {"modes", modes},
               {"snr_diffs_db", res.options.snr_diffs_db},
               {"sweep_user", res.options.sweep_user}}},
             {"runs", res.records.size()},
             {"results", json::array()}};

    for (Mode mode : res.options.modes) {
        std::map<std::size_t, std::vector<const RealizationRecord*>> by_point;
        for (const auto& r : res.records)
            if (r.mode == mode) by_point[r.point].push_back(&r);
        json points = json::array();
        const std::size_t U = sc.num_users();
        std::vector<std::vector<double>> all_excess(U), all_tx(U), all_rx(U);
        for (const auto& [p, recs] : by_point) {
            std::vector<double> net, before, after;
            std::vector<std::vector<double>> actual(U), estimated(U), tx(U), rx(U);
            std::vector<std::vector<std::size_t>> tx_hist(U), rx_hist(U), tx_df(U), tx_dt(U), rx_df(U), rx_dt(U);
            for (const auto* r : recs) {
                net.push_back(r->actual_network);
                before.push_back(r->estimated_before);
                after.push_back(r->estimated_after);
                for (std::size_t u = 0; u < U; ++u) {
                    const std::size_t K = sc.users[u].numerology.cp_len;
                    const auto& ur = r->users[u];
                    actual[u].push_back(ur.actual_mean);
                    estimated[u].push_back(ur.estimated_mean);
                    tx[u].push_back(ur.mean_tx_ratio);
                    rx[u].push_back(ur.mean_rx_ratio);
                    all_excess[u].push_back(ur.excess_snr_db);
                    all_tx[u].push_back(ur.mean_tx_ratio);
                    all_rx[u].push_back(ur.mean_rx_ratio);
                    detail::add_into(tx_hist[u], ratio_histogram(r->tx_plan[u], r->data[u], K, ratio_histogram_bins));
                    detail::add_into(rx_hist[u], ratio_histogram(r->rx_plan[u], r->data[u], K, ratio_histogram_bins));
                    detail::add_into(tx_df[u], adjacent_differences(r->tx_plan[u], r->data[u], K, true));
                    detail::add_into(tx_dt[u], adjacent_differences(r->tx_plan[u], r->data[u], K, false));
                    detail::add_into(rx_df[u], adjacent_differences(r->rx_plan[u], r->data[u], K, true));
                    detail::add_into(rx_dt[u], adjacent_differences(r->rx_plan[u], r->data[u], K, false));
                }
            }
            json pu = json::array();
            std::vector<double> user_means;
            for (std::size_t u = 0; u < U; ++u) {
                user_means.push_back(summarize(actual[u]).mean);
                pu.push_back({{"name", sc.users[u].name},
                              {"excess_snr_db", recs.front()->users[u].excess_snr_db},
                              {"actual_mean", detail::stats_json(actual[u])},
                              {"estimated_mean", detail::stats_json(estimated[u])},
                              {"tx_ratio", detail::stats_json(tx[u])},
                              {"rx_ratio", detail::stats_json(rx[u])},
                              {"tx_ratio_histogram", tx_hist[u]},
                              {"rx_ratio_histogram", rx_hist[u]},
                              {"tx_adjacent_diff_frequency", tx_df[u]},
                              {"tx_adjacent_diff_time", tx_dt[u]},
                              {"rx_adjacent_diff_frequency", rx_df[u]},
                              {"rx_adjacent_diff_time", rx_dt[u]}});
            }
            points.push_back({{"point", p},
                              {"snr_diff_db", recs.front()->snr_diff_db},
                              {"realizations", recs.size()},
                              {"actual_network", detail::stats_json(net)},
                              {"fair_of_user_means", network_fair_capacity(user_means)},
                              {"estimated_before", detail::stats_json(before)},
                              {"estimated_after", detail::stats_json(after)},
                              {"users", pu}});
        }
        json trends = json::array();
        if (by_point.size() > 1) {
            for (std::size_t u = 0; u < U; ++u) {
                const auto t = spearman(all_excess[u], all_tx[u]);
                const auto r = spearman(all_excess[u], all_rx[u]);
                trends.push_back({{"name", sc.users[u].name},
                                  {"tx_ratio_vs_excess_snr", {{"rho", t.rho}, {"p_value", t.p_value}, {"n", t.n}}},
                                  {"rx_ratio_vs_excess_snr", {{"rho", r.rho}, {"p_value", r.p_value}, {"n", r.n}}}});
            }
        }
        out["results"].push_back({{"mode", to_string(mode)}, {"points", points}, {"trends", trends}});
    }
    return out;
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw IoError("cannot write " + p.string());
    f.precision(17);
    return f;
}

inline void finish(std::ofstream& f, const std::filesystem::path& p) {
    f.flush();
    if (!f) throw IoError("failed writing " + p.string());
}

}  // namespace detail

// One row per realization, mode and user.
inline void write_results_csv(const RunResult& res, const std::filesystem::path& path) {
    auto f = detail::open_for_write(path);
    f << "point,snr_diff_db,realization,seed,mode,user,snr_db,excess_snr_db,actual_mean,estimated_mean,"
         "mean_tx_ratio,mean_rx_ratio,actual_network,estimated_before,estimated_after,probes,commits,"
         "probe_adds,probe_mults\n";
    for (const auto& r : res.records)
        for (std::size_t u = 0; u < r.users.size(); ++u) {
            const auto& ur = r.users[u];
            f << r.point << ',' << r.snr_diff_db << ',' << r.index << ',' << r.seed << ',' << to_string(r.mode) << ','
              << res.scenario.users[u].name << ',' << ur.snr_db << ',' << ur.excess_snr_db << ',' << ur.actual_mean << ','
              << ur.estimated_mean << ',' << ur.mean_tx_ratio << ',' << ur.mean_rx_ratio << ',' << r.actual_network << ','
              << r.estimated_before << ',' << r.estimated_after << ',' << r.probes << ',' << r.commits << ','
              << r.probe_ops.adds << ',' << r.probe_ops.mults << '\n';
        }
    detail::finish(f, path);
}

// Per-mode PSD of each user's own emission, averaged over all realizations.
inline void write_psd_csv(const RunResult& res, const std::filesystem::path& dir) {
    for (std::size_t k = 0; k < res.psd.size(); ++k) {
        const auto path = dir / ("psd_" + std::string(to_string(res.options.modes[k])) + ".csv");
        auto f = detail::open_for_write(path);
        f << "freq_hz";
        for (const auto& u : res.scenario.users) f << ',' << u.name << "_db";
        f << '\n';
        std::vector<PsdEstimate> est;
        for (const auto& acc : res.psd[k]) est.push_back(acc.estimate());
        for (std::size_t b = 0; b < est.front().freq_hz.size(); ++b) {
            f << est.front().freq_hz[b];
            for (const auto& e : est) f << ',' << e.power_db[b];
            f << '\n';
        }
        detail::finish(f, path);
    }
}

inline void emit_results(const RunResult& res, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
    write_results_csv(res, dir / "results.csv");
    const auto sp = dir / "summary.json";
    auto f = detail::open_for_write(sp);
    f << summary_json(res).dump(2) << '\n';
    detail::finish(f, sp);
    if (!res.psd.empty()) write_psd_csv(res, dir);
}

}  // namespace adwin
