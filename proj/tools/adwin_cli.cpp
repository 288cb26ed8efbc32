#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "adwin/adwin.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_io = 3;

// "snr-diff=lo:hi:step", inclusive of hi within rounding.
std::vector<double> parse_sweep(const std::string& spec) {
    const std::string prefix = "snr-diff=";
    if (spec.rfind(prefix, 0) != 0) throw adwin::ConfigError("--sweep: expected snr-diff=lo:hi:step");
    std::vector<double> v;
    std::stringstream ss(spec.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ':')) v.push_back(adwin::detail::parse_double("--sweep", item));
    if (v.size() != 3) throw adwin::ConfigError("--sweep: expected snr-diff=lo:hi:step");
    const double lo = v[0], hi = v[1], step = v[2];
    if (!(step > 0) || hi < lo) throw adwin::ConfigError("--sweep: need lo <= hi and step > 0");
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

std::vector<adwin::Mode> parse_modes(const std::vector<std::string>& names) {
    std::vector<adwin::Mode> modes;
    for (const auto& n : names) {
        std::stringstream ss(n);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == "all") {
                for (auto m : {adwin::Mode::Baseline, adwin::Mode::Alg1, adwin::Mode::Alg2, adwin::Mode::Alg1Alg2})
                    modes.push_back(m);
            } else {
                modes.push_back(adwin::parse_mode(item));
            }
        }
    }
    return modes;
}

std::size_t resolve_user(const adwin::Scenario& sc, const std::string& who) {
    for (std::size_t u = 0; u < sc.num_users(); ++u)
        if (sc.users[u].name == who) return u;
    const auto idx = adwin::detail::parse_uint("--sweep-user", who);
    if (idx >= sc.num_users()) throw adwin::ConfigError("--sweep-user: no user " + who);
    return idx;
}

void print_summary(const adwin::RunResult& res) {
    const auto j = adwin::summary_json(res);
    for (const auto& block : j["results"]) {
        for (const auto& p : block["points"]) {
            std::printf("%-10s snr_diff %+6.2f dB  n=%zu  network %.4f", block["mode"].get<std::string>().c_str(),
                        p["snr_diff_db"].get<double>(), p["realizations"].get<std::size_t>(),
                        p["actual_network"]["mean"].get<double>());
            for (const auto& u : p["users"])
                std::printf("  %s T/K %.3f R/K %.3f", u["name"].get<std::string>().c_str(),
                            u["tx_ratio"]["mean"].get<double>(), u["rx_ratio"]["mean"].get<double>());
            std::printf("\n");
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive per-RE transmit/receive windowing simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a Monte-Carlo experiment");
    std::string scenario_path, out_dir, sweep, sweep_user = "0";
    std::vector<std::string> mode_names{"baseline"};
    std::size_t realizations = 100, workers = 0;
    std::uint64_t seed = 1;
    bool psd = false;
    run->add_option("--scenario", scenario_path, "Scenario INI file")->required();
    run->add_option("--mode", mode_names, "baseline, alg1, alg2, alg1+alg2 or all (comma separated or repeated)");
    run->add_option("--realizations", realizations, "Realizations per sweep point");
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--sweep", sweep, "SNR-difference sweep, snr-diff=lo:hi:step (dB)");
    run->add_option("--sweep-user", sweep_user, "User whose SNR is swept (index or name)");
    run->add_option("--workers", workers, "Worker threads (0: all cores)");
    run->add_flag("--psd", psd, "Also write per-mode transmit PSDs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    try {
        const auto sc = adwin::build_scenario(adwin::load_scenario_file(scenario_path));
        adwin::RunOptions opt;
        opt.seed = seed;
        opt.realizations = realizations;
        opt.modes = parse_modes(mode_names);
        opt.workers = workers;
        opt.psd = psd;
        opt.sweep_user = resolve_user(sc, sweep_user);
        if (!sweep.empty()) opt.snr_diffs_db = parse_sweep(sweep);
        const auto res = adwin::run_monte_carlo(sc, opt);
        adwin::emit_results(res, out_dir);
        print_summary(res);
    } catch (const adwin::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const adwin::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
