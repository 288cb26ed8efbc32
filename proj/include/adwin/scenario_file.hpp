#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "adwin/grid.hpp"

namespace adwin {

namespace detail {

using boost::property_tree::ptree;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (trim(v.substr(pos)).empty()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a number, got '" + v + "'");
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    try {
        if (!v.empty() && v.front() != '-') {
            std::size_t pos = 0;
            const auto n = std::stoull(v, &pos);
            if (trim(v.substr(pos)).empty()) return n;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
}

inline long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const auto n = std::stoll(v, &pos);
        if (trim(v.substr(pos)).empty()) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline CpRate parse_cp_rate(const std::string& key, const std::string& v) {
    const auto slash = v.find('/');
    if (slash == std::string::npos) throw ConfigError(key + ": expected a ratio like 9/128, got '" + v + "'");
    CpRate r{parse_uint(key, trim(v.substr(0, slash))), parse_uint(key, trim(v.substr(slash + 1)))};
    if (r.den == 0) throw ConfigError(key + ": zero denominator");
    return r;
}

inline DmrsPattern parse_dmrs(const std::string& key, const std::string& v) {
    if (v == "dl_type_a") return DmrsPattern::dl_type_a();
    if (v == "ul_type_b") return DmrsPattern::ul_type_b();
    if (v.rfind("every:", 0) == 0) {
        const auto k = parse_uint(key, v.substr(6));
        if (k == 0) throw ConfigError(key + ": every:k needs k >= 1");
        return DmrsPattern::every_nth(k);
    }
    throw ConfigError(key + ": expected dl_type_a, ul_type_b or every:k, got '" + v + "'");
}

// "a,b,c" weights of TDL-A, TDL-B, TDL-C, or a single profile name.
inline PdpMix parse_pdp(const std::string& key, const std::string& v) {
    if (v == "A" || v == "tdl_a") return PdpMix::only(PdpProfile::TdlA);
    if (v == "B" || v == "tdl_b") return PdpMix::only(PdpProfile::TdlB);
    if (v == "C" || v == "tdl_c") return PdpMix::only(PdpProfile::TdlC);
    std::stringstream ss(v);
    std::string item;
    PdpMix mix{{0, 0, 0}};
    std::size_t i = 0;
    while (std::getline(ss, item, ',')) {
        if (i == 3) throw ConfigError(key + ": expected three weights");
        mix.weight[i++] = parse_double(key, trim(item));
    }
    if (i != 3) throw ConfigError(key + ": expected three weights (TDL-A, TDL-B, TDL-C)");
    return mix;
}

inline void reject_unknown(const ptree& section, const std::string& name, const std::set<std::string>& known) {
    for (const auto& [k, v] : section)
        if (!known.count(k)) throw ConfigError(name + "." + k + ": unknown key");
}

}  // namespace detail

// Reads a scenario from INI text. [system] holds band-wide settings, one
// [user.N] section per user (N = 0, 1, ...); anything omitted keeps the
// ScenarioConfig default. The result is validated by build_scenario.
inline ScenarioConfig parse_scenario_ini(std::istream& in) {
    using detail::ptree;
    ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("scenario syntax error: ") + e.what());
    }

    ScenarioConfig c;
    std::map<std::size_t, UserConfig> users;
    for (const auto& [section, body] : pt) {
        if (body.empty() && !body.data().empty()) throw ConfigError(section + ": key outside any section");
        auto get = [&b = body](const std::string& key) -> std::optional<std::string> {
            if (auto v = b.get_optional<std::string>(key)) return detail::trim(*v);
            return std::nullopt;
        };
        if (section == "system") {
            detail::reject_unknown(body, section,
                                   {"bandwidth_hz", "cp_rate", "guard_band_hz", "carrier_hz", "dl_dmrs", "ul_dmrs",
                                    "ul_timing_offset", "seed", "neighbor_set_size", "genie_channel", "alg1_capped",
                                    "alg1_rx_aware", "alg1_objective"});
            const std::string s = "system.";
            if (auto v = get("bandwidth_hz")) c.bandwidth_hz = detail::parse_double(s + "bandwidth_hz", *v);
            if (auto v = get("cp_rate")) c.cp_rate = detail::parse_cp_rate(s + "cp_rate", *v);
            if (auto v = get("guard_band_hz")) c.guard_band_hz = detail::parse_double(s + "guard_band_hz", *v);
            if (auto v = get("carrier_hz")) c.carrier_hz = detail::parse_double(s + "carrier_hz", *v);
            if (auto v = get("dl_dmrs")) c.dl_dmrs = detail::parse_dmrs(s + "dl_dmrs", *v);
            if (auto v = get("ul_dmrs")) c.ul_dmrs = detail::parse_dmrs(s + "ul_dmrs", *v);
            if (auto v = get("ul_timing_offset")) c.ul_timing_offset = detail::parse_uint(s + "ul_timing_offset", *v);
            if (auto v = get("seed")) c.seed = detail::parse_uint(s + "seed", *v);
            if (auto v = get("neighbor_set_size")) c.neighbor_set_size = detail::parse_uint(s + "neighbor_set_size", *v);
            if (auto v = get("genie_channel")) c.genie_channel = detail::parse_bool(s + "genie_channel", *v);
            if (auto v = get("alg1_capped")) c.alg1_capped = detail::parse_bool(s + "alg1_capped", *v);
            if (auto v = get("alg1_rx_aware")) c.alg1_rx_aware = detail::parse_bool(s + "alg1_rx_aware", *v);
            if (auto v = get("alg1_objective")) {
                if (*v == "slot") {
                    c.alg1_objective = ProbeObjective::SlotProduct;
                } else if (*v == "column") {
                    c.alg1_objective = ProbeObjective::ColumnProduct;
                } else {
                    throw ConfigError("system.alg1_objective: expected slot or column, got '" + *v + "'");
                }
            }
        } else if (section.rfind("user.", 0) == 0) {
            const auto idx = detail::parse_uint(section, section.substr(5));
            detail::reject_unknown(body, section,
                                   {"name", "fft_size", "subcarrier_spacing_hz", "num_symbols", "num_subcarriers",
                                    "first_subcarrier", "cp_rate", "snr_db", "mobility_kmh", "rms_delay_spread_ns", "pdp",
                                    "mcs_bits"});
            const std::string s = section + ".";
            UserConfig u;
            if (auto v = get("name")) u.name = *v;
            if (auto v = get("fft_size")) u.fft_size = detail::parse_uint(s + "fft_size", *v);
            if (auto v = get("subcarrier_spacing_hz"))
                u.subcarrier_spacing_hz = detail::parse_double(s + "subcarrier_spacing_hz", *v);
            if (auto v = get("num_symbols")) u.num_symbols = detail::parse_uint(s + "num_symbols", *v);
            if (auto v = get("num_subcarriers")) u.num_subcarriers = detail::parse_uint(s + "num_subcarriers", *v);
            if (auto v = get("first_subcarrier")) u.first_subcarrier = detail::parse_int(s + "first_subcarrier", *v);
            if (auto v = get("cp_rate")) u.cp_rate = detail::parse_cp_rate(s + "cp_rate", *v);
            if (auto v = get("snr_db")) u.snr_db = detail::parse_double(s + "snr_db", *v);
            if (auto v = get("mobility_kmh")) u.mobility_kmh = detail::parse_double(s + "mobility_kmh", *v);
            if (auto v = get("rms_delay_spread_ns"))
                u.rms_delay_spread_ns = detail::parse_double(s + "rms_delay_spread_ns", *v);
            if (auto v = get("pdp")) u.pdp = detail::parse_pdp(s + "pdp", *v);
            if (auto v = get("mcs_bits")) u.mcs_bits = detail::parse_double(s + "mcs_bits", *v);
            users[idx] = std::move(u);
        } else {
            throw ConfigError("unknown section [" + section + "]");
        }
    }
    std::size_t expect = 0;
    for (auto& [idx, u] : users) {
        if (idx != expect++) throw ConfigError("user sections must be numbered 0, 1, ... without gaps");
        c.users.push_back(std::move(u));
    }
    if (c.users.empty()) throw ConfigError("scenario defines no [user.N] sections");
    return c;
}

inline ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read scenario " + path.string());
    return parse_scenario_ini(f);
}

}  // namespace adwin
