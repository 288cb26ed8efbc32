#pragma once

#include <array>
#include <numeric>
#include <optional>

#include "adwin/common.hpp"
#include "adwin/rng.hpp"

namespace adwin {

struct Numerology {
    std::size_t fft_size = 0;             // N_u
    std::size_t cp_len = 0;               // K_u
    double subcarrier_spacing_hz = 0.0;   // delta f_u
    std::size_t num_symbols = 0;          // L_u

    std::size_t symbol_len() const { return fft_size + cp_len; }
    std::size_t slot_len() const { return symbol_len() * num_symbols; }
};

enum class PdpProfile { TdlA = 0, TdlB = 1, TdlC = 2 };

inline const char* to_string(PdpProfile p) {
    switch (p) {
        case PdpProfile::TdlA: return "TDL-A";
        case PdpProfile::TdlB: return "TDL-B";
        case PdpProfile::TdlC: return "TDL-C";
    }
    return "?";
}

// Per-realization profile probabilities, indexed by PdpProfile.
struct PdpMix {
    std::array<double, 3> weight{1.0, 0.0, 0.0};

    static PdpMix only(PdpProfile p) {
        PdpMix m{{0.0, 0.0, 0.0}};
        m.weight[static_cast<int>(p)] = 1.0;
        return m;
    }

    PdpProfile draw(Rng& rng) const {
        const double total = weight[0] + weight[1] + weight[2];
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        for (int i = 0; i < 2; ++i) {
            if (u < weight[i]) return static_cast<PdpProfile>(i);
            u -= weight[i];
        }
        return PdpProfile::TdlC;
    }
};

struct UserAllocation {
    std::string name;
    Numerology numerology;
    long long first_subcarrier = 0;  // M_{u,1}, signed (DC at 0, centered mapping)
    std::size_t num_subcarriers = 0; // M_u
    double snr_db = 10.0;            // gamma_u
    double mobility_kmh = 0.0;
    double rms_delay_spread_ns = 0.0;
    PdpMix pdp;
    std::optional<double> mcs_bits;  // b_u, uniform over the user's REs

    long long subcarrier_index(std::size_t m) const { return first_subcarrier + static_cast<long long>(m); }
    long long last_subcarrier() const { return subcarrier_index(num_subcarriers - 1); }
    double subcarrier_freq_hz(std::size_t m) const {
        return static_cast<double>(subcarrier_index(m)) * numerology.subcarrier_spacing_hz;
    }
    double snr_linear() const { return db_to_linear(snr_db); }
};

struct DmrsPattern {
    enum class Kind { DlTypeAPos2Add3, UlPuschTypeB, EveryNth };
    Kind kind = Kind::DlTypeAPos2Add3;
    std::size_t every = 1;  // EveryNth only

    static DmrsPattern dl_type_a() { return {Kind::DlTypeAPos2Add3, 1}; }
    static DmrsPattern ul_type_b() { return {Kind::UlPuschTypeB, 1}; }
    static DmrsPattern every_nth(std::size_t k) { return {Kind::EveryNth, k}; }
};

struct CpRate {
    std::size_t num = 9;
    std::size_t den = 128;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct UserConfig {
    std::string name;
    std::size_t fft_size = 0;
    double subcarrier_spacing_hz = 0.0;
    std::size_t num_symbols = 0;
    std::size_t num_subcarriers = 0;
    std::optional<long long> first_subcarrier;  // auto-placed when absent
    std::optional<CpRate> cp_rate;              // overrides the system rate
    double snr_db = 10.0;
    double mobility_kmh = 0.0;
    double rms_delay_spread_ns = 0.0;
    PdpMix pdp;
    std::optional<double> mcs_bits;
};

enum class ProbeObjective {
    ColumnProduct,  // product of affected-column sums
    SlotProduct     // product of whole-slot sums (sign-exact for the geometric mean)
};

struct ScenarioConfig {
    double bandwidth_hz = 7.68e6;
    CpRate cp_rate{};
    double guard_band_hz = 240e3;
    double carrier_hz = 4e9;
    DmrsPattern dl_dmrs = DmrsPattern::dl_type_a();
    DmrsPattern ul_dmrs = DmrsPattern::ul_type_b();
    std::size_t ul_timing_offset = 64;
    std::uint64_t seed = 1;
    std::size_t neighbor_set_size = 33;
    bool genie_channel = false;
    bool alg1_capped = false;
    bool alg1_rx_aware = false;
    ProbeObjective alg1_objective = ProbeObjective::SlotProduct;
    std::vector<UserConfig> users;

    // Two users sharing 7.68 MHz: fast (60 x 60 kHz, 120 km/h, 30 ns) and
    // slow (120 x 30 kHz, 30 km/h, 100 ns), 240 kHz guard, CP rate 9/128,
    // one 14-symbol slot in the slow user's numerology.
    static ScenarioConfig paper_default() {
        ScenarioConfig c;
        UserConfig fast;
        fast.name = "fast";
        fast.fft_size = 128;
        fast.subcarrier_spacing_hz = 60e3;
        fast.num_symbols = 28;
        fast.num_subcarriers = 60;
        fast.snr_db = 10.0;
        fast.mobility_kmh = 120.0;
        fast.rms_delay_spread_ns = 30.0;
        fast.pdp = PdpMix{{1.0 / 2.0, 1.0 / 3.0, 1.0 / 6.0}};
        UserConfig slow;
        slow.name = "slow";
        slow.fft_size = 256;
        slow.subcarrier_spacing_hz = 30e3;
        slow.num_symbols = 14;
        slow.num_subcarriers = 120;
        slow.snr_db = 10.0;
        slow.mobility_kmh = 30.0;
        slow.rms_delay_spread_ns = 100.0;
        slow.pdp = PdpMix{{1.0 / 4.0, 1.0 / 2.0, 1.0 / 4.0}};
        c.users = {fast, slow};
        return c;
    }
};

struct Scenario {
    ScenarioConfig config;
    double bandwidth_hz = 0.0;
    std::vector<UserAllocation> users;

    double sample_rate_hz() const { return bandwidth_hz; }
    std::size_t slot_len() const { return users.empty() ? 0 : users.front().numerology.slot_len(); }
    std::size_t num_users() const { return users.size(); }
};

namespace detail {

inline void check_user(const UserConfig& u, std::size_t idx) {
    const std::string who = "user." + std::to_string(idx);
    if (u.fft_size == 0) throw ConfigError(who + ": fft_size must be positive");
    if (u.num_symbols == 0) throw ConfigError(who + ": num_symbols must be positive");
    if (u.num_subcarriers == 0 || u.num_subcarriers > u.fft_size)
        throw ConfigError(who + ": num_subcarriers must be in [1, fft_size]");
    if (u.pdp.weight[0] < 0 || u.pdp.weight[1] < 0 || u.pdp.weight[2] < 0 ||
        u.pdp.weight[0] + u.pdp.weight[1] + u.pdp.weight[2] <= 0)
        throw ConfigError(who + ": invalid pdp mixture");
}

// Subcarrier spacings are integral in Hz for every numerology of interest.
inline long long spacing_hz(const UserConfig& u) { return std::llround(u.subcarrier_spacing_hz); }

// Places users low-to-high with `guard` Hz between the centres of the
// adjacent edge subcarriers, then recentres the whole arrangement around DC
// by a shift that keeps every user on its own grid.
inline std::vector<long long> auto_place(const std::vector<UserConfig>& users, double guard_hz) {
    std::vector<long long> first(users.size());
    const long long guard = std::llround(guard_hz);
    long long quantum = 1;
    for (const auto& u : users) quantum = std::lcm(quantum, spacing_hz(u));

    long long cursor = 0;  // Hz, centre of next user's first subcarrier
    for (std::size_t i = 0; i < users.size(); ++i) {
        const long long df = spacing_hz(users[i]);
        if (cursor % df != 0)
            throw ConfigError("user." + std::to_string(i) + ": guard band does not land on the subcarrier grid");
        first[i] = cursor / df;
        cursor += (static_cast<long long>(users[i].num_subcarriers) - 1) * df + guard;
    }
    const auto& last = users.back();
    const long long lo = first.front() * spacing_hz(users.front());
    const long long hi = (first.back() + static_cast<long long>(last.num_subcarriers) - 1) * spacing_hz(last);
    const double centre = 0.5 * static_cast<double>(lo + hi);
    const long long shift = -std::llround(centre / static_cast<double>(quantum)) * quantum;
    for (std::size_t i = 0; i < users.size(); ++i) first[i] += shift / spacing_hz(users[i]);
    return first;
}

}  // namespace detail

// Validates a configuration and resolves per-user numerologies and allocations.
inline Scenario build_scenario(const ScenarioConfig& config) {
    if (config.users.empty()) throw ConfigError("scenario needs at least one user");
    if (!(config.bandwidth_hz > 0)) throw ConfigError("bandwidth_hz must be positive");
    if (config.cp_rate.den == 0) throw ConfigError("cp_rate denominator is zero");
    if (config.guard_band_hz < 0) throw ConfigError("guard_band_hz must be non-negative");
    if (config.neighbor_set_size == 0) throw ConfigError("neighbor_set_size must be positive");

    for (std::size_t i = 0; i < config.users.size(); ++i) detail::check_user(config.users[i], i);

    Scenario sc;
    sc.config = config;
    sc.bandwidth_hz = config.bandwidth_hz;

    // Common CP rate: K_u / N_u identical for all users, K_u integral.
    const CpRate base = config.users.front().cp_rate.value_or(config.cp_rate);
    for (std::size_t i = 0; i < config.users.size(); ++i) {
        const auto& u = config.users[i];
        const CpRate r = u.cp_rate.value_or(config.cp_rate);
        if (r.den == 0) throw ConfigError("user." + std::to_string(i) + ": cp_rate denominator is zero");
        if (r.num * base.den != base.num * r.den)
            throw ConfigError("user." + std::to_string(i) + ": CP rate differs from other users");
        if ((u.fft_size * r.num) % r.den != 0)
            throw ConfigError("user." + std::to_string(i) + ": CP length is not an integer number of samples");
        const double span = static_cast<double>(u.fft_size) * u.subcarrier_spacing_hz;
        if (std::abs(span - config.bandwidth_hz) > 1e-6 * config.bandwidth_hz)
            throw ConfigError("user." + std::to_string(i) + ": fft_size * subcarrier_spacing != bandwidth");
    }

    const bool any_explicit = std::any_of(config.users.begin(), config.users.end(),
                                          [](const UserConfig& u) { return u.first_subcarrier.has_value(); });
    const bool all_explicit = std::all_of(config.users.begin(), config.users.end(),
                                          [](const UserConfig& u) { return u.first_subcarrier.has_value(); });
    if (any_explicit && !all_explicit)
        throw ConfigError("first_subcarrier must be given for all users or none");
    std::vector<long long> first;
    if (all_explicit) {
        for (const auto& u : config.users) first.push_back(*u.first_subcarrier);
    } else {
        first = detail::auto_place(config.users, config.guard_band_hz);
    }

    for (std::size_t i = 0; i < config.users.size(); ++i) {
        const auto& u = config.users[i];
        const CpRate r = u.cp_rate.value_or(config.cp_rate);
        UserAllocation a;
        a.name = u.name.empty() ? "user" + std::to_string(i) : u.name;
        a.numerology = {u.fft_size, u.fft_size * r.num / r.den, u.subcarrier_spacing_hz, u.num_symbols};
        a.first_subcarrier = first[i];
        a.num_subcarriers = u.num_subcarriers;
        a.snr_db = u.snr_db;
        a.mobility_kmh = u.mobility_kmh;
        a.rms_delay_spread_ns = u.rms_delay_spread_ns;
        a.pdp = u.pdp;
        a.mcs_bits = u.mcs_bits;
        const long long half = static_cast<long long>(u.fft_size / 2);
        if (a.first_subcarrier < -half || a.last_subcarrier() >= half)
            throw ConfigError("user." + std::to_string(i) + ": allocation outside the system band");
        sc.users.push_back(std::move(a));
    }

    const std::size_t slot = sc.users.front().numerology.slot_len();
    for (std::size_t i = 1; i < sc.users.size(); ++i)
        if (sc.users[i].numerology.slot_len() != slot)
            throw ConfigError("user." + std::to_string(i) + ": slot duration (N+K)*L differs from user.0");

    // Spectral disjointness with guard band (centre-to-centre of edge subcarriers).
    for (std::size_t i = 0; i < sc.users.size(); ++i) {
        for (std::size_t j = i + 1; j < sc.users.size(); ++j) {
            const auto& a = sc.users[i];
            const auto& b = sc.users[j];
            const double a_lo = a.subcarrier_freq_hz(0), a_hi = a.subcarrier_freq_hz(a.num_subcarriers - 1);
            const double b_lo = b.subcarrier_freq_hz(0), b_hi = b.subcarrier_freq_hz(b.num_subcarriers - 1);
            const double a_edge_lo = a_lo - a.numerology.subcarrier_spacing_hz / 2;
            const double a_edge_hi = a_hi + a.numerology.subcarrier_spacing_hz / 2;
            const double b_edge_lo = b_lo - b.numerology.subcarrier_spacing_hz / 2;
            const double b_edge_hi = b_hi + b.numerology.subcarrier_spacing_hz / 2;
            const bool overlap = a_edge_lo < b_edge_hi - 1e-6 && b_edge_lo < a_edge_hi - 1e-6;
            const double gap = (a_hi < b_lo) ? b_lo - a_hi : a_lo - b_hi;
            if (overlap || gap < config.guard_band_hz - 1e-6)
                throw ConfigError("users " + std::to_string(i) + " and " + std::to_string(j) +
                                  " overlap or violate the guard band");
        }
    }
    return sc;
}

struct PilotPlacement {
    CGrid pilots;  // P_u
    Mask mask;     // 1 where a pilot sits
};

struct ResourceGrid {
    CGrid data;    // D_u
    CGrid pilots;  // P_u
    Mask pilot_mask;

    std::size_t num_subcarriers() const { return data.rows(); }
    std::size_t num_symbols() const { return data.cols(); }
    cplx symbol(std::size_t m, std::size_t l) const { return data(m, l) + pilots(m, l); }
    bool is_pilot(std::size_t m, std::size_t l) const { return pilot_mask(m, l) != 0; }
};

namespace detail {

// DMRS symbol positions inside one slot of `ld` symbols, single-symbol DMRS.
inline std::vector<std::size_t> dl_type_a_add3(std::size_t ld) {
    if (ld < 3) return {};
    if (ld <= 7) return {2};
    if (ld <= 9) return {2, 7};
    if (ld <= 11) return {2, 6, 9};
    return {2, 5, 8, 11};
}

inline std::vector<std::size_t> ul_type_b_add3(std::size_t ld) {
    if (ld <= 4) return {0};
    if (ld <= 7) return {0, 4};
    if (ld <= 9) return {0, 3, 6};
    return {0, 3, 6, 9};
}

}  // namespace detail

// OFDM symbol indices (0-based) carrying DMRS for a user with `num_symbols`.
// The NR patterns repeat every 14 symbols of the user's own numerology.
inline std::vector<std::size_t> dmrs_symbols(const DmrsPattern& pattern, std::size_t num_symbols) {
    std::vector<std::size_t> out;
    switch (pattern.kind) {
        case DmrsPattern::Kind::EveryNth:
            if (pattern.every == 0) throw std::invalid_argument("EveryNth pattern needs k >= 1");
            for (std::size_t l = 0; l < num_symbols; l += pattern.every) out.push_back(l);
            return out;
        case DmrsPattern::Kind::DlTypeAPos2Add3:
            if (num_symbols < 3)
                throw std::invalid_argument("DL type A pos2 DMRS needs at least 3 symbols");
            break;
        case DmrsPattern::Kind::UlPuschTypeB:
            break;
    }
    for (std::size_t start = 0; start < num_symbols; start += 14) {
        const std::size_t ld = std::min<std::size_t>(14, num_symbols - start);
        const auto pos = pattern.kind == DmrsPattern::Kind::DlTypeAPos2Add3 ? detail::dl_type_a_add3(ld)
                                                                            : detail::ul_type_b_add3(ld);
        for (auto p : pos) out.push_back(start + p);
    }
    return out;
}

// Unit-magnitude seeded QPSK pilots on every allocated subcarrier of the
// pattern's DMRS symbols.
inline PilotPlacement place_dmrs(const UserAllocation& alloc, const DmrsPattern& pattern, Rng& rng) {
    const std::size_t M = alloc.num_subcarriers;
    const std::size_t L = alloc.numerology.num_symbols;
    PilotPlacement out{CGrid(M, L), Mask(M, L, 0)};
    for (auto l : dmrs_symbols(pattern, L)) {
        for (std::size_t m = 0; m < M; ++m) {
            out.pilots(m, l) = qpsk_symbol(rng);
            out.mask(m, l) = 1;
        }
    }
    return out;
}

// i.i.d. unit-energy QPSK on every RE not covered by a pilot.
inline CGrid draw_data_symbols(const UserAllocation& alloc, const Mask& pilot_mask, std::uint64_t seed) {
    const std::size_t M = alloc.num_subcarriers;
    const std::size_t L = alloc.numerology.num_symbols;
    if (!pilot_mask.same_shape(M, L)) throw std::invalid_argument("pilot mask shape mismatch");
    Rng rng(seed);
    CGrid d(M, L);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t m = 0; m < M; ++m)
            if (!pilot_mask(m, l)) d(m, l) = qpsk_symbol(rng);
    return d;
}

inline ResourceGrid make_resource_grid(const UserAllocation& alloc, const DmrsPattern& pattern, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {1}));
    auto placed = place_dmrs(alloc, pattern, rng);
    ResourceGrid g;
    g.data = draw_data_symbols(alloc, placed.mask, derive_seed(seed, {2}));
    g.pilots = std::move(placed.pilots);
    g.pilot_mask = std::move(placed.mask);
    return g;
}

inline std::size_t count_data_res(const ResourceGrid& g) {
    std::size_t n = 0;
    for (auto v : g.pilot_mask.raw()) n += v ? 0 : 1;
    return n;
}

}  // namespace adwin
