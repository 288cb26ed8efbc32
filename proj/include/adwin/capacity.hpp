#pragma once

#include <map>
#include <optional>

#include "adwin/grid.hpp"

namespace adwin {

// Bits per RE with unit noise floor: log2(1 + |H|^2 / (1 + |residual|^2)).
inline double re_capacity(double channel_power, cplx residual) {
    return std::log2(1.0 + channel_power / (1.0 + std::norm(residual)));
}

inline double re_capacity(cplx h, cplx y, cplx d) { return re_capacity(std::norm(h), y - h * d); }

inline double capped_capacity(double eta, std::optional<double> cap) {
    if (cap && *cap < 0) throw std::invalid_argument("capacity cap must be non-negative");
    return cap ? std::min(*cap, eta) : eta;
}

// Geometric mean of the per-user means; a zero mean collapses it to zero.
inline double network_fair_capacity(std::span<const double> user_means) {
    if (user_means.empty()) throw std::invalid_argument("network capacity needs at least one user");
    double log_sum = 0;
    for (double v : user_means) {
        if (v < 0) throw std::invalid_argument("negative mean capacity");
        if (v == 0) return 0.0;
        log_sum += std::log(v);
    }
    return std::exp(log_sum / static_cast<double>(user_means.size()));
}

// Arithmetic mean over the REs where `data` is set.
inline double mean_over(const RGrid& values, const Mask& data) {
    if (!values.same_shape(data)) throw std::invalid_argument("mean_over: shape mismatch");
    double acc = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (data.raw()[i]) {
            acc += values.raw()[i];
            ++n;
        }
    return n ? acc / static_cast<double>(n) : 0.0;
}

inline Mask data_mask(const ResourceGrid& g) {
    Mask d(g.num_subcarriers(), g.num_symbols(), 0);
    for (std::size_t i = 0; i < d.size(); ++i) d.raw()[i] = g.pilot_mask.raw()[i] ? 0 : 1;
    return d;
}

enum class CapacityMode { Uncapped, Capped };

struct UserCapacity {
    CGrid residual;                 // Y~ - H~ (D + P), cached for differential updates
    std::vector<double> channel_power;  // |H~[m]|^2, time-invariant prediction
    RGrid uncapped;                 // eta-breve
    Mask data;                      // REs that count towards the mean
    std::optional<double> cap;      // b_u
    std::vector<double> column_sum; // per symbol, over data REs, in the active mode
    double slot_sum = 0;
    std::size_t data_count = 0;

    double value(std::size_t m, std::size_t l, CapacityMode mode) const {
        return mode == CapacityMode::Capped ? capped_capacity(uncapped(m, l), cap) : uncapped(m, l);
    }
    double mean() const { return data_count ? slot_sum / static_cast<double>(data_count) : 0.0; }
};

struct CapacityState {
    std::vector<UserCapacity> users;
    CapacityMode mode = CapacityMode::Uncapped;

    std::vector<double> user_means() const {
        std::vector<double> m;
        for (const auto& u : users) m.push_back(u.mean());
        return m;
    }
    double network() const { return network_fair_capacity(user_means()); }
};

// Builds the estimated capacity state from predicted symbols and CFRs.
inline CapacityState make_capacity_state(std::span<const CGrid> predicted, std::span<const std::vector<cplx>> cfr,
                                         std::span<const ResourceGrid> grids,
                                         std::span<const std::optional<double>> caps, CapacityMode mode) {
    const std::size_t U = predicted.size();
    if (cfr.size() != U || grids.size() != U || caps.size() != U)
        throw std::invalid_argument("capacity state: one entry per user required");
    CapacityState st;
    st.mode = mode;
    for (std::size_t u = 0; u < U; ++u) {
        const auto& g = grids[u];
        const std::size_t M = g.num_subcarriers(), L = g.num_symbols();
        if (!predicted[u].same_shape(M, L) || cfr[u].size() != M)
            throw std::invalid_argument("capacity state: shape mismatch");
        UserCapacity uc;
        uc.residual = CGrid(M, L);
        uc.uncapped = RGrid(M, L);
        uc.data = data_mask(g);
        uc.cap = caps[u];
        uc.column_sum.assign(L, 0.0);
        for (std::size_t m = 0; m < M; ++m) uc.channel_power.push_back(std::norm(cfr[u][m]));
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t m = 0; m < M; ++m) {
                uc.residual(m, l) = predicted[u](m, l) - cfr[u][m] * g.symbol(m, l);
                uc.uncapped(m, l) = re_capacity(uc.channel_power[m], uc.residual(m, l));
                if (uc.data(m, l)) {
                    uc.column_sum[l] += uc.value(m, l, mode);
                    ++uc.data_count;
                }
            }
        for (double s : uc.column_sum) uc.slot_sum += s;
        st.users.push_back(std::move(uc));
    }
    return st;
}

enum class ProductScope {
    Columns,  // sums over the affected symbol columns only
    Slot      // whole-slot sums with the affected columns replaced
};

// A candidate change Y-dot of one received symbol.
struct ReUpdate {
    std::size_t user;
    std::size_t m;
    std::size_t l;
    cplx delta;
};

struct CapacityDelta {
    double eta_delta = 0;        // new objective - old objective
    double new_objective = 0;
    double old_objective = 0;
    std::vector<double> new_uncapped;  // eta-breve after the update, parallel to the updates
};

// Differential evaluation of a set of received-symbol updates. Only data REs
// contribute; every data RE of an affected column must be present in the
// updates (windowing a symbol perturbs every subcarrier it overlaps). Users
// without affected data REs drop out of the column product. When `baseline`
// is given it replaces the old objective (cached from the previous probe).
// Tallies: per RE 3 adds + 3 mults, per factor (count - 1) adds, (factors - 1)
// mults for the product, plus one add for the difference; the slot scope adds
// one add per factor.
inline CapacityDelta capacity_delta(const CapacityState& st, std::span<const ReUpdate> updates, ProductScope scope,
                                    std::optional<double> baseline = std::nullopt, OpCounter* ops = nullptr) {
    const std::size_t U = st.users.size();
    CapacityDelta out;
    out.new_uncapped.resize(updates.size());
    std::vector<double> new_sum(U, 0.0);
    std::vector<std::size_t> count(U, 0);
    std::vector<std::map<std::size_t, std::size_t>> cols(U);  // column -> data REs seen

    for (std::size_t i = 0; i < updates.size(); ++i) {
        const auto& up = updates[i];
        if (up.user >= U) throw std::out_of_range("update user index out of range");
        const auto& uc = st.users[up.user];
        if (up.m >= uc.residual.rows() || up.l >= uc.residual.cols()) throw std::out_of_range("update RE out of range");
        const cplx r = uc.residual(up.m, up.l) + up.delta;
        const double eta = re_capacity(uc.channel_power[up.m], r);
        out.new_uncapped[i] = eta;
        if (!uc.data(up.m, up.l)) continue;
        if (ops) {
            ops->adds += 3;
            ops->mults += 3;
        }
        new_sum[up.user] += st.mode == CapacityMode::Capped ? capped_capacity(eta, uc.cap) : eta;
        ++count[up.user];
        ++cols[up.user][up.l];
    }

    double new_obj = 1.0, old_obj = 1.0;
    std::size_t factors = 0;
    for (std::size_t u = 0; u < U; ++u) {
        const auto& uc = st.users[u];
        double old_part = 0;
        for (auto [l, n] : cols[u]) {
            std::size_t expected = 0;
            for (std::size_t m = 0; m < uc.data.rows(); ++m) expected += uc.data(m, l);
            if (n != expected) throw std::invalid_argument("updates must cover every data RE of an affected column");
            old_part += uc.column_sum[l];
        }
        if (count[u] > 0 && ops) ops->adds += count[u] - 1;
        double nf, of;
        if (scope == ProductScope::Columns) {
            if (count[u] == 0) continue;
            nf = new_sum[u];
            of = old_part;
        } else {
            nf = (uc.slot_sum - old_part) + new_sum[u];
            of = uc.slot_sum;
            if (count[u] > 0 && ops) ops->adds += 1;
        }
        new_obj *= nf;
        old_obj *= of;
        ++factors;
    }
    if (ops) {
        if (factors > 0) ops->mults += factors - 1;
        ops->adds += 1;
    }
    out.new_objective = factors ? new_obj : 0.0;
    out.old_objective = baseline.value_or(factors ? old_obj : 0.0);
    out.eta_delta = out.new_objective - out.old_objective;
    return out;
}

// Applies updates (with their evaluated capacities) to the state.
inline void commit_updates(CapacityState& st, std::span<const ReUpdate> updates, std::span<const double> new_uncapped) {
    if (updates.size() != new_uncapped.size()) throw std::invalid_argument("commit: size mismatch");
    std::vector<std::map<std::size_t, bool>> touched(st.users.size());
    for (std::size_t i = 0; i < updates.size(); ++i) {
        const auto& up = updates[i];
        auto& uc = st.users[up.user];
        uc.residual(up.m, up.l) += up.delta;
        uc.uncapped(up.m, up.l) = new_uncapped[i];
        touched[up.user][up.l] = true;
    }
    // Affected columns are re-summed rather than patched, so rounding drift
    // never accumulates across commits.
    for (std::size_t u = 0; u < st.users.size(); ++u) {
        auto& uc = st.users[u];
        for (auto [l, unused] : touched[u]) {
            double s = 0;
            for (std::size_t m = 0; m < uc.data.rows(); ++m)
                if (uc.data(m, l)) s += uc.value(m, l, st.mode);
            uc.column_sum[l] = s;
        }
        if (touched[u].empty()) continue;
        uc.slot_sum = 0;
        for (double c : uc.column_sum) uc.slot_sum += c;
    }
}

}  // namespace adwin
