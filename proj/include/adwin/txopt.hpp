#pragma once

#include <optional>

#include "adwin/capacity.hpp"
#include "adwin/rx.hpp"
#include "adwin/synth.hpp"
#include "adwin/ul_estimation.hpp"

namespace adwin {

// y[t] = sum_tau h[tau] x[t - tau], first `len` samples.
inline std::vector<cplx> convolve_cir(std::span<const cplx> x, std::span<const cplx> h, std::size_t len) {
    std::vector<cplx> y(len);
    for (std::size_t t = 0; t < len; ++t) {
        cplx acc{};
        const std::size_t hi = std::min(h.size(), t + 1);
        for (std::size_t tau = 0; tau < hi; ++tau)
            if (t - tau < x.size()) acc += h[tau] * x[t - tau];
        y[t] = acc;
    }
    return y;
}

struct Prediction {
    std::vector<CGrid> symbols;           // Y~_u
    std::vector<std::vector<cplx>> cfr;   // H~_u per subcarrier
};

// Noiseless emulated reception of `x` at every user: convolution with the
// predicted CIR, then the regular receiver (rectangular window unless
// per-user rx plans are supplied).
inline Prediction predict_rx(std::span<const cplx> x, const Scenario& sc, std::span<const CirPrediction> h,
                             const std::vector<IGrid>* rx_plans = nullptr, const TaperTable* taper = nullptr) {
    if (h.size() != sc.num_users()) throw std::invalid_argument("predict_rx: one CIR prediction per user required");
    if (rx_plans && (rx_plans->size() != sc.num_users() || !taper))
        throw std::invalid_argument("predict_rx: rx plans need one entry per user and a taper");
    Prediction p;
    for (std::size_t u = 0; u < sc.num_users(); ++u) {
        const auto& a = sc.users[u];
        if (h[u].empty()) throw std::invalid_argument("predict_rx: missing CIR prediction for " + a.name);
        const auto y = convolve_cir(x, h[u], a.numerology.slot_len());
        const auto blocks = extract_symbols(y, a.numerology, 0);
        auto base = receive_base_grid(blocks, a);
        if (rx_plans) base = apply_rx_windowing(blocks, a, base, (*rx_plans)[u], *taper).windowed;
        p.symbols.push_back(std::move(base));
        p.cfr.push_back(cir_to_cfr(h[u], a));
    }
    return p;
}

// Ordering key: the excess capacity of each RE over its cap (the capacity
// itself when uncapped).
inline RGrid excess_metric(const RGrid& uncapped, std::optional<double> cap) {
    RGrid lambda = uncapped;
    if (cap)
        for (auto& v : lambda.raw()) v -= *cap;
    return lambda;
}

struct ReIndex {
    std::size_t user;
    std::size_t m;
    std::size_t l;
    friend bool operator==(const ReIndex&, const ReIndex&) = default;
};

// Data REs of all users in descending lambda; ties by (user, subcarrier, symbol).
inline std::vector<ReIndex> processing_order(std::span<const RGrid> lambda, std::span<const Mask> data) {
    struct Keyed {
        double key;
        ReIndex re;
    };
    std::vector<Keyed> all;
    for (std::size_t u = 0; u < lambda.size(); ++u)
        for (std::size_t m = 0; m < lambda[u].rows(); ++m)
            for (std::size_t l = 0; l < lambda[u].cols(); ++l)
                if (data[u](m, l)) all.push_back({lambda[u](m, l), {u, m, l}});
    std::sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
        if (a.key != b.key) return a.key > b.key;
        if (a.re.user != b.re.user) return a.re.user < b.re.user;
        if (a.re.m != b.re.m) return a.re.m < b.re.m;
        return a.re.l < b.re.l;
    });
    std::vector<ReIndex> out;
    out.reserve(all.size());
    for (const auto& k : all) out.push_back(k.re);
    return out;
}

struct Alg1Options {
    bool capped = false;
    ProbeObjective objective = ProbeObjective::SlotProduct;
    // Keep extending through durations that change nothing (eta_delta exactly
    // zero); short windows often only touch samples every receiver discards.
    bool continue_on_tie = true;
    // Changes within this fraction of the objective are rounding (the slot
    // sums are updated differentially) and count as ties.
    double tie_tolerance = 1e-12;
};

struct ProbeResult {
    std::size_t T = 0;
    double eta_delta = 0;
    double new_objective = 0;
    std::vector<cplx> xdot;          // tx sample deltas, k < T
    std::vector<ReUpdate> updates;   // received-symbol deltas of affected data REs
    std::vector<double> new_uncapped;
};

struct Alg1Result {
    TxWindowPlan plan;
    SampleStream x;
    OpCounter probe_ops;
    OpCounter commit_ops;
    std::size_t probes = 0;
    std::size_t commits = 0;
    double estimated_before = 0;  // fair capacity of the predicted, non-windowed stream
    double estimated_after = 0;
};

// Greedy per-RE transmit window estimation with differential updates of the
// predicted received symbols and capacities.
class TxOptimizer {
public:
    TxOptimizer(const Scenario& sc, std::span<const ResourceGrid> grids, std::span<const CirPrediction> h,
                const TaperTable& taper, Alg1Options opt = {}, const std::vector<IGrid>* rx_plans = nullptr)
        : sc_(&sc), grids_(grids.begin(), grids.end()), h_(h.begin(), h.end()), taper_(&taper), opt_(opt) {
        if (grids_.size() != sc.num_users() || h_.size() != sc.num_users())
            throw std::invalid_argument("optimizer: one grid and prediction per user required");
        for (std::size_t u = 0; u < sc.num_users(); ++u) {
            check_grid(sc.users[u], grids_[u]);
            if (h_[u].size() != sc.users[u].numerology.cp_len + 1)
                throw std::invalid_argument("optimizer: CIR prediction must have K_u + 1 taps");
            if (taper.max_len() < sc.users[u].numerology.cp_len) throw std::invalid_argument("optimizer: taper table too short");
        }
        if (rx_plans) {
            if (rx_plans->size() != sc.num_users()) throw std::invalid_argument("optimizer: one rx plan per user required");
            rx_plans_ = *rx_plans;
        } else {
            for (const auto& u : sc.users) rx_plans_.emplace_back(u.num_subcarriers, u.numerology.num_symbols, 0);
        }
        x_ = synthesize_cp_ofdm(sc, grids_);
        plan_ = zero_tx_plan(sc);
        const auto pred = predict_rx(x_.samples, sc, h_, rx_plans ? &rx_plans_ : nullptr, &taper);
        std::vector<std::optional<double>> caps;
        for (const auto& u : sc.users) caps.push_back(opt_.capped ? u.mcs_bits : std::nullopt);
        state_ = make_capacity_state(pred.symbols, pred.cfr, grids_, caps,
                                     opt_.capped ? CapacityMode::Capped : CapacityMode::Uncapped);
        for (const auto& u : sc.users) {
            const double N = static_cast<double>(u.numerology.fft_size);
            std::vector<cplx> tab(u.numerology.fft_size);
            for (std::size_t k = 0; k < tab.size(); ++k) tab[k] = phasor(two_pi * static_cast<double>(k) / N) / std::sqrt(N);
            phase_.push_back(std::move(tab));
        }
        for (std::size_t u = 0; u < sc.num_users(); ++u) {
            std::vector<int> rmax(sc.users[u].numerology.num_symbols, 0);
            for (std::size_t l = 0; l < rmax.size(); ++l)
                for (std::size_t m = 0; m < sc.users[u].num_subcarriers; ++m) rmax[l] = std::max(rmax[l], rx_plans_[u](m, l));
            rx_max_.push_back(std::move(rmax));
        }
    }

    const CapacityState& state() const { return state_; }
    const SampleStream& stream() const { return x_; }
    const TxWindowPlan& plan() const { return plan_; }
    double estimated_network() const { return state_.network(); }

    std::vector<ReIndex> order() const {
        std::vector<RGrid> lambda;
        std::vector<Mask> data;
        for (std::size_t u = 0; u < state_.users.size(); ++u) {
            const auto& uc = state_.users[u];
            lambda.push_back(excess_metric(uc.uncapped, opt_.capped ? uc.cap : std::nullopt));
            data.push_back(uc.data);
        }
        return processing_order(lambda, data);
    }

    // Effect of windowing RE `re` with duration T relative to the committed
    // state. The state is not modified.
    ProbeResult probe(const ReIndex& re, std::size_t T, std::optional<double> baseline = std::nullopt,
                      OpCounter* ops = nullptr) const {
        const auto& sc = *sc_;
        if (re.user >= sc.num_users()) throw std::out_of_range("probe: user index out of range");
        const auto& a = sc.users[re.user];
        if (T == 0) throw std::invalid_argument("probe: duration must be positive");
        if (T > a.numerology.cp_len) throw std::invalid_argument("probe: duration exceeds CP length");
        if (re.m >= a.num_subcarriers || re.l >= a.numerology.num_symbols) throw std::out_of_range("probe: RE out of range");

        ProbeResult pr;
        pr.T = T;
        pr.xdot.resize(T);
        tx_window_deltas(a, grids_[re.user], re.m, re.l, taper_->rise(T), pr.xdot, ops);
        const std::size_t g0 = re.l * a.numerology.symbol_len();
        const std::size_t slot = sc.slot_len();

        for (std::size_t u = 0; u < sc.num_users(); ++u) {
            const auto& v = sc.users[u];
            const std::size_t N = v.numerology.fft_size, K = v.numerology.cp_len, S = v.numerology.symbol_len();
            const auto& h = h_[u];
            // Leaked sample deltas, grouped per victim symbol.
            struct Sample {
                std::size_t s0;
                cplx y;
            };
            std::vector<std::pair<std::size_t, std::vector<Sample>>> cols;
            for (std::size_t j = 0; j + 1 < T + K + 1; ++j) {
                const std::size_t p = g0 + j;
                if (p >= slot) break;
                const std::size_t lv = p / S, s0 = p % S;
                if (static_cast<long long>(s0) < static_cast<long long>(K) - rx_max_[u][lv]) continue;
                const std::size_t lo = j + 1 > T ? j + 1 - T : 0;
                const std::size_t hi = std::min(K, j);
                cplx acc{};
                std::size_t n = 0;
                for (std::size_t tau = lo; tau <= hi; ++tau, ++n) acc += h[tau] * pr.xdot[j - tau];
                if (ops && n > 0) {
                    ops->complex_mul(n);
                    ops->complex_add(n - 1);
                }
                if (cols.empty() || cols.back().first != lv) cols.push_back({lv, {}});
                cols.back().second.push_back({s0, acc});
            }
            const auto& data = state_.users[u].data;
            for (const auto& [lv, samples] : cols) {
                for (std::size_t m = 0; m < v.num_subcarriers; ++m) {
                    if (!data(m, lv)) continue;
                    const int R = rx_plans_[u](m, lv);
                    const long long M = v.subcarrier_index(m);
                    cplx acc{};
                    std::size_t n = 0;
                    for (const auto& s : samples) {
                        const double w = rx_weight(s.s0, static_cast<std::size_t>(R), N, K);
                        if (w == 0.0) continue;
                        const cplx c = w * phase_[u][wrap_index(M * (static_cast<long long>(s.s0) - static_cast<long long>(K)), N)];
                        acc += c * s.y;
                        ++n;
                    }
                    if (ops && n > 0) {
                        ops->complex_mul(n);
                        ops->complex_add(n - 1);
                    }
                    pr.updates.push_back({u, m, lv, acc});
                }
            }
        }
        auto cd = capacity_delta(state_, pr.updates,
                                 opt_.objective == ProbeObjective::ColumnProduct ? ProductScope::Columns : ProductScope::Slot,
                                 baseline, ops);
        pr.eta_delta = cd.eta_delta;
        pr.new_objective = cd.new_objective;
        pr.new_uncapped = std::move(cd.new_uncapped);
        return pr;
    }

    void commit(const ReIndex& re, const ProbeResult& pr, OpCounter* ops = nullptr) {
        const auto& a = sc_->users[re.user];
        const std::size_t g0 = re.l * a.numerology.symbol_len();
        for (std::size_t k = 0; k < pr.xdot.size(); ++k) x_.samples[g0 + k] += pr.xdot[k];
        if (ops) ops->complex_add(pr.xdot.size());
        commit_updates(state_, pr.updates, pr.new_uncapped);
        plan_[re.user](re.m, re.l) = static_cast<int>(pr.T);
        x_.origin = SampleStream::Origin::TxWindowed;
    }

    // Probes T = 1, 2, ... while the objective keeps improving and commits the
    // last improving duration. Returns the committed duration.
    std::size_t optimize_re(const ReIndex& re, Alg1Result* stats = nullptr) {
        const std::size_t K = sc_->users[re.user].numerology.cp_len;
        std::optional<ProbeResult> best;
        std::optional<double> baseline;
        for (std::size_t T = 1; T <= K; ++T) {
            auto pr = probe(re, T, baseline, stats ? &stats->probe_ops : nullptr);
            if (stats) ++stats->probes;
            const double tol = opt_.tie_tolerance * std::abs(pr.new_objective - pr.eta_delta);
            if (pr.eta_delta > tol) {
                baseline = pr.new_objective;
                best = std::move(pr);
            } else if (!(opt_.continue_on_tie && pr.eta_delta >= -tol)) {
                break;
            }
        }
        if (!best) return 0;
        commit(re, *best, stats ? &stats->commit_ops : nullptr);
        if (stats) ++stats->commits;
        return best->T;
    }

    Alg1Result run() {
        Alg1Result res;
        res.estimated_before = estimated_network();
        for (const auto& re : order()) optimize_re(re, &res);
        res.estimated_after = estimated_network();
        res.plan = plan_;
        res.x = x_;
        return res;
    }

    // Receive weight of sample s0 (0 <= s0 < N+K) for rx window duration R.
    static double rx_weight(std::size_t s0, std::size_t R, std::size_t N, std::size_t K, const TaperTable& taper) {
        if (s0 + R < K) return 0.0;
        if (s0 < K) return taper.rise(R)[s0 + R - K];
        if (s0 + R < N + K) return 1.0;
        return 1.0 - taper.rise(R)[s0 + R - N - K];
    }

private:
    double rx_weight(std::size_t s0, std::size_t R, std::size_t N, std::size_t K) const {
        return rx_weight(s0, R, N, K, *taper_);
    }

    const Scenario* sc_;
    std::vector<ResourceGrid> grids_;
    std::vector<CirPrediction> h_;
    const TaperTable* taper_;
    Alg1Options opt_;
    std::vector<IGrid> rx_plans_;
    std::vector<std::vector<cplx>> phase_;
    std::vector<std::vector<int>> rx_max_;
    SampleStream x_;
    TxWindowPlan plan_;
    CapacityState state_;
};

inline Alg1Result algorithm1(const Scenario& sc, std::span<const ResourceGrid> grids, std::span<const CirPrediction> h,
                             const TaperTable& taper, Alg1Options opt = {}, const std::vector<IGrid>* rx_plans = nullptr) {
    TxOptimizer o(sc, grids, h, taper, opt, rx_plans);
    return o.run();
}

}  // namespace adwin
