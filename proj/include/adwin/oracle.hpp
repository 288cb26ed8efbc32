#pragma once

// Straight-line reference implementations for tests. Nothing here calls the
// FFT wrapper, the differential kernels or the optimizers.

#include <chrono>
#include <optional>

#include "adwin/grid.hpp"
#include "adwin/taper.hpp"

namespace adwin::oracle {

struct OracleReport {
    double max_abs_error = 0;
    std::vector<std::size_t> mismatches;  // positions whose error exceeds the tolerance
    double runtime_s = 0;

    bool ok() const { return mismatches.empty(); }
};

inline OracleReport compare(std::span<const cplx> got, std::span<const cplx> want, double tol) {
    if (got.size() != want.size()) throw std::invalid_argument("oracle compare: length mismatch");
    OracleReport r;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double e = std::abs(got[i] - want[i]);
        r.max_abs_error = std::max(r.max_abs_error, e);
        if (e > tol) r.mismatches.push_back(i);
    }
    return r;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// Overlap-add synthesis: every RE contributes its own pulse, a complex
// exponential over CP, body and cyclic suffix, shaped by its complete taper.
// The suffix of (m, l) overlaps the next symbol's CP for that symbol's
// duration T[m, l+1]; the first symbol has no predecessor and the last
// symbol's suffix falls outside the slot.
template <TaperFamily F = RaisedCosineTaper>
std::vector<cplx> brute_force_tx_window(const Scenario& sc, std::span<const ResourceGrid> grids,
                                        const std::vector<IGrid>& plan, const F& family = {}) {
    std::vector<cplx> x(sc.slot_len());
    for (std::size_t u = 0; u < sc.num_users(); ++u) {
        const auto& a = sc.users[u];
        const long long N = static_cast<long long>(a.numerology.fft_size);
        const long long K = static_cast<long long>(a.numerology.cp_len);
        const long long S = N + K;
        const std::size_t L = a.numerology.num_symbols;
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t m = 0; m < a.num_subcarriers; ++m) {
                const cplx X = grids[u].data(m, l) + grids[u].pilots(m, l);
                const double M = static_cast<double>(a.first_subcarrier + static_cast<long long>(m));
                const long long T = plan[u](m, l);
                const long long Tn = l + 1 < L ? plan[u](m, l + 1) : 0;
                std::vector<double> own(static_cast<std::size_t>(K + N), 1.0);
                for (long long k = 0; k < T; ++k) own[static_cast<std::size_t>(k)] = family.rise(static_cast<std::size_t>(k), static_cast<std::size_t>(T));
                const long long start = static_cast<long long>(l) * S;
                for (long long i = 0; i < K + N + Tn; ++i) {
                    double w;
                    if (i < K + N) {
                        w = own[static_cast<std::size_t>(i)];
                    } else {
                        w = 1.0 - family.rise(static_cast<std::size_t>(i - K - N), static_cast<std::size_t>(Tn));
                    }
                    const double n = static_cast<double>(i - K);  // body index, cyclic
                    const cplx v = X * std::exp(cplx(0, -two_pi * M * n / static_cast<double>(N))) / std::sqrt(static_cast<double>(N));
                    x[static_cast<std::size_t>(start + i)] += w * v;
                }
            }
    }
    return x;
}

// Weights all N+K samples by the full receive taper, folds the CP span onto
// the body tail and evaluates the normalized analysis sum at subcarrier M.
template <TaperFamily F = RaisedCosineTaper>
cplx brute_force_rx_window(std::span<const cplx> block, std::size_t N, std::size_t K, long long M, std::size_t r,
                           const F& family = {}) {
    if (r > K) throw std::invalid_argument("rx window duration exceeds CP length");
    if (block.size() != N + K) throw std::invalid_argument("block length must be N+K");
    std::vector<double> w(N + K, 0.0);
    for (std::size_t s = K; s < N + K; ++s) w[s] = 1.0;
    for (std::size_t i = 0; i < r; ++i) {
        w[K - r + i] = family.rise(i, r);
        w[N + K - r + i] = 1.0 - family.rise(i, r);
    }
    std::vector<cplx> z(N);
    for (std::size_t s = 0; s < N + K; ++s) {
        const std::size_t n = s >= K ? s - K : s + N - K;
        z[n] += w[s] * block[s];
    }
    cplx acc{};
    for (std::size_t n = 0; n < N; ++n)
        acc += z[n] * std::exp(cplx(0, two_pi * static_cast<double>(M) * static_cast<double>(n) / static_cast<double>(N)));
    return acc / std::sqrt(static_cast<double>(N));
}

// Population variance via the mean, then squared deviations.
inline double two_pass_variance(std::span<const cplx> values) {
    if (values.empty()) throw std::invalid_argument("variance of an empty set");
    cplx mean{};
    for (auto v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double acc = 0;
    for (auto v : values) acc += std::norm(v - mean);
    return acc / static_cast<double>(values.size());
}

// Full-chain estimated capacities for a given tx plan: synthesize from
// scratch, convolve with each predicted CIR, demodulate by direct DFT sums
// (optionally receive-windowed) and evaluate every RE.
struct ScratchCapacity {
    std::vector<RGrid> per_re;            // eta-breve (or capped) per RE
    std::vector<std::vector<double>> column_sum;  // data REs only
    std::vector<double> slot_sum;
    std::vector<double> mean;
    double network = 0;
};

inline ScratchCapacity scratch_capacity(const Scenario& sc, std::span<const ResourceGrid> grids,
                                        std::span<const std::vector<cplx>> cir, const std::vector<IGrid>& plan,
                                        bool capped = false, const std::vector<IGrid>* rx_plans = nullptr) {
    const auto x = brute_force_tx_window(sc, grids, plan);
    ScratchCapacity out;
    double log_sum = 0;
    bool zero = false;
    for (std::size_t u = 0; u < sc.num_users(); ++u) {
        const auto& a = sc.users[u];
        const std::size_t N = a.numerology.fft_size, K = a.numerology.cp_len, L = a.numerology.num_symbols;
        const auto& h = cir[u];
        std::vector<cplx> y(x.size());
        for (std::size_t t = 0; t < y.size(); ++t)
            for (std::size_t tau = 0; tau < h.size() && tau <= t; ++tau) y[t] += h[tau] * x[t - tau];
        RGrid eta(a.num_subcarriers, L);
        std::vector<double> cols(L, 0.0);
        double slot = 0;
        std::size_t count = 0;
        for (std::size_t l = 0; l < L; ++l) {
            std::span<const cplx> blk(y.data() + l * (N + K), N + K);
            for (std::size_t m = 0; m < a.num_subcarriers; ++m) {
                const long long M = a.first_subcarrier + static_cast<long long>(m);
                const std::size_t r = rx_plans ? static_cast<std::size_t>((*rx_plans)[u](m, l)) : 0;
                const cplx Y = brute_force_rx_window(blk, N, K, M, r);
                cplx H{};
                for (std::size_t tau = 0; tau < h.size(); ++tau)
                    H += h[tau] * std::exp(cplx(0, two_pi * static_cast<double>(M) * static_cast<double>(tau) / static_cast<double>(N)));
                const cplx X = grids[u].data(m, l) + grids[u].pilots(m, l);
                double e = std::log2(1.0 + std::norm(H) / (1.0 + std::norm(Y - H * X)));
                if (capped && a.mcs_bits) e = std::min(e, *a.mcs_bits);
                eta(m, l) = e;
                if (!grids[u].pilot_mask(m, l)) {
                    cols[l] += e;
                    slot += e;
                    ++count;
                }
            }
        }
        const double mean = count ? slot / static_cast<double>(count) : 0.0;
        if (mean <= 0) zero = true; else log_sum += std::log(mean);
        out.per_re.push_back(std::move(eta));
        out.column_sum.push_back(std::move(cols));
        out.slot_sum.push_back(slot);
        out.mean.push_back(mean);
    }
    out.network = zero ? 0.0 : std::exp(log_sum / static_cast<double>(sc.num_users()));
    return out;
}

// Visits REs in the greedy order (descending estimated capacity, or excess
// over the cap, of the non-windowed stream; ties by user, subcarrier, symbol)
// and gives each the duration in 0..K that maximizes the full-chain fair
// capacity, ties to the shorter duration. Toy scenarios only.
inline std::vector<IGrid> exhaustive_tx_search(const Scenario& sc, std::span<const ResourceGrid> grids,
                                               std::span<const std::vector<cplx>> cir, bool capped = false,
                                               const std::vector<IGrid>* rx_plans = nullptr) {
    if (sc.num_users() > 2) throw std::invalid_argument("exhaustive search: at most 2 users");
    for (const auto& u : sc.users)
        if (u.numerology.fft_size > 64 || u.numerology.num_symbols > 4)
            throw std::invalid_argument("exhaustive search: toy scenarios only (N <= 64, L <= 4)");

    std::vector<IGrid> plan;
    for (const auto& u : sc.users) plan.emplace_back(u.num_subcarriers, u.numerology.num_symbols, 0);
    // Order by the uncapped value minus the cap, as the optimizer does.
    const auto base = scratch_capacity(sc, grids, cir, plan, false, rx_plans);

    struct Item {
        double key;
        std::size_t u, m, l;
    };
    std::vector<Item> items;
    for (std::size_t u = 0; u < sc.num_users(); ++u)
        for (std::size_t l = 0; l < sc.users[u].numerology.num_symbols; ++l)
            for (std::size_t m = 0; m < sc.users[u].num_subcarriers; ++m) {
                if (grids[u].pilot_mask(m, l)) continue;
                const double b = capped && sc.users[u].mcs_bits ? *sc.users[u].mcs_bits : 0.0;
                items.push_back({base.per_re[u](m, l) - b, u, m, l});
            }
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.key != b.key) return a.key > b.key;
        if (a.u != b.u) return a.u < b.u;
        if (a.m != b.m) return a.m < b.m;
        return a.l < b.l;
    });

    for (const auto& it : items) {
        const int K = static_cast<int>(sc.users[it.u].numerology.cp_len);
        int best_t = 0;
        double best = -1;
        for (int t = 0; t <= K; ++t) {
            plan[it.u](it.m, it.l) = t;
            const double v = scratch_capacity(sc, grids, cir, plan, capped, rx_plans).network;
            if (v > best) {
                best = v;
                best_t = t;
            }
        }
        plan[it.u](it.m, it.l) = best_t;
    }
    return plan;
}

}  // namespace adwin::oracle
