#pragma once

#include <iterator>
#include <limits>

#include "adwin/rx.hpp"

namespace adwin {

// For each anchor RE, the P REs expected to see the most correlated channel,
// anchor first. Anchors and members are flat indices l * rows + m.
class NeighborSet {
public:
    NeighborSet() = default;
    NeighborSet(std::size_t rows, std::size_t cols, std::size_t p, std::vector<std::uint32_t> members)
        : rows_(rows), cols_(cols), p_(p), members_(std::move(members)) {
        if (members_.size() != rows_ * cols_ * p_) throw std::invalid_argument("neighbor set storage size mismatch");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return p_; }
    std::span<const std::uint32_t> members(std::size_t m, std::size_t l) const {
        return {members_.data() + (l * rows_ + m) * p_, p_};
    }

private:
    std::size_t rows_ = 0, cols_ = 0, p_ = 0;
    std::vector<std::uint32_t> members_;
};

struct CoherenceModel {
    double rms_delay_spread_s = 0;
    double doppler_hz = 0;

    double coherence_bandwidth_hz() const {
        return rms_delay_spread_s > 0 ? 1.0 / (5.0 * rms_delay_spread_s) : std::numeric_limits<double>::infinity();
    }
    double coherence_time_s() const {
        return doppler_hz > 0 ? 0.423 / doppler_hz : std::numeric_limits<double>::infinity();
    }
};

// Members minimize d = (dm*df/Bc)^2 + (dl*Tsym/Tc)^2 within the grid; ties go
// to the smaller |dm|, then |dl|, then signed dm, dl.
inline NeighborSet build_neighbor_sets(const UserAllocation& u, const CoherenceModel& cm, double sample_rate_hz,
                                       std::size_t p) {
    const std::size_t M = u.num_subcarriers, L = u.numerology.num_symbols;
    if (p == 0 || p > M * L) throw std::invalid_argument("neighbor set size must be in [1, M*L]");
    const double fs = u.numerology.subcarrier_spacing_hz / cm.coherence_bandwidth_hz();
    const double ts = static_cast<double>(u.numerology.symbol_len()) / sample_rate_hz / cm.coherence_time_s();
    struct Offset {
        double d;
        long long dm, dl;
    };
    std::vector<Offset> offs;
    const long long Mi = static_cast<long long>(M), Li = static_cast<long long>(L);
    for (long long dl = -(Li - 1); dl <= Li - 1; ++dl)
        for (long long dm = -(Mi - 1); dm <= Mi - 1; ++dm) {
            const double a = static_cast<double>(dm) * fs, b = static_cast<double>(dl) * ts;
            offs.push_back({a * a + b * b, dm, dl});
        }
    std::sort(offs.begin(), offs.end(), [](const Offset& x, const Offset& y) {
        if (x.d != y.d) return x.d < y.d;
        if (std::llabs(x.dm) != std::llabs(y.dm)) return std::llabs(x.dm) < std::llabs(y.dm);
        if (std::llabs(x.dl) != std::llabs(y.dl)) return std::llabs(x.dl) < std::llabs(y.dl);
        if (x.dm != y.dm) return x.dm < y.dm;
        return x.dl < y.dl;
    });
    std::vector<std::uint32_t> members;
    members.reserve(M * L * p);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t m = 0; m < M; ++m) {
            std::size_t got = 0;
            for (const auto& o : offs) {
                const long long mm = static_cast<long long>(m) + o.dm, ll = static_cast<long long>(l) + o.dl;
                if (mm < 0 || mm >= Mi || ll < 0 || ll >= Li) continue;
                members.push_back(static_cast<std::uint32_t>(ll * Mi + mm));
                if (++got == p) break;
            }
        }
    return NeighborSet(M, L, p, std::move(members));
}

// Receive-window symbol deltas for every duration 0..K of every RE.
class DeltaCube {
public:
    DeltaCube() = default;
    DeltaCube(std::size_t rows, std::size_t cols, std::size_t max_r)
        : rows_(rows), cols_(cols), depth_(max_r + 1), v_(rows * cols * depth_) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t max_r() const { return depth_ ? depth_ - 1 : 0; }
    cplx& operator()(std::size_t idx, std::size_t r) { return v_[idx * depth_ + r]; }
    cplx operator()(std::size_t idx, std::size_t r) const { return v_[idx * depth_ + r]; }

private:
    std::size_t rows_ = 0, cols_ = 0, depth_ = 0;
    std::vector<cplx> v_;
};

// Same sums as rx_window_symbol_delta for all r at once, with the phase
// rotation of each CP-span difference computed once.
inline DeltaCube rx_window_delta_cube(const SymbolBlocks& blocks, const UserAllocation& u, const TaperTable& taper) {
    const std::size_t M = u.num_subcarriers, L = u.numerology.num_symbols;
    const std::size_t N = u.numerology.fft_size, K = u.numerology.cp_len;
    if (taper.max_len() < K) throw std::invalid_argument("taper table too short for the CP");
    DeltaCube cube(M, L, K);
    const double inv = 1.0 / std::sqrt(static_cast<double>(N));
    std::vector<cplx> diff(K);
    for (std::size_t l = 0; l < L; ++l) {
        const auto blk = blocks.block(l);
        for (std::size_t m = 0; m < M; ++m) {
            const double Md = static_cast<double>(u.subcarrier_index(m));
            for (std::size_t i = 0; i < K; ++i) {
                const std::size_t s = N + i;  // body sample; its CP twin is blk[i]
                diff[i] = (blk[i] - blk[s]) * phasor(two_pi * Md * static_cast<double>(s - K) / static_cast<double>(N)) * inv;
            }
            const std::size_t idx = l * M + m;
            for (std::size_t r = 1; r <= K; ++r) {
                const auto edge = taper.rise(r);
                cplx acc{};
                for (std::size_t i = 0; i < r; ++i) acc += diff[K - r + i] * edge[i];
                cube(idx, r) = acc;
            }
        }
    }
    return cube;
}

// Equal-weight variance of Y[i] + dY[i](r) over a set, written as
// (1/P^3) sum |P v_i - S|^2 with S the set sum.
inline double variance_statistic(const CGrid& y0, const DeltaCube& dd, std::span<const std::uint32_t> set, std::size_t r) {
    if (set.empty()) throw std::invalid_argument("variance statistic of an empty set");
    const double P = static_cast<double>(set.size());
    cplx S{};
    for (auto i : set) S += y0.raw()[i] + dd(i, r);
    double acc = 0;
    for (auto i : set) acc += std::norm(P * (y0.raw()[i] + dd(i, r)) - S);
    return acc / (P * P * P);
}

// Running per-duration set sums, updated by member swaps when the anchor
// moves to a neighbouring RE.
class VarianceTable {
public:
    VarianceTable(const CGrid& y0, const DeltaCube& dd, std::size_t p) : y0_(&y0), dd_(&dd), p_(p), sums_(dd.max_r() + 1) {}

    void reset(std::span<const std::uint32_t> set) {
        check(set);
        members_.assign(set.begin(), set.end());
        std::sort(members_.begin(), members_.end());
        std::fill(sums_.begin(), sums_.end(), cplx{});
        for (auto i : members_) add(i, 1.0);
    }

    // Moves to a new set, touching only the members that differ. Returns the
    // number of swapped members.
    std::size_t move_to(std::span<const std::uint32_t> set) {
        check(set);
        std::vector<std::uint32_t> next(set.begin(), set.end());
        std::sort(next.begin(), next.end());
        std::vector<std::uint32_t> gone, fresh;
        std::set_difference(members_.begin(), members_.end(), next.begin(), next.end(), std::back_inserter(gone));
        std::set_difference(next.begin(), next.end(), members_.begin(), members_.end(), std::back_inserter(fresh));
        for (auto i : gone) add(i, -1.0);
        for (auto i : fresh) add(i, 1.0);
        members_ = std::move(next);
        return fresh.size();
    }

    double statistic(std::size_t r) const {
        const double P = static_cast<double>(p_);
        double acc = 0;
        for (auto i : members_) acc += std::norm(P * value(i, r) - sums_[r]);
        return acc / (P * P * P);
    }

    cplx sum(std::size_t r) const { return sums_[r]; }

private:
    void check(std::span<const std::uint32_t> set) const {
        if (set.size() != p_) throw std::invalid_argument("neighbor set size differs from P");
    }
    cplx value(std::uint32_t i, std::size_t r) const { return y0_->raw()[i] + (*dd_)(i, r); }
    void add(std::uint32_t i, double sign) {
        for (std::size_t r = 0; r < sums_.size(); ++r) sums_[r] += sign * value(i, r);
    }

    const CGrid* y0_;
    const DeltaCube* dd_;
    std::size_t p_;
    std::vector<cplx> sums_;
    std::vector<std::uint32_t> members_;
};

struct Alg2Result {
    IGrid rx_plan;
    CGrid windowed;
    std::vector<std::vector<double>> visited;  // per RE (flat index), statistic at r = 0, 1, ...; filled on request
};

// Per RE: evaluate the variance statistic at r = 0, 1, ... and stop at the first
// increase, keeping the previous duration; K when it never increases. Anchors
// run symbol by symbol; within a symbol the set moves by member swaps.
inline Alg2Result algorithm2(const CGrid& y0, const DeltaCube& dd, const NeighborSet& sets, bool keep_trace = false) {
    const std::size_t M = y0.rows(), L = y0.cols(), K = dd.max_r();
    if (sets.rows() != M || sets.cols() != L || dd.rows() != M || dd.cols() != L)
        throw std::invalid_argument("algorithm2: shape mismatch");
    Alg2Result res{IGrid(M, L, 0), y0, {}};
    if (keep_trace) res.visited.resize(M * L);
    VarianceTable table(y0, dd, sets.size());
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t m = 0; m < M; ++m) {
            if (m == 0) {
                table.reset(sets.members(m, l));
            } else {
                table.move_to(sets.members(m, l));
            }
            const std::size_t idx = l * M + m;
            double prev = table.statistic(0);
            if (keep_trace) res.visited[idx].push_back(prev);
            std::size_t R = K;
            for (std::size_t r = 1; r <= K; ++r) {
                const double cur = table.statistic(r);
                if (keep_trace) res.visited[idx].push_back(cur);
                if (cur > prev) {
                    R = r - 1;
                    break;
                }
                prev = cur;
            }
            res.rx_plan(m, l) = static_cast<int>(R);
            res.windowed(m, l) = y0(m, l) + dd(idx, R);
        }
    return res;
}

inline Alg2Result algorithm2(const SymbolBlocks& blocks, const UserAllocation& u, const CGrid& y0,
                             const NeighborSet& sets, const TaperTable& taper, bool keep_trace = false) {
    if (!y0.same_shape(u.num_subcarriers, u.numerology.num_symbols)) throw std::invalid_argument("algorithm2: shape mismatch");
    return algorithm2(y0, rx_window_delta_cube(blocks, u, taper), sets, keep_trace);
}

}  // namespace adwin
