#pragma once

#include <Eigen/Dense>

#include "adwin/fft.hpp"
#include "adwin/grid.hpp"
#include "adwin/synth.hpp"
#include "adwin/taper.hpp"

namespace adwin {

// L blocks of K+N samples, block l starting at l*(N+K) + timing.
class SymbolBlocks {
public:
    SymbolBlocks() = default;
    SymbolBlocks(std::vector<cplx> data, std::size_t block_len) : data_(std::move(data)), len_(block_len) {}

    std::size_t count() const { return len_ ? data_.size() / len_ : 0; }
    std::size_t block_len() const { return len_; }
    std::span<const cplx> block(std::size_t l) const { return {data_.data() + l * len_, len_}; }

private:
    std::vector<cplx> data_;
    std::size_t len_ = 0;
};

inline SymbolBlocks extract_symbols(std::span<const cplx> y, const Numerology& nm, std::size_t timing) {
    const std::size_t need = timing + nm.slot_len();
    if (y.size() < need) throw std::invalid_argument("received stream too short for the slot");
    return SymbolBlocks(std::vector<cplx>(y.begin() + static_cast<std::ptrdiff_t>(timing),
                                          y.begin() + static_cast<std::ptrdiff_t>(need)),
                        nm.symbol_len());
}

// CP removal, normalized analysis transform and demapping of the user's subcarriers.
inline std::vector<cplx> fft_receive(std::span<const cplx> block, const UserAllocation& u) {
    const std::size_t N = u.numerology.fft_size, K = u.numerology.cp_len;
    if (block.size() != N + K) throw std::invalid_argument("symbol block length must be N+K");
    std::vector<cplx> bins(N);
    Fft::analysis(block.subspan(K, N), bins);
    std::vector<cplx> out(u.num_subcarriers);
    for (std::size_t m = 0; m < u.num_subcarriers; ++m) out[m] = bins[wrap_index(u.subcarrier_index(m), N)];
    return out;
}

inline CGrid receive_base_grid(const SymbolBlocks& blocks, const UserAllocation& u) {
    CGrid y(u.num_subcarriers, u.numerology.num_symbols);
    for (std::size_t l = 0; l < u.numerology.num_symbols; ++l) {
        const auto col = fft_receive(blocks.block(l), u);
        std::copy(col.begin(), col.end(), y.column(l).begin());
    }
    return y;
}

// Change of subcarrier `M` (signed index) of one block when receive windowed
// with the given rising edge (length r):
//   sum over the last r samples s of (y[s-N] - y[s]) * edge * exp(j2pi M (s-K)/N)/sqrt(N)
inline cplx rx_window_symbol_delta(std::span<const cplx> block, std::size_t N, std::size_t K, long long M,
                                   std::span<const double> edge) {
    const std::size_t r = edge.size();
    if (r > K) throw std::invalid_argument("rx window duration exceeds CP length");
    if (block.size() != N + K) throw std::invalid_argument("symbol block length must be N+K");
    cplx acc{};
    const double md = static_cast<double>(M);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t s = N + K - r + i;
        const double n = static_cast<double>(s) - static_cast<double>(K);
        acc += (block[s - N] - block[s]) * edge[i] * phasor(two_pi * md * n / static_cast<double>(N));
    }
    return acc / std::sqrt(static_cast<double>(N));
}

struct ReceivedGrid {
    CGrid base;      // Y_u[:, :, 0]
    CGrid windowed;  // Y-hat_u
    IGrid rx_plan;   // R_u
};

inline ReceivedGrid apply_rx_windowing(const SymbolBlocks& blocks, const UserAllocation& u, const CGrid& base,
                                       const IGrid& plan, const TaperTable& taper) {
    const auto& nm = u.numerology;
    if (!plan.same_shape(base) || !base.same_shape(u.num_subcarriers, nm.num_symbols))
        throw std::invalid_argument("rx plan shape mismatch");
    ReceivedGrid out{base, base, plan};
    for (std::size_t l = 0; l < nm.num_symbols; ++l)
        for (std::size_t m = 0; m < u.num_subcarriers; ++m) {
            const int r = plan(m, l);
            if (r < 0 || static_cast<std::size_t>(r) > nm.cp_len) throw std::invalid_argument("rx window duration outside [0, K]");
            if (r == 0) continue;
            out.windowed(m, l) += rx_window_symbol_delta(blocks.block(l), nm.fft_size, nm.cp_len,
                                                         u.subcarrier_index(m), taper.rise(static_cast<std::size_t>(r)));
        }
    return out;
}

// Least-squares fit of the first `num_taps` CIR coefficients to CFR samples on
// the allocated subcarriers, H[m] = sum_tau h[tau] exp(+j2pi M_m tau / N).
class CirFitter {
public:
    CirFitter() = default;
    CirFitter(const UserAllocation& u, std::size_t num_taps)
        : M_(u.num_subcarriers), taps_(num_taps), basis_(M_ * num_taps), pinv_(num_taps * M_) {
        if (num_taps == 0 || num_taps > M_) throw std::invalid_argument("CIR fit needs 1 <= taps <= subcarriers");
        const double N = static_cast<double>(u.numerology.fft_size);
        Eigen::MatrixXcd a(static_cast<Eigen::Index>(M_), static_cast<Eigen::Index>(taps_));
        for (std::size_t m = 0; m < M_; ++m)
            for (std::size_t t = 0; t < taps_; ++t) {
                const cplx v = phasor(two_pi * static_cast<double>(u.subcarrier_index(m)) * static_cast<double>(t) / N);
                basis_[m * taps_ + t] = v;
                a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t)) = v;
            }
        const Eigen::MatrixXcd p = a.completeOrthogonalDecomposition().pseudoInverse();
        for (std::size_t t = 0; t < taps_; ++t)
            for (std::size_t m = 0; m < M_; ++m) pinv_[t * M_ + m] = p(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m));
    }

    std::size_t num_taps() const { return taps_; }
    std::size_t num_subcarriers() const { return M_; }

    std::vector<cplx> fit(std::span<const cplx> cfr) const {
        std::vector<cplx> h(taps_);
        for (std::size_t t = 0; t < taps_; ++t) {
            cplx acc{};
            for (std::size_t m = 0; m < M_; ++m) acc += pinv_[t * M_ + m] * cfr[m];
            h[t] = acc;
        }
        return h;
    }

    // Ridge-regularized fit, min |A h - cfr|^2 + sum_t rho_t |h_t|^2, solved
    // as an augmented least-squares problem so the conditioning is not squared.
    std::vector<cplx> fit_ridge(std::span<const cplx> cfr, std::span<const double> rho) const {
        if (rho.size() != taps_) throw std::invalid_argument("ridge weights: one per tap required");
        const auto M = static_cast<Eigen::Index>(M_), T = static_cast<Eigen::Index>(taps_);
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(M + T, T);
        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(M + T);
        for (Eigen::Index m = 0; m < M; ++m) {
            for (Eigen::Index t = 0; t < T; ++t) a(m, t) = basis_[static_cast<std::size_t>(m) * taps_ + static_cast<std::size_t>(t)];
            b(m) = cfr[static_cast<std::size_t>(m)];
        }
        for (Eigen::Index t = 0; t < T; ++t) a(M + t, t) = std::sqrt(std::max(rho[static_cast<std::size_t>(t)], 0.0));
        const Eigen::VectorXcd x = a.householderQr().solve(b);
        return {x.data(), x.data() + T};
    }

    // Accepts CIRs longer than the fit order; extra taps are ignored.
    std::vector<cplx> cfr(std::span<const cplx> h) const {
        std::vector<cplx> H(M_);
        const std::size_t n = std::min(taps_, h.size());
        for (std::size_t m = 0; m < M_; ++m) {
            cplx acc{};
            for (std::size_t t = 0; t < n; ++t) acc += basis_[m * taps_ + t] * h[t];
            H[m] = acc;
        }
        return H;
    }

private:
    std::size_t M_ = 0, taps_ = 0;
    std::vector<cplx> basis_;
    std::vector<cplx> pinv_;
};

// CFR of an arbitrary-length CIR on the user's subcarriers.
inline std::vector<cplx> cir_to_cfr(std::span<const cplx> h, const UserAllocation& u) {
    const double N = static_cast<double>(u.numerology.fft_size);
    std::vector<cplx> H(u.num_subcarriers);
    for (std::size_t m = 0; m < u.num_subcarriers; ++m) {
        cplx acc{};
        for (std::size_t t = 0; t < h.size(); ++t)
            acc += h[t] * phasor(two_pi * static_cast<double>(u.subcarrier_index(m)) * static_cast<double>(t) / N);
        H[m] = acc;
    }
    return H;
}

struct PilotCirFit {
    std::vector<std::size_t> pilot_symbols;
    std::vector<std::vector<cplx>> cirs;  // one truncated CIR per pilot symbol
    double noise_var = 0;                 // residual power per degree of freedom
};

// LS ratios on every fully-piloted symbol, each reduced to its first
// `fitter.num_taps()` CIR coefficients.
inline PilotCirFit fit_pilot_cirs(const CGrid& received, const CGrid& pilots, const Mask& pilot_mask,
                                  const UserAllocation& u, const CirFitter& fitter) {
    const std::size_t M = u.num_subcarriers, L = u.numerology.num_symbols;
    if (!received.same_shape(M, L) || !pilots.same_shape(M, L) || !pilot_mask.same_shape(M, L))
        throw std::invalid_argument("channel estimation: shape mismatch");
    PilotCirFit fit;
    double resid = 0;
    std::size_t dof = 0;
    std::vector<cplx> ls(M);
    for (std::size_t l = 0; l < L; ++l) {
        bool full = true;
        for (std::size_t m = 0; m < M && full; ++m) full = pilot_mask(m, l) != 0;
        if (!full) continue;
        for (std::size_t m = 0; m < M; ++m) {
            const cplx p = pilots(m, l);
            ls[m] = std::abs(p) > 0 ? received(m, l) / p : cplx{};
        }
        auto h = fitter.fit(ls);
        const auto fitted = fitter.cfr(h);
        for (std::size_t m = 0; m < M; ++m) resid += std::norm(ls[m] - fitted[m]);
        dof += M - fitter.num_taps();
        fit.pilot_symbols.push_back(l);
        fit.cirs.push_back(std::move(h));
    }
    if (fit.cirs.empty()) throw std::invalid_argument("channel estimation: no pilot symbols");
    fit.noise_var = dof ? resid / static_cast<double>(dof) : 0.0;
    return fit;
}

struct ChannelEstimate {
    CGrid cfr;              // H-hat_u
    double noise_var = 0;   // sigma-hat^2, broadcast over the grid
    std::vector<std::size_t> pilot_symbols;
};

// LS at pilot REs, CIR truncation, linear interpolation of each CIR
// coefficient across symbols (constant beyond the outermost pilots), noise
// variance from the pilot fit residuals.
inline ChannelEstimate estimate_channel(const CGrid& received, const CGrid& pilots, const Mask& pilot_mask,
                                        const UserAllocation& u, const CirFitter& fitter) {
    const auto fit = fit_pilot_cirs(received, pilots, pilot_mask, u, fitter);
    const std::size_t M = u.num_subcarriers, L = u.numerology.num_symbols;
    ChannelEstimate est;
    est.noise_var = fit.noise_var;
    est.pilot_symbols = fit.pilot_symbols;
    est.cfr = CGrid(M, L);
    const auto& ps = fit.pilot_symbols;
    const auto& cirs = fit.cirs;
    std::vector<cplx> h(fitter.num_taps());
    for (std::size_t l = 0; l < L; ++l) {
        if (l <= ps.front()) {
            h = cirs.front();
        } else if (l >= ps.back()) {
            h = cirs.back();
        } else {
            std::size_t j = 0;
            while (ps[j + 1] < l) ++j;
            const double w = static_cast<double>(l - ps[j]) / static_cast<double>(ps[j + 1] - ps[j]);
            for (std::size_t t = 0; t < h.size(); ++t) h[t] = (1.0 - w) * cirs[j][t] + w * cirs[j + 1][t];
        }
        const auto H = fitter.cfr(h);
        std::copy(H.begin(), H.end(), est.cfr.column(l).begin());
    }
    return est;
}

// MMSE one-tap equalization on data REs; pilot REs are left at zero.
inline CGrid equalize(const CGrid& y, const CGrid& h, double noise_var, const Mask* pilot_mask = nullptr) {
    if (!y.same_shape(h)) throw std::invalid_argument("equalize: shape mismatch");
    CGrid d(y.rows(), y.cols());
    for (std::size_t l = 0; l < y.cols(); ++l)
        for (std::size_t m = 0; m < y.rows(); ++m) {
            if (pilot_mask && (*pilot_mask)(m, l)) continue;
            const double den = noise_var + std::norm(h(m, l));
            d(m, l) = den > 0 ? y(m, l) * std::conj(h(m, l)) / den : cplx{};
        }
    return d;
}

}  // namespace adwin
