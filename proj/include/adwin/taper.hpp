#pragma once

#include <concepts>

#include "adwin/common.hpp"

namespace adwin {

// A taper family supplies the rising edge of a window: rise(i, n) for
// i = 0..n-1, strictly inside (0, 1), nondecreasing in i, and symmetric,
// rise(i, n) + rise(n-1-i, n) == 1. The falling edge is 1 - rise, which makes
// overlapped edges complementary sample by sample.
template <typename T>
concept TaperFamily = requires(const T& t, std::size_t i, std::size_t n) {
    { t.rise(i, n) } -> std::convertible_to<double>;
};

struct RaisedCosineTaper {
    double rise(std::size_t i, std::size_t n) const {
        return 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(n + 1)));
    }
};

// Edge weights for every duration 0..max_len, so hot loops avoid cos().
class TaperTable {
public:
    TaperTable() = default;

    template <TaperFamily F>
    TaperTable(const F& family, std::size_t max_len) : edges_(max_len + 1) {
        for (std::size_t n = 1; n <= max_len; ++n) {
            edges_[n].resize(n);
            for (std::size_t i = 0; i < n; ++i) edges_[n][i] = family.rise(i, n);
        }
    }

    std::size_t max_len() const { return edges_.empty() ? 0 : edges_.size() - 1; }
    std::span<const double> rise(std::size_t n) const {
        if (n >= edges_.size()) throw std::out_of_range("taper duration exceeds table");
        return edges_[n];
    }

private:
    std::vector<std::vector<double>> edges_;
};

// Transmit pulse weights t (length K+N+T): rising edge over the first T
// samples, one over the rest of CP and body, falling cyclic-suffix edge over
// the last T samples, with t[k] + t[k+N+K] == 1 for k < T.
template <TaperFamily F = RaisedCosineTaper>
std::vector<double> tx_window_taper(std::size_t T, std::size_t N, std::size_t K, const F& family = {}) {
    if (T > K) throw std::invalid_argument("tx window duration exceeds CP length");
    std::vector<double> t(K + N + T, 1.0);
    for (std::size_t k = 0; k < T; ++k) {
        const double r = family.rise(k, T);
        t[k] = r;
        t[k + N + K] = 1.0 - r;
    }
    return t;
}

// Receive weights r (length K+N) for duration R: zero before the last R CP
// samples, rising over them, one over the body except its last R samples,
// which carry the complement r[s] = 1 - r[s-N].
template <TaperFamily F = RaisedCosineTaper>
std::vector<double> rx_window_taper(std::size_t R, std::size_t N, std::size_t K, const F& family = {}) {
    if (R > K) throw std::invalid_argument("rx window duration exceeds CP length");
    std::vector<double> r(K + N, 0.0);
    for (std::size_t s = K; s < K + N; ++s) r[s] = 1.0;
    for (std::size_t i = 0; i < R; ++i) {
        const double w = family.rise(i, R);
        r[K - R + i] = w;
        r[K + N - R + i] = 1.0 - w;
    }
    return r;
}

// Per-RE noise variance after receive windowing with unit-variance white
// input: (1/N) * [(N - R) + sum over the R windowed positions of w^2 + (1-w)^2].
inline double rx_window_noise_variance(std::span<const double> edge, std::size_t N) {
    double acc = static_cast<double>(N - edge.size());
    for (double w : edge) acc += w * w + (1.0 - w) * (1.0 - w);
    return acc / static_cast<double>(N);
}

}  // namespace adwin
