#pragma once

#include <boost/math/distributions/students_t.hpp>

#include "adwin/common.hpp"

namespace adwin {

// Average ranks (1-based), ties sharing the mean of their positions.
inline std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("correlation needs two equal series of length >= 2");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

struct Correlation {
    double rho = 0;
    double p_value = 1;  // two-sided
    std::size_t n = 0;
};

// Spearman rank correlation; the p-value uses the t approximation with n-2
// degrees of freedom.
inline Correlation spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = ranks(x), ry = ranks(y);
    Correlation c;
    c.n = x.size();
    c.rho = pearson(rx, ry);
    if (c.n < 3) return c;
    const double df = static_cast<double>(c.n - 2);
    if (std::abs(c.rho) >= 1.0) {
        c.p_value = 0.0;
        return c;
    }
    const double t = c.rho * std::sqrt(df / (1.0 - c.rho * c.rho));
    boost::math::students_t dist(df);
    c.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return c;
}

struct Summary {
    double mean = 0;
    double stddev = 0;  // sample standard deviation
    double stderr_mean = 0;
    std::size_t n = 0;
};

inline Summary summarize(std::span<const double> v) {
    Summary s;
    s.n = v.size();
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(s.n);
    if (s.n > 1) {
        double acc = 0;
        for (double x : v) acc += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(acc / static_cast<double>(s.n - 1));
        s.stderr_mean = s.stddev / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

// Linear-interpolated quantile (type 7), q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile of empty series");
    if (q < 0 || q > 1) throw std::invalid_argument("quantile outside [0, 1]");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

}  // namespace adwin
