#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "adwin/common.hpp"

namespace adwin {

// Normalized N-point transforms with the sign conventions used throughout:
// synthesis  x[n] = sum_k X[k] exp(-j2*pi*k*n/N) / sqrt(N)
// analysis   X[k] = sum_n x[n] exp(+j2*pi*k*n/N) / sqrt(N)
// Plans are created once per (size, direction) and shared; FFTW planning is
// not thread safe, execution on new arrays is.
class Fft {
public:
    static void synthesis(std::span<const cplx> in, std::span<cplx> out) {
        run(FFTW_FORWARD, in, out);
    }
    static void analysis(std::span<const cplx> in, std::span<cplx> out) {
        run(FFTW_BACKWARD, in, out);
    }

private:
    struct Plans {
        std::mutex mu;
        std::map<std::pair<std::size_t, int>, fftw_plan> cache;
        ~Plans() {
            for (auto& [key, plan] : cache) fftw_destroy_plan(plan);
        }
    };

    static Plans& plans() {
        static Plans p;
        return p;
    }

    static fftw_plan plan_for(std::size_t n, int sign) {
        auto& p = plans();
        std::lock_guard lock(p.mu);
        auto it = p.cache.find({n, sign});
        if (it != p.cache.end()) return it->second;
        std::vector<cplx> a(n), b(n);
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(a.data()),
                                          reinterpret_cast<fftw_complex*>(b.data()), sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        p.cache.emplace(std::pair{n, sign}, plan);
        return plan;
    }

    static void run(int sign, std::span<const cplx> in, std::span<cplx> out) {
        const std::size_t n = in.size();
        if (out.size() != n) throw std::invalid_argument("fft: size mismatch");
        if (n == 0) return;
        std::vector<cplx> tmp(in.begin(), in.end());
        fftw_execute_dft(plan_for(n, sign), reinterpret_cast<fftw_complex*>(tmp.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
        const double scale = 1.0 / std::sqrt(static_cast<double>(n));
        for (auto& v : out) v *= scale;
    }
};

}  // namespace adwin
