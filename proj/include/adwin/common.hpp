#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adwin {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Thrown for scenario/config validation failures (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when files cannot be read or written (CLI exit code 3).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense matrix indexed (subcarrier m, symbol l), stored column-major so that
// one OFDM symbol is contiguous.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t m, std::size_t l) { return data_[l * rows_ + m]; }
    const T& operator()(std::size_t m, std::size_t l) const { return data_[l * rows_ + m]; }

    std::span<T> column(std::size_t l) { return {data_.data() + l * rows_, rows_}; }
    std::span<const T> column(std::size_t l) const { return {data_.data() + l * rows_, rows_}; }

    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

    bool same_shape(std::size_t r, std::size_t c) const { return rows_ == r && cols_ == c; }
    template <typename U>
    bool same_shape(const Grid<U>& o) const { return rows_ == o.rows() && cols_ == o.cols(); }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using CGrid = Grid<cplx>;
using RGrid = Grid<double>;
using IGrid = Grid<int>;
using Mask = Grid<std::uint8_t>;

// Real-arithmetic tallies. A complex multiply is 4 mults + 2 adds, a complex
// add is 2 adds, a real-by-complex scale is 2 mults.
struct OpCounter {
    std::uint64_t adds = 0;
    std::uint64_t mults = 0;

    void complex_mul(std::uint64_t n = 1) { mults += 4 * n; adds += 2 * n; }
    void complex_add(std::uint64_t n = 1) { adds += 2 * n; }
    void real_scale(std::uint64_t n = 1) { mults += 2 * n; }

    OpCounter& operator+=(const OpCounter& o) {
        adds += o.adds;
        mults += o.mults;
        return *this;
    }
    friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// exp(j*angle)
inline cplx phasor(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Non-negative residue, for mapping signed subcarrier indices onto FFT bins.
inline std::size_t wrap_index(long long i, std::size_t n) {
    const long long nn = static_cast<long long>(n);
    long long r = i % nn;
    if (r < 0) r += nn;
    return static_cast<std::size_t>(r);
}

}  // namespace adwin
