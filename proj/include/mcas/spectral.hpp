#pragma once

// Discrete Fourier utilities on periodic grids: transform pair, Sobolev norms,
// and the diagonal solve of (I - c*Δ_h) used for implicit diffusion in 2D.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "mcas/grid.hpp"

namespace mcas {

namespace detail {

// The FFTW planner is not reentrant; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

inline fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

/// In-place complex transform over a 1D or 2D grid, owning its buffer.
class FftPlan {
public:
    FftPlan(const GridSpec& grid, int sign) : buffer_(grid.size()) {
        std::lock_guard lock(fftw_planner_mutex());
        const int n = grid.points;
        plan_ = grid.dim == 1
                    ? fftw_plan_dft_1d(n, as_fftw(buffer_.data()), as_fftw(buffer_.data()), sign,
                                       FFTW_ESTIMATE)
                    : fftw_plan_dft_2d(n, n, as_fftw(buffer_.data()), as_fftw(buffer_.data()), sign,
                                       FFTW_ESTIMATE);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
    ~FftPlan() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }

    std::vector<std::complex<double>>& buffer() { return buffer_; }
    void execute() { fftw_execute(plan_); }

private:
    std::vector<std::complex<double>> buffer_;
    fftw_plan plan_ = nullptr;
};

/// Signed mode index for position i of an n-point transform: 0..n/2-1, -n/2..-1.
inline int signed_mode(int i, int n) { return i < n / 2 ? i : i - n; }

}  // namespace detail

/// Fourier coefficients c_m with u(x) = sum_m c_m exp(i k_m x), k_m = 2*pi*m/extent.
/// Storage order follows the grid (x fastest in 2D), FFTW index convention.
struct SpectralCoefficients {
    GridSpec grid;
    std::vector<std::complex<double>> modes;

    double wavenumber(int index) const {
        return 2.0 * pi * detail::signed_mode(index, grid.points) / grid.extent;
    }

    /// |k|^2 for the mode stored at flat position `flat`.
    double wavenumber_squared(std::size_t flat) const {
        const int n = grid.points;
        if (grid.dim == 1) {
            const double k = wavenumber(static_cast<int>(flat));
            return k * k;
        }
        const double kx = wavenumber(static_cast<int>(flat % n));
        const double ky = wavenumber(static_cast<int>(flat / n));
        return kx * kx + ky * ky;
    }
};

inline SpectralCoefficients spectral_transform(const Field& f) {
    detail::FftPlan plan(f.grid(), FFTW_FORWARD);
    auto& buf = plan.buffer();
    for (std::size_t i = 0; i < f.size(); ++i) buf[i] = f[i];
    plan.execute();
    const double scale = 1.0 / static_cast<double>(f.size());
    SpectralCoefficients out{f.grid(), std::vector<std::complex<double>>(f.size())};
    for (std::size_t i = 0; i < f.size(); ++i) out.modes[i] = buf[i] * scale;
    return out;
}

/// Real part of the synthesis; the imaginary part is round-off for coefficients of a real field.
inline Field inverse_spectral_transform(const SpectralCoefficients& c) {
    detail::FftPlan plan(c.grid, FFTW_BACKWARD);
    auto& buf = plan.buffer();
    std::copy(c.modes.begin(), c.modes.end(), buf.begin());
    plan.execute();
    std::vector<double> v(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) v[i] = buf[i].real();
    return Field(c.grid, std::move(v));
}

/// ( sum_k (1+|k|^2)^s |û_k|^2 )^{1/2}, with û normalized so that s = 0 is the discrete L2 norm.
inline double sobolev_norm(const SpectralCoefficients& c, int s) {
    const auto& g = c.grid;
    if (s < 0) throw ConfigError(fmt::format("Sobolev order must be non-negative, got {}", s));
    if (s > g.points / 4)
        throw ConfigError(
            fmt::format("Sobolev order {} exceeds points/4 = {}", s, g.points / 4));
    double sum = 0.0;
    for (std::size_t i = 0; i < c.modes.size(); ++i)
        sum += std::pow(1.0 + c.wavenumber_squared(i), s) * std::norm(c.modes[i]);
    return std::sqrt(sum * g.measure());
}

inline double sobolev_norm(const Field& f, int s) { return sobolev_norm(spectral_transform(f), s); }

/// Solves (I - c*Δ_h) u = rhs on a periodic grid by diagonalizing the five-point
/// (2D) or three-point (1D) Laplacian in Fourier space. Holds its FFTW plans; one
/// instance per thread.
class SpectralHelmholtz {
public:
    explicit SpectralHelmholtz(const GridSpec& grid)
        : grid_(grid), forward_(grid, FFTW_FORWARD), backward_(grid, FFTW_BACKWARD) {
        const int n = grid.points;
        const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        std::vector<double> axis(n);
        for (int i = 0; i < n; ++i) {
            const double s = std::sin(pi * i / n);
            axis[i] = 4.0 * inv_h2 * s * s;
        }
        symbol_.resize(grid.size());
        if (grid.dim == 1) {
            symbol_ = axis;
        } else {
            for (int iy = 0; iy < n; ++iy)
                for (int ix = 0; ix < n; ++ix)
                    symbol_[static_cast<std::size_t>(iy) * n + ix] = axis[ix] + axis[iy];
        }
    }

    void solve(double c, std::span<const double> rhs, std::span<double> out) {
        auto& fb = forward_.buffer();
        for (std::size_t i = 0; i < rhs.size(); ++i) fb[i] = rhs[i];
        forward_.execute();
        auto& bb = backward_.buffer();
        const double scale = 1.0 / static_cast<double>(rhs.size());
        for (std::size_t i = 0; i < fb.size(); ++i) bb[i] = fb[i] * (scale / (1.0 + c * symbol_[i]));
        backward_.execute();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = bb[i].real();
    }

    const GridSpec& grid() const { return grid_; }

private:
    GridSpec grid_;
    detail::FftPlan forward_;
    detail::FftPlan backward_;
    std::vector<double> symbol_;
};

}  // namespace mcas
