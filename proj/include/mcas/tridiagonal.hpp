#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mcas/error.hpp"

namespace mcas {

/// Thomas algorithm for lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i].
/// lower[0] and upper[n-1] are ignored. No pivoting: the system must be diagonally dominant.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<const double> rhs,
                              std::span<double> x) {
    const std::size_t n = diag.size();
    if (n == 0) return;
    std::vector<double> c(n);
    double m = diag[0];
    c[0] = upper[0] / m;
    x[0] = rhs[0] / m;
    for (std::size_t i = 1; i < n; ++i) {
        m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
}

/// Periodic tridiagonal system: lower[0] couples x[0] to x[n-1] and upper[n-1] couples
/// x[n-1] to x[0]. Sherman-Morrison correction of two Thomas solves.
inline void solve_cyclic_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                     std::span<const double> upper, std::span<const double> rhs,
                                     std::span<double> x) {
    const std::size_t n = diag.size();
    if (n < 3) throw ConfigError("cyclic tridiagonal system needs at least 3 unknowns");
    const double alpha = upper[n - 1];  // A[n-1][0]
    const double beta = lower[0];       // A[0][n-1]
    const double gamma = -diag[0];

    std::vector<double> bb(diag.begin(), diag.end());
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    solve_tridiagonal(lower, bb, upper, rhs, x);

    std::vector<double> u(n, 0.0), z(n);
    u[0] = gamma;
    u[n - 1] = alpha;
    solve_tridiagonal(lower, bb, upper, u, z);

    const double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
}

/// (I - c*Δ_h) u = rhs on a periodic 1D grid with spacing h.
inline void solve_periodic_helmholtz_1d(double c, double h, std::span<const double> rhs,
                                        std::span<double> out) {
    const std::size_t n = rhs.size();
    const double off = -c / (h * h);
    std::vector<double> lower(n, off), diag(n, 1.0 - 2.0 * off), upper(n, off);
    solve_cyclic_tridiagonal(lower, diag, upper, rhs, out);
}

}  // namespace mcas
