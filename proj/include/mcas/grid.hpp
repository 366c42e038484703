#pragma once

// Uniform periodic grids on the 1D/2D torus, finite-difference Laplacian and quadrature.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <fmt/format.h>

#include "mcas/error.hpp"

namespace mcas {

inline constexpr double pi = 3.14159265358979323846;

/// Node-centered periodic grid: x_j = j*h, j = 0..N-1 on every axis.
struct GridSpec {
    int dim = 1;
    double extent = 10.0;
    int points = 256;

    static GridSpec line(double extent = 10.0, int points = 256) { return {1, extent, points}; }
    static GridSpec square(double extent = 10.0, int points = 128) { return {2, extent, points}; }

    void validate() const {
        if (dim != 1 && dim != 2)
            throw ConfigError(fmt::format("grid.dim must be 1 or 2, got {}", dim));
        if (!(extent > 0.0) || !std::isfinite(extent))
            throw ConfigError(fmt::format("grid.extent must be positive, got {}", extent));
        if (points < 16)
            throw ConfigError(fmt::format("grid.points must be >= 16, got {}", points));
        if (points % 2 != 0)
            throw ConfigError(fmt::format("grid.points must be even, got {}", points));
    }

    double spacing() const { return extent / points; }
    std::size_t size() const {
        return dim == 1 ? static_cast<std::size_t>(points)
                        : static_cast<std::size_t>(points) * static_cast<std::size_t>(points);
    }
    /// |T^d|
    double measure() const { return dim == 1 ? extent : extent * extent; }
    double coordinate(int j) const { return j * spacing(); }

    bool operator==(const GridSpec&) const = default;
};

/// Samples of a scalar function at the grid nodes. 2D storage is row-major with x fastest:
/// index = iy * N + ix.
class Field {
public:
    Field() = default;

    explicit Field(const GridSpec& grid, double value = 0.0)
        : grid_(grid), values_(grid.size(), value) {
        grid_.validate();
        check_finite();
    }

    Field(const GridSpec& grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        grid_.validate();
        if (values_.size() != grid_.size())
            throw ConfigError(fmt::format("field has {} values, grid needs {}", values_.size(),
                                          grid_.size()));
        check_finite();
    }

    /// Samples fn(x) (1D) or fn(x, y) (2D) at the nodes.
    template <typename Fn>
    static Field sample(const GridSpec& grid, Fn&& fn) {
        grid.validate();
        std::vector<double> v(grid.size());
        const int n = grid.points;
        if (grid.dim == 1) {
            if constexpr (std::is_invocable_r_v<double, Fn, double>) {
                for (int i = 0; i < n; ++i) v[i] = fn(grid.coordinate(i));
            } else {
                throw ConfigError("1D field needs a function of one coordinate");
            }
        } else {
            if constexpr (std::is_invocable_r_v<double, Fn, double, double>) {
                for (int iy = 0; iy < n; ++iy)
                    for (int ix = 0; ix < n; ++ix)
                        v[static_cast<std::size_t>(iy) * n + ix] =
                            fn(grid.coordinate(ix), grid.coordinate(iy));
            } else {
                throw ConfigError("2D field needs a function of two coordinates");
            }
        }
        return Field(grid, std::move(v));
    }

    const GridSpec& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double at(int ix, int iy) const {
        return values_[static_cast<std::size_t>(iy) * grid_.points + ix];
    }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    const std::vector<double>& data() const { return values_; }
    std::vector<double> take() && { return std::move(values_); }

    void check_finite() const {
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw IntegrityError(fmt::format("non-finite field value at node {}", i), 0.0);
    }

private:
    GridSpec grid_;
    std::vector<double> values_;
};

namespace detail {

inline std::size_t wrap(int i, int n) { return static_cast<std::size_t>((i % n + n) % n); }

/// out = Δ_h in; second-order central differences with periodic wrap.
inline void laplacian(const GridSpec& grid, std::span<const double> in, std::span<double> out) {
    const int n = grid.points;
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    if (grid.dim == 1) {
        out[0] = (in[n - 1] - 2.0 * in[0] + in[1]) * inv_h2;
        for (int i = 1; i < n - 1; ++i) out[i] = (in[i - 1] - 2.0 * in[i] + in[i + 1]) * inv_h2;
        out[n - 1] = (in[n - 2] - 2.0 * in[n - 1] + in[0]) * inv_h2;
        return;
    }
    for (int iy = 0; iy < n; ++iy) {
        const std::size_t row = static_cast<std::size_t>(iy) * n;
        const std::size_t up = wrap(iy + 1, n) * n;
        const std::size_t down = wrap(iy - 1, n) * n;
        for (int ix = 0; ix < n; ++ix) {
            const std::size_t c = row + ix;
            const double west = in[row + wrap(ix - 1, n)];
            const double east = in[row + wrap(ix + 1, n)];
            out[c] = (west + east + in[down + ix] + in[up + ix] - 4.0 * in[c]) * inv_h2;
        }
    }
}

}  // namespace detail

inline Field laplacian_apply(const Field& f) {
    std::vector<double> out(f.size());
    detail::laplacian(f.grid(), f.values(), out);
    return Field(f.grid(), std::move(out));
}

enum class Quadrature { trapezoid, simpson };

inline std::string to_string(Quadrature q) { return q == Quadrature::trapezoid ? "trapezoid" : "simpson"; }

/// Per-node weights of a closed periodic rule along one axis of n nodes with spacing h.
/// Periodic Simpson folds the two endpoint weights onto node 0: (2,4,2,4,...)*h/3.
inline std::vector<double> quadrature_weights(int n, double h, Quadrature rule) {
    if (n <= 0) throw ConfigError("quadrature needs at least one node");
    std::vector<double> w(static_cast<std::size_t>(n), h);
    if (rule == Quadrature::simpson) {
        if (n % 2 != 0)
            throw ConfigError(fmt::format("Simpson quadrature needs an even node count, got {}", n));
        for (int i = 0; i < n; ++i) w[i] = (i % 2 == 0 ? 2.0 : 4.0) * h / 3.0;
    }
    return w;
}

/// Integral over one periodic axis of raw samples.
inline double integrate(std::span<const double> values, double h,
                        Quadrature rule = Quadrature::trapezoid) {
    const auto w = quadrature_weights(static_cast<int>(values.size()), h, rule);
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += w[i] * values[i];
    return sum;
}

inline double integrate(const GridSpec& grid, std::span<const double> values,
                        Quadrature rule = Quadrature::trapezoid) {
    const int n = grid.points;
    const double h = grid.spacing();
    if (rule == Quadrature::trapezoid) {
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum * (grid.dim == 1 ? h : h * h);
    }
    const auto w = quadrature_weights(n, h, rule);
    if (grid.dim == 1) return integrate(values, h, rule);
    double sum = 0.0;
    for (int iy = 0; iy < n; ++iy) {
        double row = 0.0;
        for (int ix = 0; ix < n; ++ix) row += w[ix] * values[static_cast<std::size_t>(iy) * n + ix];
        sum += w[iy] * row;
    }
    return sum;
}

inline double integrate(const Field& f, Quadrature rule = Quadrature::trapezoid) {
    return integrate(f.grid(), f.values(), rule);
}

/// Discrete L2 norm sqrt(h^d * sum f^2).
inline double l2_norm(const Field& f) {
    double s = 0.0;
    for (double v : f.values()) s += v * v;
    const double h = f.grid().spacing();
    return std::sqrt(s * (f.grid().dim == 1 ? h : h * h));
}

}  // namespace mcas
