#pragma once

// Reaction terms F(u, v) = h(u) v - g(u) u, pheromone signals f(x), and the
// right-hand side of the nonlocal evolution equation
//
//   du/dt = (a u^2 + alpha f(x)) (M - U(t)) / |T^d| - b u + k Δu,   U(t) = ∫ u dx.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mcas/error.hpp"
#include "mcas/grid.hpp"
#include "mcas/state.hpp"

namespace mcas {

enum class PheromoneKind { heat_kernel, piecewise_linear, tabulated, zero };

inline std::string to_string(PheromoneKind k) {
    switch (k) {
        case PheromoneKind::heat_kernel: return "heat_kernel";
        case PheromoneKind::piecewise_linear: return "piecewise_linear";
        case PheromoneKind::tabulated: return "tabulated";
        case PheromoneKind::zero: return "zero";
    }
    return "?";
}

/// Time-independent external signal along the periodic cell boundary.
///
/// heat_kernel: trace on a circle of radius r = period/(2*pi) of the 2D heat kernel emitted
/// by a point source at distance `source_distance` from the cell center, evaluated at
/// time `source_time`:
///   f(x) = beta/(4 pi gamma t) * exp(-(L^2 + r^2 - 2 L r cos((x - x_peak)/r)) / (4 gamma t)).
/// piecewise_linear: triangle of height `height` at x_peak, falling linearly to zero at the
/// antipode. With period 10, x_peak 5, height 2 this is f = 2x/5 on [0,5], 4 - 2x/5 on [5,10].
/// tabulated: node values on a uniform periodic grid over [0, period), linearly interpolated.
struct PheromoneProfile {
    PheromoneKind kind = PheromoneKind::piecewise_linear;
    double beta = 1500.0;
    double gamma = 10.0;
    double source_time = 1.0;
    double source_distance = 10.0;
    double x_peak = 5.0;
    double height = 2.0;
    double period = 10.0;
    std::vector<double> table;

    double cell_radius() const { return period / (2.0 * pi); }

    void validate() const {
        if (!(period > 0.0)) throw ConfigError("pheromone period must be positive");
        if (x_peak < 0.0 || x_peak >= period)
            throw ConfigError(fmt::format("pheromone.x_peak {} outside [0, {})", x_peak, period));
        switch (kind) {
            case PheromoneKind::heat_kernel:
                if (!(beta >= 0.0) || !(gamma > 0.0) || !(source_time > 0.0) ||
                    !(source_distance >= 0.0))
                    throw ConfigError(
                        "heat_kernel pheromone needs beta >= 0, gamma > 0, source_time > 0, L >= 0");
                break;
            case PheromoneKind::piecewise_linear:
                if (!(height >= 0.0)) throw ConfigError("pheromone.height must be non-negative");
                break;
            case PheromoneKind::tabulated:
                if (table.size() < 2) throw ConfigError("tabulated pheromone needs >= 2 values");
                for (double v : table)
                    if (!std::isfinite(v) || v < 0.0)
                        throw ConfigError("tabulated pheromone values must be finite and >= 0");
                break;
            case PheromoneKind::zero: break;
        }
    }
};

inline double pheromone_eval(const PheromoneProfile& p, double x) {
    x = std::fmod(x, p.period);
    if (x < 0.0) x += p.period;
    switch (p.kind) {
        case PheromoneKind::heat_kernel: {
            const double r = p.cell_radius();
            const double L = p.source_distance;
            const double four_gt = 4.0 * p.gamma * p.source_time;
            const double dist2 = L * L + r * r - 2.0 * L * r * std::cos((x - p.x_peak) / r);
            return p.beta / (pi * four_gt) * std::exp(-dist2 / four_gt);
        }
        case PheromoneKind::piecewise_linear: {
            const double half = 0.5 * p.period;
            double d = std::fabs(x - p.x_peak);
            if (d > half) d = p.period - d;
            return p.height * (1.0 - d / half);
        }
        case PheromoneKind::tabulated: {
            const std::size_t n = p.table.size();
            const double s = x / p.period * static_cast<double>(n);
            const auto i = static_cast<std::size_t>(s) % n;
            const double w = s - std::floor(s);
            return (1.0 - w) * p.table[i] + w * p.table[(i + 1) % n];
        }
        case PheromoneKind::zero: return 0.0;
    }
    return 0.0;
}

enum class Variant { simplest, goryachev, otsuji, pheromone_modified };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::simplest: return "simplest";
        case Variant::goryachev: return "goryachev";
        case Variant::otsuji: return "otsuji";
        case Variant::pheromone_modified: return "pheromone_modified";
    }
    return "?";
}

/// Reaction parameters. Defaults are the dimensional cell-polarity values: a = 1 um^2,
/// b = 1 /s, k = 0.01 um^2/s, M = 10.
struct KineticsSpec {
    Variant variant = Variant::pheromone_modified;
    double a = 1.0;
    double b = 1.0;
    double c = 0.0;
    double alpha = 2.0;
    double k = 0.01;
    double M = 10.0;
    std::optional<PheromoneProfile> pheromone;

    void validate() const {
        // a = b = 0 is allowed so the same machinery runs the pure heat equation.
        if (!(a >= 0.0) || !(b >= 0.0) || !(k >= 0.0))
            throw ConfigError("kinetics a, b, k must be non-negative");
        if (!(M > 0.0)) throw ConfigError("kinetics.M must be positive");
        if (!(alpha >= 0.0)) throw ConfigError("kinetics.alpha must be non-negative");
        if (!std::isfinite(c)) throw ConfigError("kinetics.c must be finite");
        if (variant == Variant::pheromone_modified && !pheromone)
            throw ConfigError("pheromone_modified kinetics needs a pheromone profile");
        if (pheromone) pheromone->validate();
    }
};

/// F(u, v) with the pheromone signal already evaluated at the node.
inline double reaction_rate_with_signal(const KineticsSpec& s, double u, double v, double signal) {
    switch (s.variant) {
        case Variant::simplest: return s.a * u * u * v - s.b * u;
        case Variant::goryachev: return (s.a * u * u + s.c * u) * v - s.b * u;
        case Variant::otsuji: return v - s.b / (1.0 + u * u) * u;
        case Variant::pheromone_modified: return (s.a * u * u + s.alpha * signal) * v - s.b * u;
    }
    return 0.0;
}

inline double reaction_rate(const KineticsSpec& s, double u, double v, double x) {
    const double signal =
        s.variant == Variant::pheromone_modified && s.pheromone ? pheromone_eval(*s.pheromone, x) : 0.0;
    return reaction_rate_with_signal(s, u, v, signal);
}

enum class Diffusion { off, on };

struct RhsResult {
    Field rate;
    double substrate = 0.0;  // v(t) = (M - U)/|T^d|
    bool mass_overflow = false;
};

/// Kinetics bound to a grid: the pheromone is sampled once at the nodes.
class ReactionSystem {
public:
    ReactionSystem(const GridSpec& grid, KineticsSpec spec,
                   Quadrature quadrature = Quadrature::trapezoid)
        : grid_(grid), spec_(std::move(spec)), quadrature_(quadrature) {
        grid_.validate();
        spec_.validate();
        if (spec_.pheromone && spec_.pheromone->period != grid_.extent)
            throw ConfigError(fmt::format("pheromone period {} differs from grid extent {}",
                                          spec_.pheromone->period, grid_.extent));
        std::vector<double> sig(grid_.size(), 0.0);
        if (spec_.variant == Variant::pheromone_modified) {
            // 2D: the signal varies along x only.
            const int n = grid_.points;
            for (std::size_t i = 0; i < sig.size(); ++i)
                sig[i] = pheromone_eval(*spec_.pheromone, grid_.coordinate(static_cast<int>(i % n)));
        }
        signal_ = Field(grid_, std::move(sig));
    }

    const GridSpec& grid() const { return grid_; }
    const KineticsSpec& spec() const { return spec_; }
    const Field& signal() const { return signal_; }
    Quadrature quadrature() const { return quadrature_; }

    double mass(std::span<const double> u) const { return integrate(grid_, u, quadrature_); }
    double substrate(double mass) const { return (spec_.M - mass) / grid_.measure(); }

    ReactionSystem with_alpha(double alpha) const {
        ReactionSystem copy = *this;
        copy.spec_.alpha = alpha;
        return copy;
    }

    /// out = F(u, v(U)) node by node; v is computed once from the supplied mass.
    void reaction(std::span<const double> u, double mass, std::span<double> out) const {
        const double v = substrate(mass);
        const auto sig = signal_.values();
        for (std::size_t i = 0; i < u.size(); ++i)
            out[i] = reaction_rate_with_signal(spec_, u[i], v, sig[i]);
    }

    /// Upper bound on the spectral radius of the Jacobian of u -> F(u, v(U(u))):
    /// max_i |dF/du| plus the eigenvalue magnitude of the rank-one nonlocal coupling
    /// (dF/dv) (1/|T^d|) (quadrature weights)^T.
    double reaction_spectral_bound(std::span<const double> u, double mass) const {
        const double v = substrate(mass);
        const auto sig = signal_.values();
        double local = 0.0, coupling = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double x = u[i];
            double dfdu = 0.0, dfdv = 0.0;
            switch (spec_.variant) {
                case Variant::simplest:
                    dfdu = 2.0 * spec_.a * x * v - spec_.b;
                    dfdv = spec_.a * x * x;
                    break;
                case Variant::goryachev:
                    dfdu = (2.0 * spec_.a * x + spec_.c) * v - spec_.b;
                    dfdv = spec_.a * x * x + spec_.c * x;
                    break;
                case Variant::otsuji: {
                    const double q = 1.0 + x * x;
                    dfdu = -spec_.b * (1.0 - x * x) / (q * q);
                    dfdv = 1.0;
                    break;
                }
                case Variant::pheromone_modified:
                    dfdu = 2.0 * spec_.a * x * v - spec_.b;
                    dfdv = spec_.a * x * x + spec_.alpha * sig[i];
                    break;
            }
            local = std::max(local, std::fabs(dfdu));
            coupling += std::fabs(dfdv);
        }
        const double h = grid_.spacing();
        const double w = grid_.dim == 1 ? h : h * h;
        return local + coupling * w / grid_.measure();
    }

    /// out = F(u, v) + k Δu (diffusion on) with U recomputed from u.
    void rhs(std::span<const double> u, Diffusion diffusion, std::span<double> out,
             std::vector<double>& scratch) const {
        reaction(u, mass(u), out);
        if (diffusion == Diffusion::on && spec_.k != 0.0) {
            scratch.resize(u.size());
            detail::laplacian(grid_, u, scratch);
            for (std::size_t i = 0; i < u.size(); ++i) out[i] += spec_.k * scratch[i];
        }
    }

private:
    GridSpec grid_;
    KineticsSpec spec_;
    Quadrature quadrature_;
    Field signal_;
};

/// Full right-hand side at a state, using the state's cached U(t).
inline RhsResult rhs_eval(const ReactionSystem& sys, const SimState& state, Diffusion diffusion) {
    const auto& grid = sys.grid();
    std::vector<double> out(grid.size());
    sys.reaction(state.u.values(), state.mass_u, out);
    if (diffusion == Diffusion::on && sys.spec().k != 0.0) {
        std::vector<double> lap(grid.size());
        detail::laplacian(grid, state.u.values(), lap);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += sys.spec().k * lap[i];
    }
    RhsResult r{Field(grid, std::move(out)), sys.substrate(state.mass_u), state.mass_u > sys.spec().M};
    return r;
}

}  // namespace mcas
