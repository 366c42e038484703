#pragma once

// Observables on simulation states and traces.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <fmt/format.h>

#include "mcas/error.hpp"
#include "mcas/grid.hpp"
#include "mcas/spectral.hpp"
#include "mcas/state.hpp"

namespace mcas {

enum class CmMode { plain, circular };

/// plain: ∫ x f dx / ∫ f dx with x the node coordinate in [0, extent).
/// circular: arg of sum f_j exp(2 pi i x_j / extent), mapped to [0, extent); insensitive
/// to the periodic seam. In 2D both report the x coordinate.
inline double center_of_mass(const Field& f, CmMode mode) {
    const auto& g = f.grid();
    const int n = g.points;
    double total = 0.0, moment = 0.0, cs = 0.0, sn = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const int ix = static_cast<int>(i % n);
        const double x = g.coordinate(ix);
        const double phase = 2.0 * pi * ix / n;
        total += f[i];
        moment += x * f[i];
        cs += f[i] * std::cos(phase);
        sn += f[i] * std::sin(phase);
    }
    if (!(total > 0.0))
        throw UndefinedCenterOfMass(fmt::format("center of mass undefined: total mass {}", total * g.spacing()));
    if (mode == CmMode::plain) return moment / total;
    if (std::hypot(cs, sn) <= 1e-14 * total)
        throw UndefinedCenterOfMass("circular center of mass undefined: first Fourier moment vanishes");
    double x = std::atan2(sn, cs) / (2.0 * pi) * g.extent;
    if (x < 0.0) x += g.extent;
    if (x >= g.extent) x -= g.extent;
    return x;
}

struct Window {
    double lo = 1.0;
    double hi = 2.5;
};

struct SpeedFit {
    double speed = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int n_points = 0;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares. r^2 of an exactly constant response is 1.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2) throw InsufficientData("line fit needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw InsufficientData("line fit needs distinct abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

struct TraceRecord {
    double time = 0.0;
    double mass_u = 0.0;
    double cm_plain = 0.0;
    double cm_circular = 0.0;
    double u_min = 0.0;
    double u_max = 0.0;
    std::map<int, double> h_norms;
    int peak_count = 0;
};

/// Least-squares slope of cm_plain against time over the records with cm in the window
/// and time >= min_time (min_time skips the switch-on transient).
inline SpeedFit speed_fit(std::span<const TraceRecord> trace, Window window, double min_time = 0.0) {
    std::vector<double> t, x;
    for (const auto& r : trace)
        if (r.time >= min_time && r.cm_plain >= window.lo && r.cm_plain <= window.hi) {
            t.push_back(r.time);
            x.push_back(r.cm_plain);
        }
    if (t.size() < 10)
        throw InsufficientData(fmt::format("speed fit needs >= 10 records with cm in [{}, {}], got {}",
                                           window.lo, window.hi, t.size()));
    const auto line = fit_line(t, x);
    return {line.slope, line.intercept, line.r_squared, static_cast<int>(t.size())};
}

namespace detail {

inline int peak_count_1d(std::span<const double> v, double prominence) {
    const int n = static_cast<int>(v.size());
    auto at = [&](int i) { return v[static_cast<std::size_t>(((i % n) + n) % n)]; };
    int count = 0;
    for (int i = 0; i < n; ++i) {
        if (!(at(i) > at(i - 1) && at(i) >= at(i + 1))) continue;
        // Walk downhill to the adjacent minimum on each side.
        int l = i;
        for (int s = 0; s < n && at(l - 1) <= at(l); ++s) --l;
        int r = i;
        for (int s = 0; s < n && at(r + 1) <= at(r); ++s) ++r;
        if (at(i) - std::max(at(l), at(r)) > prominence) ++count;
    }
    return count;
}

// 2D: maxima of the 8-neighborhood rising more than `prominence` above the field minimum.
inline int peak_count_2d(const Field& f, double prominence) {
    const int n = f.grid().points;
    const double lo = *std::min_element(f.values().begin(), f.values().end());
    int count = 0;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const double c = f.at(ix, iy);
            bool is_max = c - lo > prominence;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1 && is_max; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const double nb = f.at(static_cast<int>(wrap(ix + dx, n)), static_cast<int>(wrap(iy + dy, n)));
                    // Ties count once: strict against neighbors that come earlier in storage order.
                    const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (earlier ? !(c > nb) : !(c >= nb)) is_max = false;
                }
            if (is_max) ++count;
        }
    return count;
}

}  // namespace detail

/// Local maxima (periodic neighbors) standing more than `prominence` above the higher of
/// the two adjacent minima.
inline int peak_count(const Field& f, double prominence) {
    if (!(prominence > 0.0)) throw ConfigError("peak prominence must be positive");
    if (f.grid().dim == 1) return detail::peak_count_1d(f.values(), prominence);
    return detail::peak_count_2d(f, prominence);
}

struct DiagnosticsConfig {
    std::vector<int> sobolev_orders{0, 1, 2};
    double prominence_fraction = 0.01;  // of max(u)
    Quadrature quadrature = Quadrature::trapezoid;
};

inline TraceRecord record(const SimState& s, const DiagnosticsConfig& cfg = {}) {
    TraceRecord r;
    r.time = s.time;
    r.mass_u = s.mass_u;
    r.cm_plain = center_of_mass(s.u, CmMode::plain);
    // A field with vanishing first Fourier moment (e.g. uniform) has no circular
    // position; report the plain one so every valid state yields a record.
    try {
        r.cm_circular = center_of_mass(s.u, CmMode::circular);
    } catch (const UndefinedCenterOfMass&) {
        r.cm_circular = r.cm_plain;
    }
    r.u_min = s.min();
    r.u_max = s.max();
    if (!cfg.sobolev_orders.empty()) {
        const auto modes = spectral_transform(s.u);
        for (int order : cfg.sobolev_orders) r.h_norms[order] = sobolev_norm(modes, order);
    }
    r.peak_count = r.u_max > 0.0 ? peak_count(s.u, cfg.prominence_fraction * r.u_max) : 0;
    return r;
}

}  // namespace mcas
