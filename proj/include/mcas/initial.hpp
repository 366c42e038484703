#pragma once

// Initial activator profiles.

#include <cmath>

#include <fmt/format.h>

#include "mcas/error.hpp"
#include "mcas/grid.hpp"

namespace mcas {

/// Gaussian seed A exp(-d^2 / (2 width^2)) with d the periodic distance to `center`
/// (x distance only in 2D), scaled so that its integral is mass_fraction * M.
struct InitialBump {
    double center = 1.0;
    double width = 0.5;
    double mass_fraction = 0.5;

    void validate(const GridSpec& g) const {
        if (!(center >= 0.0 && center < g.extent))
            throw ConfigError(fmt::format("initial.bump_center {} outside [0, {})", center, g.extent));
        if (!(width > 0.0)) throw ConfigError("initial.bump_width must be positive");
        if (!(mass_fraction > 0.0 && mass_fraction < 1.0))
            throw ConfigError(fmt::format("initial.bump_mass_fraction {} outside (0, 1)", mass_fraction));
    }
};

inline Field initial_bump(const GridSpec& g, const InitialBump& b, double total_mass,
                          Quadrature rule = Quadrature::trapezoid) {
    b.validate(g);
    auto shape = [&](double x) {
        double d = std::fabs(x - b.center);
        d = std::min(d, g.extent - d);
        return std::exp(-d * d / (2.0 * b.width * b.width));
    };
    Field f = g.dim == 1 ? Field::sample(g, shape)
                         : Field::sample(g, [&](double x, double) { return shape(x); });
    const double scale = b.mass_fraction * total_mass / integrate(f, rule);
    for (auto& v : f.values()) v *= scale;
    return f;
}

}  // namespace mcas
