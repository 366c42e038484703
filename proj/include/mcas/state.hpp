#pragma once

#include <algorithm>
#include <cstdint>

#include "mcas/grid.hpp"

namespace mcas {

/// The unit of integrator progress: u(., t) with its cached total mass U(t).
struct SimState {
    Field u;
    double time = 0.0;
    double mass_u = 0.0;
    std::int64_t step_count = 0;

    static SimState from_field(Field u, double time = 0.0,
                               Quadrature rule = Quadrature::trapezoid) {
        const double mass = integrate(u, rule);
        return {std::move(u), time, mass, 0};
    }

    double min() const { return *std::min_element(u.values().begin(), u.values().end()); }
    double max() const { return *std::max_element(u.values().begin(), u.values().end()); }
};

}  // namespace mcas
