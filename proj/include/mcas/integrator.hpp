#pragma once

// Time advancement of SimState.
//
// Production stepper: variable-step IMEX BDF2 (SBDF2). Reaction terms, including the
// nonlocal factor (M - U), are extrapolated explicitly from the two previous levels;
// k*Δu is implicit. With step ratio w = dt_n / dt_{n-1}:
//
//   (1+2w)/(1+w) u+ - (1+w) u + w^2/(1+w) u- = dt [ (1+w) N(u) - w N(u-) ] + dt k Δ u+
//
// so each stage is one solve of (I - θ dt k Δ_h) u+ = rhs with θ = (1+w)/(1+2w):
// cyclic tridiagonal in 1D, Fourier-diagonal in 2D. The first step is IMEX Euler.
// Step size is controlled by step doubling: one step of dt against two of dt/2.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mcas/error.hpp"
#include "mcas/kinetics.hpp"
#include "mcas/spectral.hpp"
#include "mcas/state.hpp"
#include "mcas/tridiagonal.hpp"

namespace mcas {

enum class Method { imex_bdf2, explicit_rk4 };

inline std::string to_string(Method m) { return m == Method::imex_bdf2 ? "imex_bdf2" : "explicit_rk4"; }

struct StepperConfig {
    Method method = Method::imex_bdf2;
    double dt_init = 1e-3;
    double dt_min = 1e-12;
    double dt_max = 1.0;
    double rel_tol = 1e-6;
    double abs_tol = 1e-9;
    Diffusion diffusion = Diffusion::on;
    // Tolerated undershoot: min(u) >= -negativity_tol * max(u). Disabled for
    // signed test data such as a bare cosine mode.
    bool check_positivity = true;
    double negativity_tol = 1e-8;
    // The explicit part of SBDF2 is stable for lambda*dt in (-4/3, 0). Steps are capped at
    // stability_safety * (4/3) / rho with rho a bound on the reaction Jacobian's spectral
    // radius; without the cap the error controller limit-cycles at the stability boundary
    // and residuals stall far above round-off. A value <= 0 disables the cap.
    double stability_safety = 0.9;

    void validate() const {
        if (!(dt_min > 0.0) || !(dt_min <= dt_init) || !(dt_init <= dt_max))
            throw ConfigError(fmt::format("stepper needs 0 < dt_min <= dt_init <= dt_max, got {} {} {}",
                                          dt_min, dt_init, dt_max));
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw ConfigError("stepper tolerances must be positive");
    }
};

namespace detail {

inline void check_state(const SimState& s, const StepperConfig& cfg) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : s.u.values()) {
        if (!std::isfinite(v))
            throw IntegrityError(fmt::format("non-finite value in u at t = {}", s.time), s.time);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (cfg.check_positivity && lo < -cfg.negativity_tol * std::max(hi, 0.0))
        throw IntegrityError(
            fmt::format("negative undershoot min(u) = {} (max {}) at t = {}", lo, hi, s.time), s.time);
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

/// Adaptive IMEX BDF2 stepper. Keeps the multistep history between calls to step(),
/// so one instance advances one trajectory; call reset() before reusing it on an
/// unrelated state.
class ImexStepper {
public:
    ImexStepper(const ReactionSystem& system, StepperConfig cfg)
        : sys_(system), cfg_(cfg), proposed_dt_(cfg.dt_init) {
        cfg_.validate();
        if (sys_.grid().dim == 2) spectral_ = std::make_unique<SpectralHelmholtz>(sys_.grid());
    }

    void reset() {
        has_history_ = false;
        proposed_dt_ = cfg_.dt_init;
        last_dt_ = 0.0;
        rejected_ = 0;
    }

    double proposed_dt() const { return proposed_dt_; }
    std::int64_t rejected_steps() const { return rejected_; }

    /// One accepted step, never passing t_stop; lands on t_stop exactly when it is reached.
    SimState step(const SimState& s, double t_stop = std::numeric_limits<double>::infinity()) {
        const std::size_t n = s.u.size();
        const auto u0 = s.u.values();
        // A state this stepper did not produce restarts the history with IMEX Euler.
        if (has_history_ && current_time_ != s.time) has_history_ = false;
        std::vector<double> n0(n);
        sys_.reaction(u0, sys_.mass(u0), n0);

        std::vector<double> full(n), half(n), nhalf(n), two(n);
        double dt = std::min(proposed_dt_, cfg_.dt_max);
        if (has_history_) dt = std::min(dt, 2.0 * last_dt_);
        if (cfg_.stability_safety > 0.0) {
            const double rho = sys_.reaction_spectral_bound(u0, s.mass_u);
            if (rho > 0.0) dt = std::min(dt, cfg_.stability_safety * (4.0 / 3.0) / rho);
        }
        for (;;) {
            bool lands = false;
            const double remaining = t_stop - s.time;
            double used = dt;
            if (remaining <= used * (1.0 + 1e-12)) {
                used = remaining;
                lands = true;
            } else if (remaining < 2.0 * used) {
                used = 0.5 * remaining;
            }
            if (!(used > 0.0)) throw ConfigError("step requested with non-positive time left");

            // One step of `used`, and two of `used/2`.
            if (has_history_) {
                stage_bdf2(u0, n0, prev_full_u_, prev_full_n_, last_dt_, used, full);
                stage_bdf2(u0, n0, prev_half_u_, prev_half_n_, 0.5 * last_dt_, 0.5 * used, half);
            } else {
                stage_euler(u0, n0, used, full);
                stage_euler(u0, n0, 0.5 * used, half);
            }
            sys_.reaction(half, sys_.mass(half), nhalf);
            stage_bdf2(half, nhalf, u0, n0, 0.5 * used, 0.5 * used, two);

            double err = std::numeric_limits<double>::infinity();
            if (detail::all_finite(full) && detail::all_finite(two)) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double sc =
                        cfg_.abs_tol + cfg_.rel_tol * std::max(std::fabs(full[i]), std::fabs(two[i]));
                    const double e = (two[i] - full[i]) / sc;
                    acc += e * e;
                }
                // Richardson: the half-step pair is 2^p - 1 = 3 times closer (BDF2),
                // 1 time for the Euler start.
                err = std::sqrt(acc / static_cast<double>(n)) / (has_history_ ? 3.0 : 1.0);
            }

            if (err <= 1.0) {
                const double factor =
                    err == 0.0 ? 2.0 : std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.2, 2.0);
                double next = used * factor;
                if (used < dt && factor >= 1.0) next = std::max(next, dt);
                proposed_dt_ = std::clamp(next, cfg_.dt_min, cfg_.dt_max);

                prev_full_u_.assign(u0.begin(), u0.end());
                prev_full_n_ = std::move(n0);
                prev_half_u_ = half;
                prev_half_n_ = std::move(nhalf);
                last_dt_ = used;
                has_history_ = true;

                SimState out{Field(s.u.grid(), std::move(two)), lands ? t_stop : s.time + used, 0.0,
                             s.step_count + 1};
                out.mass_u = sys_.mass(out.u.values());
                current_time_ = out.time;
                detail::check_state(out, cfg_);
                return out;
            }

            ++rejected_;
            const double factor =
                std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.2, 0.9) : 0.25;
            dt = used * factor;
            if (dt < cfg_.dt_min)
                throw StiffFailure(
                    fmt::format("step size {} fell below dt_min = {} at t = {}", dt, cfg_.dt_min, s.time),
                    s.time, s.u.data());
        }
    }

private:
    void stage_euler(std::span<const double> u0, std::span<const double> n0, double dt,
                     std::span<double> out) {
        std::vector<double> rhs(u0.size());
        for (std::size_t i = 0; i < u0.size(); ++i) rhs[i] = u0[i] + dt * n0[i];
        implicit_solve(dt, rhs, out);
    }

    // u0 at t_n, um at t_{n-1} = t_n - dt_prev.
    void stage_bdf2(std::span<const double> u0, std::span<const double> n0, std::span<const double> um,
                    std::span<const double> nm, double dt_prev, double dt, std::span<double> out) {
        const double w = dt / dt_prev;
        const double g = (1.0 + 2.0 * w) / (1.0 + w);
        const double c0 = (1.0 + w) / g;
        const double cm = -w * w / (1.0 + w) / g;
        std::vector<double> rhs(u0.size());
        for (std::size_t i = 0; i < u0.size(); ++i)
            rhs[i] = c0 * u0[i] + cm * um[i] + dt / g * ((1.0 + w) * n0[i] - w * nm[i]);
        implicit_solve(dt / g, rhs, out);
    }

    // (I - dt_eff k Δ_h) out = rhs
    void implicit_solve(double dt_eff, std::span<const double> rhs, std::span<double> out) {
        const double c = dt_eff * sys_.spec().k;
        if (cfg_.diffusion == Diffusion::off || c == 0.0) {
            std::copy(rhs.begin(), rhs.end(), out.begin());
            return;
        }
        if (spectral_)
            spectral_->solve(c, rhs, out);
        else
            solve_periodic_helmholtz_1d(c, sys_.grid().spacing(), rhs, out);
    }

    const ReactionSystem& sys_;
    StepperConfig cfg_;
    std::unique_ptr<SpectralHelmholtz> spectral_;

    bool has_history_ = false;
    // Levels at t - last_dt and t - last_dt/2, with their reaction terms.
    std::vector<double> prev_full_u_, prev_full_n_;
    std::vector<double> prev_half_u_, prev_half_n_;
    double last_dt_ = 0.0;
    double current_time_ = std::numeric_limits<double>::quiet_NaN();
    double proposed_dt_;
    std::int64_t rejected_ = 0;
};

/// Classical RK4 of the full method-of-lines system with U recomputed at every stage.
/// Step size is cfg.dt_init, or `dt` when given (used to land on sample times).
inline SimState step_explicit_rk4(const SimState& s, const ReactionSystem& sys,
                                  const StepperConfig& cfg, std::optional<double> dt_override = {}) {
    const double dt = dt_override.value_or(cfg.dt_init);
    const std::size_t n = s.u.size();
    const auto u = s.u.values();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), scratch;
    sys.rhs(u, cfg.diffusion, k1, scratch);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
    sys.rhs(tmp, cfg.diffusion, k2, scratch);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
    sys.rhs(tmp, cfg.diffusion, k3, scratch);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + dt * k3[i];
    sys.rhs(tmp, cfg.diffusion, k4, scratch);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!detail::all_finite(tmp))
        throw IntegrityError(fmt::format("explicit RK4 produced non-finite values at t = {}", s.time + dt),
                             s.time + dt);
    std::vector<double> values(std::move(tmp));
    SimState out{Field(s.u.grid(), std::move(values)), s.time + dt, 0.0, s.step_count + 1};
    out.mass_u = sys.mass(out.u.values());
    return out;
}

/// Called at t0, t0 + every, t0 + 2*every, ... up to the end of a run.
struct Observer {
    double every = 0.0;
    std::function<void(const SimState&)> on_sample;
};

namespace detail {

struct SampleClock {
    double start;
    double every;
    std::int64_t next = 0;
    double time() const { return start + static_cast<double>(next) * every; }
};

}  // namespace detail

/// Advances to exactly t_end, invoking observers at their sample times (both endpoints
/// included when t_end - t0 is a multiple of the interval).
inline SimState run_until(SimState state, const ReactionSystem& sys, const StepperConfig& cfg,
                          double t_end, std::span<const Observer> observers = {}) {
    cfg.validate();
    if (t_end < state.time)
        throw ConfigError(fmt::format("run_until: t_end {} precedes state time {}", t_end, state.time));
    const double t0 = state.time;
    const double span = t_end - t0;
    std::vector<detail::SampleClock> clocks;
    for (const auto& o : observers) {
        if (!(o.every > 0.0)) throw ConfigError("observer interval must be positive");
        clocks.push_back({t0, o.every, 0});
    }
    const double slack = 1e-9;
    auto fire = [&] {
        for (std::size_t i = 0; i < observers.size(); ++i) {
            auto& c = clocks[i];
            while (static_cast<double>(c.next) * c.every <= span * (1.0 + slack) + slack &&
                   c.time() <= state.time + slack * std::max(1.0, c.every)) {
                observers[i].on_sample(state);
                ++c.next;
            }
        }
    };
    auto next_event = [&] {
        double t = t_end;
        for (const auto& c : clocks)
            if (static_cast<double>(c.next) * c.every <= span * (1.0 + slack) + slack)
                t = std::min(t, std::min(c.time(), t_end));
        return t;
    };

    detail::check_state(state, cfg);
    fire();
    if (cfg.method == Method::imex_bdf2) {
        ImexStepper stepper(sys, cfg);
        while (state.time < t_end) {
            const double stop = next_event();
            state = stepper.step(state, stop);
            fire();
        }
    } else {
        while (state.time < t_end) {
            const double stop = next_event();
            const double remaining = stop - state.time;
            const bool lands = remaining <= cfg.dt_init * (1.0 + 1e-9);
            state = step_explicit_rk4(state, sys, cfg, lands ? remaining : cfg.dt_init);
            if (lands) state.time = stop;
            detail::check_state(state, cfg);
            fire();
        }
    }
    return state;
}

struct EquilibrateOptions {
    double tol = 1e-8;
    double cap = 50000.0;
    double history_every = 10.0;  // residual history sampling interval, s
};

struct EquilibrationResult {
    SimState state;
    double residual = 0.0;
    std::vector<ResidualSample> history;
};

/// max |rhs(u)|
inline double residual_norm(const ReactionSystem& sys, const SimState& s, Diffusion diffusion) {
    std::vector<double> out(s.u.size()), scratch;
    sys.rhs(s.u.values(), diffusion, out, scratch);
    double r = 0.0;
    for (double v : out) r = std::max(r, std::fabs(v));
    return r;
}

/// Runs the pheromone-free system (alpha forced to 0) until max |rhs| < tol.
inline EquilibrationResult equilibrate(SimState state, const ReactionSystem& system,
                                       const StepperConfig& cfg, EquilibrateOptions opt = {}) {
    const ReactionSystem sys = system.with_alpha(0.0);
    const double t0 = state.time;
    EquilibrationResult result;
    double residual = residual_norm(sys, state, cfg.diffusion);
    result.history.push_back({state.time, residual});
    double next_record = t0 + opt.history_every;

    ImexStepper stepper(sys, cfg);
    while (residual >= opt.tol) {
        if (state.time - t0 > opt.cap)
            throw NonConvergence(fmt::format("equilibration did not reach residual {} within {} s "
                                             "(residual {} at t = {})",
                                             opt.tol, opt.cap, residual, state.time),
                                 std::move(result.history));
        if (cfg.method == Method::imex_bdf2) {
            state = stepper.step(state);
        } else {
            state = step_explicit_rk4(state, sys, cfg);
            detail::check_state(state, cfg);
        }
        residual = residual_norm(sys, state, cfg.diffusion);
        if (state.time >= next_record) {
            result.history.push_back({state.time, residual});
            next_record += opt.history_every;
        }
    }
    if (result.history.back().time != state.time) result.history.push_back({state.time, residual});
    result.state = std::move(state);
    result.residual = residual;
    return result;
}

}  // namespace mcas
