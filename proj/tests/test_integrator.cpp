#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mcas/diagnostics.hpp"
#include "mcas/initial.hpp"
#include "mcas/integrator.hpp"

using namespace mcas;

namespace {

KineticsSpec table1(double alpha) {
    KineticsSpec s;
    s.alpha = alpha;
    s.pheromone = PheromoneProfile{};
    return s;
}

KineticsSpec heat_equation() {
    KineticsSpec s;
    s.variant = Variant::simplest;
    s.a = 0.0;
    s.b = 0.0;
    return s;
}

Field cosine(const GridSpec& g) {
    return Field::sample(g, [&](double x) { return std::cos(2.0 * pi * x / g.extent); });
}

// Amplitude of the first cosine mode.
double mode_one_amplitude(const Field& f) { return 2.0 * spectral_transform(f).modes[1].real(); }

double relative_l2(const Field& a, const Field& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ref[i]) * (a[i] - ref[i]);
        den += ref[i] * ref[i];
    }
    return std::sqrt(num / den);
}

StepperConfig signed_data() {
    StepperConfig c;
    c.check_positivity = false;
    return c;
}

StepperConfig rk4(double dt) {
    StepperConfig c;
    c.method = Method::explicit_rk4;
    c.dt_init = dt;
    c.dt_min = std::min(c.dt_min, dt);
    return c;
}

const SimState& equilibrium_256() {
    static const SimState s = [] {
        const auto g = GridSpec::line();
        const ReactionSystem sys(g, table1(0.0));
        auto eq = equilibrate(SimState::from_field(initial_bump(g, {}, 10.0)), sys, {}).state;
        eq.time = 0.0;
        eq.step_count = 0;
        return eq;
    }();
    return s;
}

}  // namespace

TEST(StepperConfig, Validation) {
    StepperConfig c;
    EXPECT_NO_THROW(c.validate());
    c.dt_min = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.rel_tol = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Imex, PureDiffusionEigenmodeDecay) {
    const auto g = GridSpec::line();
    const ReactionSystem sys(g, heat_equation());
    const double t = 100.0;
    const auto out = run_until(SimState::from_field(cosine(g)), sys, signed_data(), t);
    const double expected = std::exp(-0.01 * std::pow(2.0 * pi / 10.0, 2) * t);
    EXPECT_NEAR(mode_one_amplitude(out.u) / expected, 1.0, 1e-4);
}

TEST(Imex, PureDiffusionTwoDimensional) {
    const auto g = GridSpec::square(10.0, 32);
    const ReactionSystem sys(g, heat_equation());
    const auto u0 = Field::sample(g, [](double x, double) { return std::cos(2.0 * pi * x / 10.0); });
    const auto out = run_until(SimState::from_field(u0), sys, signed_data(), 50.0);
    const double h = g.spacing();
    // Exact decay of the semi-discrete system.
    const double lam = 4.0 / (h * h) * std::pow(std::sin(pi * h / 10.0), 2);
    const double expected = std::exp(-0.01 * lam * 50.0);
    for (std::size_t i = 0; i < u0.size(); ++i) EXPECT_NEAR(out.u[i], expected * u0[i], 1e-6);
}

TEST(Rk4, PureDiffusionEigenmodeDecay) {
    const auto g = GridSpec::line();
    const ReactionSystem sys(g, heat_equation());
    auto cfg = rk4(1e-3);
    cfg.check_positivity = false;
    const double k2 = std::pow(2.0 * pi / 10.0, 2);
    const auto out = run_until(SimState::from_field(cosine(g)), sys, cfg, 1.0);
    EXPECT_NEAR(mode_one_amplitude(out.u) / std::exp(-0.01 * k2), 1.0, 1e-6);

    // Longer horizon against the semi-discrete decay rate, isolating the time error.
    const double h = g.spacing();
    const double lam = 4.0 / (h * h) * std::pow(std::sin(pi * h / 10.0), 2);
    const auto longer = run_until(SimState::from_field(cosine(g)), sys, cfg, 20.0);
    EXPECT_NEAR(mode_one_amplitude(longer.u) / std::exp(-0.01 * lam * 20.0), 1.0, 1e-10);
}

TEST(Integrator, ZeroStateStaysZero) {
    const auto g = GridSpec::line();
    PheromoneProfile zero;
    zero.kind = PheromoneKind::zero;
    auto spec = table1(2.0);
    spec.pheromone = zero;
    const ReactionSystem sys(g, spec);
    for (const auto& cfg : {StepperConfig{}, rk4(1e-2)}) {
        const auto out = run_until(SimState::from_field(Field(g, 0.0)), sys, cfg, 100.0);
        for (double v : out.u.values()) EXPECT_EQ(v, 0.0);
        EXPECT_EQ(out.time, 100.0);
    }
}

TEST(Rk4, FourthOrderOnLinearDecay) {
    const auto g = GridSpec::line(10.0, 16);
    auto spec = heat_equation();
    spec.b = 1.0;
    const ReactionSystem sys(g, spec);
    std::vector<double> errs;
    for (double dt : {0.2, 0.1, 0.05}) {
        auto cfg = rk4(dt);
        cfg.diffusion = Diffusion::off;
        const auto out = run_until(SimState::from_field(Field(g, 1.0)), sys, cfg, 2.0);
        errs.push_back(std::fabs(out.u[0] - std::exp(-2.0)));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) EXPECT_NEAR(std::log2(errs[i - 1] / errs[i]), 4.0, 0.15);
}

TEST(Imex, OneStepMatchesRk4Oracle) {
    const auto& s0 = equilibrium_256();
    const ReactionSystem sys(s0.u.grid(), table1(2.0));
    ImexStepper stepper(sys, {});
    const auto one = stepper.step(s0);
    const auto oracle = run_until(s0, sys, rk4(1e-4), one.time);
    EXPECT_LT(relative_l2(one.u, oracle.u), 1e-5);
}

TEST(Imex, HundredSecondsMatchRk4Oracle) {
    const auto& s0 = equilibrium_256();
    const ReactionSystem sys(s0.u.grid(), table1(2.0));
    const auto imex = run_until(s0, sys, {}, 100.0);
    const auto oracle = run_until(s0, sys, rk4(1e-4), 100.0);
    EXPECT_LT(relative_l2(imex.u, oracle.u), 1e-5);
}

TEST(Imex, CachedMassAndPositivityAlongRun) {
    const auto& s0 = equilibrium_256();
    const ReactionSystem sys(s0.u.grid(), table1(3.0));
    int samples = 0;
    const Observer obs{1.0, [&](const SimState& s) {
                           ++samples;
                           EXPECT_NEAR(s.mass_u, integrate(s.u), 1e-9 * s.mass_u);
                           EXPECT_LE(s.mass_u, 10.0 + 1e-6);
                           EXPECT_GE(s.min(), -1e-8 * s.max());
                       }};
    run_until(s0, sys, {}, 200.0, std::span(&obs, 1));
    EXPECT_EQ(samples, 201);
}

TEST(RunUntil, IdentityAtCurrentTime) {
    const auto& s0 = equilibrium_256();
    const ReactionSystem sys(s0.u.grid(), table1(2.0));
    int samples = 0;
    const Observer obs{10.0, [&](const SimState&) { ++samples; }};
    const auto out = run_until(s0, sys, {}, s0.time, std::span(&obs, 1));
    EXPECT_EQ(out.time, s0.time);
    EXPECT_EQ(out.step_count, s0.step_count);
    for (std::size_t i = 0; i < out.u.size(); ++i) EXPECT_EQ(out.u[i], s0.u[i]);
    EXPECT_EQ(samples, 1);
    EXPECT_THROW(run_until(s0, sys, {}, s0.time - 1.0), ConfigError);
}

TEST(RunUntil, SamplesIncludeBothEndpoints) {
    const auto& s0 = equilibrium_256();
    const ReactionSystem sys(s0.u.grid(), table1(2.0));
    for (const auto& cfg : {StepperConfig{}, rk4(1e-2)}) {
        std::vector<double> times;
        const Observer obs{10.0, [&](const SimState& s) { times.push_back(s.time); }};
        const auto out = run_until(s0, sys, cfg, 100.0, std::span(&obs, 1));
        ASSERT_EQ(times.size(), 11u);
        for (int i = 0; i <= 10; ++i) EXPECT_EQ(times[i], 10.0 * i);
        EXPECT_EQ(out.time, 100.0);
    }
}

TEST(Equilibrate, SteadyStateReturnsImmediately) {
    const auto& s0 = equilibrium_256();
    const ReactionSystem sys(s0.u.grid(), table1(2.0));
    const auto r = equilibrate(s0, sys, {});
    EXPECT_EQ(r.state.time, s0.time);
    EXPECT_EQ(r.state.step_count, s0.step_count);
    EXPECT_LT(r.residual, 1e-8);
    EXPECT_EQ(r.history.size(), 1u);
}

TEST(Equilibrate, BumpConvergesToSinglePeak) {
    const auto g = GridSpec::line();
    const ReactionSystem sys(g, table1(2.0));  // alpha is forced to zero
    const auto r = equilibrate(SimState::from_field(initial_bump(g, {}, 10.0)), sys, {});
    EXPECT_LT(r.residual, 1e-8);
    EXPECT_LT(residual_norm(sys.with_alpha(0.0), r.state, Diffusion::on), 1e-8);
    EXPECT_EQ(peak_count(r.state.u, 0.01 * r.state.max()), 1);
    EXPECT_LT(r.state.mass_u, 10.0);
    EXPECT_NEAR(center_of_mass(r.state.u, CmMode::circular), 1.0, g.spacing());
    EXPECT_GE(r.history.size(), 2u);
}

TEST(Equilibrate, UniformStartDecaysToTrivialState) {
    // u = c with 10c = M/2: c^2 (M - 10c)/10 - c < 0, so the flat state has no peak to grow.
    const auto g = GridSpec::line();
    const ReactionSystem sys(g, table1(0.0));
    const auto r = equilibrate(SimState::from_field(Field(g, 0.5)), sys, {});
    EXPECT_LT(r.state.max(), 1e-6);
    EXPECT_EQ(peak_count(r.state.u, 1e-3), 0);
}

TEST(Equilibrate, CapExceededCarriesHistory) {
    const auto g = GridSpec::line();
    const ReactionSystem sys(g, table1(0.0));
    EquilibrateOptions opt;
    opt.cap = 5.0;
    opt.history_every = 1.0;
    try {
        equilibrate(SimState::from_field(initial_bump(g, {}, 10.0)), sys, {}, opt);
        FAIL() << "expected NonConvergence";
    } catch (const NonConvergence& e) {
        EXPECT_GE(e.history().size(), 5u);
        EXPECT_GT(e.history().back().residual, 1e-8);
    }
}

TEST(Equilibrate, GridConvergenceIsSecondOrder) {
    std::vector<Field> eq;
    for (int n : {256, 512, 1024, 2048, 4096, 8192}) {
        const auto g = GridSpec::line(10.0, n);
        const ReactionSystem sys(g, table1(0.0));
        eq.push_back(equilibrate(SimState::from_field(initial_bump(g, {}, 10.0)), sys, {}).state.u);
    }
    std::vector<double> diffs;
    for (std::size_t k = 0; k + 1 < eq.size(); ++k) {
        const auto& coarse = eq[k];
        const auto& fine = eq[k + 1];
        double d2 = 0.0;
        for (std::size_t i = 0; i < coarse.size(); ++i) d2 += std::pow(coarse[i] - fine[2 * i], 2);
        diffs.push_back(std::sqrt(d2 * coarse.grid().spacing()));
    }
    for (std::size_t k = 1; k < diffs.size(); ++k) EXPECT_NEAR(diffs[k - 1] / diffs[k], 4.0, 0.4) << k;
    EXPECT_LT(diffs.back(), 1e-3);
}

TEST(Imex, ToleranceHalvingStaysWithinCoarseTolerance) {
    const auto& s0 = equilibrium_256();
    const ReactionSystem sys(s0.u.grid(), table1(2.0));
    StepperConfig coarse;
    StepperConfig fine;
    fine.rel_tol /= 2.0;
    fine.abs_tol /= 2.0;
    const auto a = run_until(s0, sys, coarse, 1000.0);
    const auto b = run_until(s0, sys, fine, 1000.0);
    for (std::size_t i = 0; i < a.u.size(); ++i)
        EXPECT_LE(std::fabs(a.u[i] - b.u[i]), coarse.abs_tol + coarse.rel_tol * std::fabs(b.u[i])) << i;
}

TEST(Imex, DeterministicReplay) {
    const auto& s0 = equilibrium_256();
    const ReactionSystem sys(s0.u.grid(), table1(2.0));
    const auto a = run_until(s0, sys, {}, 50.0);
    const auto b = run_until(s0, sys, {}, 50.0);
    EXPECT_EQ(a.step_count, b.step_count);
    for (std::size_t i = 0; i < a.u.size(); ++i) EXPECT_EQ(a.u[i], b.u[i]);
}

TEST(Imex, TwoDimensionalBumpStaysFiniteAndConserving) {
    const auto g = GridSpec::square(10.0, 32);
    const ReactionSystem sys(g, table1(2.0));
    const auto out = run_until(SimState::from_field(initial_bump(g, {}, 10.0)), sys, {}, 20.0);
    EXPECT_LE(out.mass_u, 10.0 + 1e-6);
    EXPECT_GE(out.min(), -1e-8 * out.max());
}

TEST(Imex, StepSizeUnderflowIsStiffFailure) {
    const auto& s0 = equilibrium_256();
    const ReactionSystem sys(s0.u.grid(), table1(2.0));
    StepperConfig cfg;
    cfg.rel_tol = 1e-16;
    cfg.abs_tol = 1e-20;
    cfg.dt_min = 1e-4;
    try {
        run_until(s0, sys, cfg, 10.0);
        FAIL() << "expected StiffFailure";
    } catch (const StiffFailure& e) {
        EXPECT_GE(e.time(), 0.0);
        EXPECT_EQ(e.state().size(), s0.u.size());
    }
}

TEST(Integrator, NegativeUndershootIsIntegrityError) {
    const auto g = GridSpec::line();
    const ReactionSystem sys(g, table1(2.0));
    auto u = initial_bump(g, {}, 10.0);
    u[100] = -1e-3;
    EXPECT_THROW(run_until(SimState::from_field(u), sys, {}, 1.0), IntegrityError);
    EXPECT_THROW(run_until(SimState::from_field(u), sys, rk4(1e-3), 1.0), IntegrityError);
}

TEST(Rk4, ExplicitInstabilityIsIntegrityError) {
    const auto g = GridSpec::line();
    const ReactionSystem sys(g, heat_equation());
    auto cfg = rk4(1.0);  // far beyond the explicit diffusion limit
    cfg.check_positivity = false;
    EXPECT_THROW(run_until(SimState::from_field(cosine(g)), sys, cfg, 1000.0), IntegrityError);
}
