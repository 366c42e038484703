#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mcas/harness.hpp"

using namespace mcas;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / "mcas_test_harness" / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig config(std::initializer_list<const char*> overrides) {
    ConfigTable t;
    for (const char* o : overrides) t.apply_override(o);
    return build_config(t);
}

}  // namespace

TEST(Io, TraceRoundTrip) {
    TraceRecord r;
    r.time = 10.0;
    r.mass_u = 9.123456789012345;
    r.cm_plain = 1.0 / 3.0;
    r.cm_circular = 2.0 / 3.0;
    r.u_min = 1e-300;
    r.u_max = 23.5;
    r.h_norms = {{0, 1.0}, {1, 2.0}, {2, 3.0}};
    r.peak_count = 1;
    const auto dir = scratch("io");
    write_trace(dir / "t.csv", std::vector<TraceRecord>{r, r});
    const auto back = read_trace(dir / "t.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].mass_u, r.mass_u);
    EXPECT_EQ(back[0].cm_plain, r.cm_plain);
    EXPECT_EQ(back[0].u_min, r.u_min);
    EXPECT_EQ(back[0].h_norms.at(2), 3.0);
    EXPECT_EQ(back[0].peak_count, 1);
}

TEST(Io, TraceParseErrorNamesTheRow) {
    const auto dir = scratch("io_bad");
    detail::write_text(dir / "t.csv", std::string(trace_header) + "\n1,2,3,4,5,6,7,8,1\n1,2,x,4,5,6,7,8,1\n");
    try {
        read_trace(dir / "t.csv");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("cm_plain"), std::string::npos) << e.what();
    }
    detail::write_text(dir / "u.csv", "time,mass\n");
    EXPECT_THROW(read_trace(dir / "u.csv"), ParseError);
    detail::write_text(dir / "v.csv", std::string(trace_header) + "\n1,2,3\n");
    EXPECT_THROW(read_trace(dir / "v.csv"), ParseError);
}

TEST(Io, StateRoundTripIsExact) {
    const auto g = GridSpec::square(7.0, 16);
    const auto f = Field::sample(g, [](double x, double y) { return std::exp(std::sin(x) * std::cos(y)) / 3.0; });
    SimState s = SimState::from_field(f, 12.5);
    s.step_count = 42;
    const auto dir = scratch("state");
    write_state(dir / "s.txt", s);
    const auto back = read_state(dir / "s.txt");
    EXPECT_EQ(back.u.grid(), g);
    EXPECT_EQ(back.time, 12.5);
    EXPECT_EQ(back.mass_u, s.mass_u);
    EXPECT_EQ(back.step_count, 42);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(back.u[i], f[i]);
}

TEST(Harness, RunWritesArtifactsAndIsDeterministic) {
    const auto cfg = config({"run.t_end=300"});
    const auto a = scratch("run_a"), b = scratch("run_b");
    const auto r = run_experiment(cfg, a);
    run_experiment(cfg, b);
    for (const char* f : {"trace.csv", "run.json", "initial_state.txt", "final_state.txt", "pheromone.csv",
                          "residual_history.csv"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    EXPECT_EQ(r.trace.size(), 31u);
    EXPECT_EQ(r.trace.front().time, 0.0);
    EXPECT_EQ(r.trace.back().time, 300.0);
    EXPECT_EQ(r.final.time, 300.0);
    EXPECT_LT(r.summary.equilibration_residual, 1e-8);
    EXPECT_GT(r.summary.cm_end, r.summary.cm_start);
    const auto back = read_trace(a / "trace.csv");
    EXPECT_EQ(back.back().cm_plain, r.trace.back().cm_plain);
}

TEST(Harness, NoPheromoneMeansNoDrift) {
    const auto cfg = config({"kinetics.alpha=0"});
    const auto r = run_experiment(cfg, scratch("alpha0"));
    EXPECT_LT(std::fabs(r.summary.cm_end - r.summary.cm_start), cfg.grid.spacing());
    EXPECT_EQ(r.trace.back().time, 10000.0);
}

TEST(Harness, EquilibrationFailureLeavesManifest) {
    const auto cfg = config({"equilibrate.cap=5", "equilibrate.history_every=1"});
    const auto dir = scratch("eqfail");
    EXPECT_THROW(run_experiment(cfg, dir), NonConvergence);
    EXPECT_TRUE(fs::exists(dir / "error.json"));
    EXPECT_TRUE(fs::exists(dir / "residual_history.csv"));
    const auto j = json::parse(slurp(dir / "error.json"));
    EXPECT_EQ(j.at("kind"), "non_convergence");
    EXPECT_EQ(j.at("stage"), "equilibrate");
}

TEST(Harness, StepperFailureLeavesPartialTrace) {
    // The seed equilibrates with the pheromone off; switching on a huge alpha then
    // drives the stability limit below dt_min.
    const auto cfg = config({"kinetics.alpha=1e9", "run.t_end=50"});
    const auto eq = equilibrate_seed(cfg);
    std::vector<TraceRecord> trace;
    EXPECT_THROW(record_run(cfg, cfg.system(), eq.state, eq.state.time + 50.0, trace), StiffFailure);
    EXPECT_GE(trace.size(), 1u);

    const auto dir = scratch("stifffail");
    EXPECT_THROW(run_experiment(cfg, dir), StiffFailure);
    EXPECT_TRUE(fs::exists(dir / "trace.csv"));
    EXPECT_TRUE(fs::exists(dir / "failure_state.txt"));
    const auto j = json::parse(slurp(dir / "error.json"));
    EXPECT_EQ(j.at("kind"), "stiff_failure");
    EXPECT_EQ(j.at("stage"), "run");
}

TEST(Harness, SweepDuplicatesZeroAlphaAndIsolation) {
    const auto base = config({"run.t_end=1000"});
    const auto dir = scratch("sweep");
    const auto r = sweep_alpha(base, {2.0, 0.0, -1.0, 2.0}, dir, 2);
    ASSERT_EQ(r.rows.size(), 4u);
    EXPECT_EQ(r.rows[0].alpha, -1.0);
    EXPECT_FALSE(r.rows[0].ok);
    EXPECT_FALSE(r.rows[0].error.empty());
    ASSERT_TRUE(r.rows[1].speed && r.rows[2].speed && r.rows[3].speed);
    EXPECT_LT(std::fabs(r.rows[1].speed->speed), 1e-9);
    EXPECT_EQ(r.rows[2].speed->speed, r.rows[3].speed->speed);
    EXPECT_NE(r.rows[2].directory, r.rows[3].directory);
    ASSERT_TRUE(r.fit);

    // Excluding the failing alpha leaves the other rows bit for bit unchanged.
    const auto clean = sweep_alpha(base, {0.0, 2.0}, scratch("sweep_clean"), 1);
    EXPECT_EQ(clean.rows[0].speed->speed, r.rows[1].speed->speed);
    EXPECT_EQ(clean.rows[1].speed->speed, r.rows[2].speed->speed);

    const auto j = json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(j.at("config_hash"), base.hash);
    EXPECT_EQ(j.at("rows").size(), 4u);
    EXPECT_TRUE(j.at("rows")[0].at("speed").is_null());
    EXPECT_TRUE(j.at("fit").contains("r2"));
}

TEST(Harness, SweepOutputIndependentOfThreadCount) {
    const auto base = config({"run.t_end=500"});
    const auto a = scratch("sweep_t1"), b = scratch("sweep_t3");
    sweep_alpha(base, {1.0, 2.0, 3.0}, a, 1);
    sweep_alpha(base, {1.0, 2.0, 3.0}, b, 3);
    EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
    EXPECT_EQ(slurp(a / "alpha_01" / "trace.csv"), slurp(b / "alpha_01" / "trace.csv"));
}

TEST(Harness, RegularityProbes) {
    const auto on = regularity_probe(config({"run.t_end=500"}), scratch("reg_on"));
    EXPECT_TRUE(on.finite);
    EXPECT_EQ(on.growth.size(), 2u);
    const auto off = regularity_probe(config({"run.t_end=100", "stepper.diffusion=off"}), scratch("reg_off"));
    EXPECT_TRUE(off.finite);
    const auto dir = scratch("reg_2d");
    const auto two = regularity_probe(config({"grid.dim=2", "grid.points=32", "run.t_end=100", "regularity.equilibrate=false"}), dir);
    EXPECT_TRUE(two.finite);
    EXPECT_TRUE(fs::exists(dir / "norms.csv"));
    EXPECT_TRUE(fs::exists(dir / "regularity.json"));
}

TEST(Harness, ConvergenceStudy) {
    const auto cfg = config({"convergence.resolutions=64,128,256", "convergence.cm_t_end=100"});
    const auto r = convergence_study(cfg, scratch("conv"));
    ASSERT_EQ(r.observed_orders.size(), 2u);
    for (double p : r.observed_orders) {
        EXPECT_GE(p, 1.8);
        EXPECT_LE(p, 2.2);
    }
    EXPECT_EQ(r.repeat_difference, 0.0);
    EXPECT_EQ(r.cm_values.size(), 3u);
    EXPECT_THROW(convergence_study(config({"convergence.resolutions=64,128,512"}), scratch("conv_bad")), ConfigError);
    EXPECT_THROW(convergence_study(config({"convergence.resolutions=64,128"}), scratch("conv_bad")), ConfigError);
}

TEST(Report, EmptyInputHasNoDataMarker) {
    const auto dir = scratch("report_empty");
    const auto r = emit_report({}, dir);
    EXPECT_TRUE(r.no_data);
    EXPECT_EQ(json::parse(slurp(dir / "summary.json")).at("no_data"), true);
}

TEST(Report, SingleRunGivesThreePlotsAndSummary) {
    const auto run = scratch("report_run");
    run_experiment(config({"run.t_end=300"}), run);
    const auto out = scratch("report_out");
    const auto r = emit_report({run}, out);
    EXPECT_EQ(r.files, (std::vector<std::string>{"pheromone.svg", "snapshots.svg", "cm.svg", "summary.json"}));
    for (const auto& f : r.files) EXPECT_TRUE(fs::exists(out / f)) << f;
    EXPECT_NE(slurp(out / "cm.svg").find("<polyline"), std::string::npos);
}

TEST(Report, SweepAddsSpeedPlotWithOnePointPerAlpha) {
    const auto sweep = scratch("report_sweep");
    sweep_alpha(config({"run.t_end=1000"}), {1.0, 2.0, 3.0}, sweep, 1);
    const auto out = scratch("report_sweep_out");
    const auto r = emit_report({sweep}, out);
    EXPECT_EQ(r.files.size(), 5u);
    const auto speed = slurp(out / "speed.svg");
    std::size_t circles = 0;
    for (auto p = speed.find("<circle"); p != std::string::npos; p = speed.find("<circle", p + 1)) ++circles;
    EXPECT_EQ(circles, 3u);
    EXPECT_NE(speed.find("least-squares fit"), std::string::npos);
}

TEST(Report, MalformedTraceNamesTheRow) {
    const auto run = scratch("report_bad");
    run_experiment(config({"run.t_end=100"}), run);
    auto text = slurp(run / "trace.csv");
    const auto third_line = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
    text.insert(third_line + 1, "oops\n");
    detail::write_text(run / "trace.csv", text);
    try {
        emit_report({run}, scratch("report_bad_out"));
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos) << e.what();
    }
}
