// mcas: command-line front end for the experiment harness.
//
// Exit codes: 0 success, 1 domain error (non-convergence, stepper failure),
// 2 usage or configuration error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mcas/harness.hpp"

namespace fs = std::filesystem;
using namespace mcas;

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    std::vector<std::string> overrides;
    int threads = 0;
    bool quiet = false;
    std::vector<std::string> inputs;  // report only
};

std::string opt_real(const std::optional<double>& v) { return v ? fmt::format("{:.10g}", *v) : "none"; }

ConfigTable load_table(const Options& o) {
    ConfigTable t = o.config.empty() ? ConfigTable{} : ConfigTable::from_file(o.config);
    for (const auto& ov : o.overrides) t.apply_override(ov);
    return t;
}

int resolve_threads(const Options& o) {
    if (o.threads > 0) return o.threads;
    if (const char* env = std::getenv("MCAS_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
        throw ConfigError(fmt::format("MCAS_THREADS='{}' is not a positive integer", env));
    }
    return default_threads();
}

void save_config(const fs::path& out, const ConfigTable& t) {
    fs::create_directories(out);
    detail::write_text(out / "config.ini", t.to_ini());
}

void note(const Options& o, const std::string& msg) {
    if (!o.quiet) std::cerr << msg << "\n";
}

int cmd_equilibrate(const Options& o) {
    const auto table = load_table(o);
    const auto cfg = build_config(table);
    const fs::path out = o.out;
    save_config(out, table);
    try {
        const auto eq = equilibrate_seed(cfg);
        write_state(out / "equilibrium_state.txt", eq.state);
        detail::write_text(out / "residual_history.csv", detail::residual_csv(eq.history));
        const int peaks = peak_count(eq.state.u, cfg.diagnostics.prominence_fraction * eq.state.max());
        detail::write_json(out / "equilibrium.json",
                           {{"config_hash", cfg.hash},
                            {"code_version", std::string(code_version)},
                            {"time", eq.state.time},
                            {"residual", eq.residual},
                            {"steps", eq.state.step_count},
                            {"mass_u", eq.state.mass_u},
                            {"u_max", eq.state.max()},
                            {"peak_count", peaks}});
        fmt::print("equilibrate status=ok residual={:.6g} time={:.10g} peak_count={} mass_u={:.10g} out={}\n",
                   eq.residual, eq.state.time, peaks, eq.state.mass_u, out.string());
    } catch (const NonConvergence& e) {
        write_error_manifest(out, e, {{"stage", "equilibrate"}, {"config_hash", cfg.hash}});
        fmt::print("equilibrate status=failed kind=non_convergence residual_history={}\n",
                   (out / "residual_history.csv").string());
        throw;
    }
    return 0;
}

int cmd_run(const Options& o) {
    const auto table = load_table(o);
    const auto cfg = build_config(table);
    save_config(o.out, table);
    const auto r = run_experiment(cfg, o.out);
    const auto& s = r.summary;
    fmt::print("run status=ok alpha={:g} speed={} r2={} time_to_peak={} cm_end={:.10g} final_peak_x={:.10g} "
               "out={} wall_s={:.2f}\n",
               s.alpha, s.speed ? fmt::format("{:.10g}", s.speed->speed) : "none",
               s.speed ? fmt::format("{:.10g}", s.speed->r_squared) : "none", opt_real(s.time_to_peak), s.cm_end,
               s.final_peak_x, o.out, r.wall_seconds);
    return 0;
}

int cmd_sweep(const Options& o) {
    const auto table = load_table(o);
    const auto cfg = build_config(table);
    if (cfg.alpha_list.size() < 4)
        throw ConfigError(fmt::format("kinetics.alpha_list needs at least 4 values, got {}", cfg.alpha_list.size()));
    const int threads = resolve_threads(o);
    note(o, fmt::format("sweeping {} alphas on {} threads", cfg.alpha_list.size(), threads));
    save_config(o.out, table);
    const auto r = sweep_alpha(cfg, cfg.alpha_list, o.out, threads);
    int failed = 0;
    for (const auto& row : r.rows) {
        if (!row.ok) ++failed;
        note(o, fmt::format("  alpha={:<6g} {} speed={} time_to_peak={}{}", row.alpha, row.ok ? "ok    " : "FAILED",
                            row.speed ? fmt::format("{:.6g}", row.speed->speed) : "none",
                            opt_real(row.time_to_peak), row.error.empty() ? "" : "  (" + row.error + ")"));
    }
    fmt::print("sweep status={} rows={} failed={} slope={} intercept={} r2={} summary={}\n",
               failed == 0 ? "ok" : "partial", r.rows.size(), failed,
               r.fit ? fmt::format("{:.10g}", r.fit->slope) : "none",
               r.fit ? fmt::format("{:.10g}", r.fit->intercept) : "none",
               r.fit ? fmt::format("{:.10g}", r.fit->r_squared) : "none", (fs::path(o.out) / "summary.json").string());
    return failed == 0 ? 0 : 1;
}

int cmd_regularity(const Options& o) {
    const auto table = load_table(o);
    const auto cfg = build_config(table);
    save_config(o.out, table);
    const auto r = regularity_probe(cfg, o.out);
    std::string growth;
    for (const auto& [s, v] : r.growth) growth += fmt::format(" h{}_growth={:.10g}", s, v);
    fmt::print("regularity status=ok finite={}{} norms={}\n", r.finite ? "true" : "false", growth,
               (fs::path(o.out) / "norms.csv").string());
    return 0;
}

int cmd_converge(const Options& o) {
    const auto table = load_table(o);
    const auto cfg = build_config(table);
    save_config(o.out, table);
    const auto r = convergence_study(cfg, o.out);
    fmt::print("converge status=ok observed_orders={} cm_differences={} report={}\n",
               fmt::format("{:.4f}", fmt::join(r.observed_orders, ",")),
               fmt::format("{:.3g}", fmt::join(r.cm_differences, ",")),
               (fs::path(o.out) / "convergence.json").string());
    return 0;
}

int cmd_report(const Options& o) {
    std::vector<fs::path> inputs(o.inputs.begin(), o.inputs.end());
    const auto r = emit_report(inputs, o.out);
    fmt::print("report status=ok no_data={} files={} out={}\n", r.no_data ? "true" : "false",
               fmt::join(r.files, ","), o.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mass-conserved activator-substrate simulations: equilibration, pheromone-driven runs, "
                 "alpha sweeps, regularity probes, convergence studies and reports."};
    app.require_subcommand(1);
    app.footer(describe_keys());
    Options o;

    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const Options&);
    };
    const Sub subs[] = {
        {"equilibrate", "Relax the seed bump with the pheromone off", cmd_equilibrate},
        {"run", "Equilibrate, switch the pheromone on and run to run.t_end", cmd_run},
        {"sweep", "Run once per kinetics.alpha_list entry and fit speed against alpha", cmd_sweep},
        {"regularity", "Track Sobolev norms along a run and report their growth", cmd_regularity},
        {"converge", "Spatial order and center-of-mass self-convergence across grids", cmd_converge},
        {"report", "SVG plots and summary.json from run and sweep output directories", cmd_report},
    };
    int (*chosen)(const Options&) = nullptr;
    for (const auto& s : subs) {
        auto* sub = app.add_subcommand(s.name, s.help);
        sub->footer(describe_keys());
        sub->add_option("--config", o.config, "INI config file (defaults apply to absent keys)");
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--override", o.overrides, "section.key=value, repeatable")->allow_extra_args(false);
        sub->add_option("--threads", o.threads, "sweep parallelism cap (fallback: MCAS_THREADS)");
        sub->add_flag("--quiet", o.quiet, "suppress progress messages");
        if (std::string(s.name) == "report") sub->add_option("inputs", o.inputs, "run or sweep directories");
        sub->callback([&chosen, fn = s.fn] { chosen = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        return chosen(o);
    } catch (const ConfigError& e) {
        std::cerr << "mcas: configuration error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "mcas: " << e.what() << "\n";
        if (const auto* nc = dynamic_cast<const NonConvergence*>(&e))
            std::cerr << "mcas: residual history written to "
                      << (fs::path(o.out) / "residual_history.csv").string() << " (" << nc->history().size()
                      << " samples)\n";
        else
            std::cerr << "mcas: error manifest written to " << (fs::path(o.out) / "error.json").string() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "mcas: " << e.what() << "\n";
        return 1;
    }
}
