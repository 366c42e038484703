#pragma once

// Experiment orchestration: equilibrate -> switch on the pheromone -> run -> measure,
// alpha sweeps, regularity probes, convergence studies and report emission.
//
// Every artifact written here is a deterministic function of the configuration; wall
// clock times are returned to the caller but never written to files.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "mcas/config.hpp"
#include "mcas/diagnostics.hpp"
#include "mcas/initial.hpp"
#include "mcas/integrator.hpp"
#include "mcas/io.hpp"
#include "mcas/svg.hpp"

namespace mcas {

using json = nlohmann::json;

namespace fs = std::filesystem;

namespace detail {

inline json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string residual_csv(const std::vector<ResidualSample>& h) {
    std::string out = "time,residual\n";
    for (const auto& s : h) out += format_real(s.time) + "," + format_real(s.residual) + "\n";
    return out;
}

inline const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const NonConvergence*>(&e)) return "non_convergence";
    if (dynamic_cast<const StiffFailure*>(&e)) return "stiff_failure";
    if (dynamic_cast<const IntegrityError*>(&e)) return "integrity_error";
    if (dynamic_cast<const InsufficientData*>(&e)) return "insufficient_data";
    if (dynamic_cast<const DomainError*>(&e)) return "domain_error";
    if (dynamic_cast<const ConfigError*>(&e)) return "config_error";
    return "error";
}

// Location of the maximum of u along x, refined by a parabola through the top three nodes.
inline double peak_location(const Field& u) {
    const auto& g = u.grid();
    const int n = g.points;
    std::vector<double> row(n, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const int ix = static_cast<int>(i % n);
        row[ix] = std::max(row[ix], u[i]);
    }
    const int j = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    const double l = row[(j + n - 1) % n], c = row[j], r = row[(j + 1) % n];
    const double denom = l - 2.0 * c + r;
    const double shift = denom < 0.0 ? 0.5 * (l - r) / denom : 0.0;
    double x = g.coordinate(j) + shift * g.spacing();
    if (x < 0.0) x += g.extent;
    if (x >= g.extent) x -= g.extent;
    return x;
}

}  // namespace detail

inline Field pheromone_field(const ExperimentConfig& cfg) {
    const auto g = GridSpec::line(cfg.grid.extent, cfg.grid.points);
    return Field::sample(g, [&](double x) { return pheromone_eval(*cfg.kinetics.pheromone, x); });
}

inline std::string pheromone_csv(const ExperimentConfig& cfg) {
    const auto f = pheromone_field(cfg);
    std::string out = "x,f\n";
    for (int j = 0; j < cfg.grid.points; ++j) out += format_real(cfg.grid.coordinate(j)) + "," + format_real(f[j]) + "\n";
    return out;
}

/// Quantities measured on a completed production run.
struct RunSummary {
    double alpha = 0.0;
    double equilibration_time = 0.0;
    double equilibration_residual = 0.0;
    std::int64_t equilibration_steps = 0;
    std::int64_t steps = 0;
    double cm_start = 0.0;
    double cm_end = 0.0;
    double final_peak_x = 0.0;
    int final_peak_count = 0;
    std::optional<SpeedFit> speed;
    std::string speed_error;
    // Coefficient of variation of the sample-to-sample CM velocity inside the speed window.
    std::optional<double> velocity_cv;
    std::optional<double> time_to_peak;
    double max_mass = 0.0;
    double min_u_ratio = 0.0;  // min over samples of u_min / u_max
    double cm_max_decrease = 0.0;  // largest CM decrease between samples after the transient
    double mass_balance_error = 0.0;  // max |ΔU/Δt - mean ∫F dx| over sample pairs after the transient
    double mass_rate_scale = 0.0;  // turnover: max of |∫F dx| and the loss flux b U after the transient

    json to_json() const {
        json j;
        j["alpha"] = alpha;
        j["equilibration"] = {{"time", equilibration_time},
                              {"residual", equilibration_residual},
                              {"steps", equilibration_steps}};
        j["steps"] = steps;
        j["cm_start"] = cm_start;
        j["cm_end"] = cm_end;
        j["final_peak_x"] = final_peak_x;
        j["final_peak_count"] = final_peak_count;
        if (speed)
            j["speed_fit"] = {{"speed", speed->speed},
                              {"intercept", speed->intercept},
                              {"r2", speed->r_squared},
                              {"n_points", speed->n_points}};
        else
            j["speed_fit"] = {{"error", speed_error}};
        j["velocity_cv"] = detail::nullable(velocity_cv);
        j["time_to_peak"] = detail::nullable(time_to_peak);
        j["max_mass"] = max_mass;
        j["min_u_ratio"] = min_u_ratio;
        j["cm_max_decrease"] = cm_max_decrease;
        j["mass_balance_error"] = mass_balance_error;
        j["mass_rate_scale"] = mass_rate_scale;
        return j;
    }
};

struct RunResult {
    RunSummary summary;
    SimState initial;  // equilibrated state at pheromone switch-on, t = 0
    SimState final;
    std::vector<TraceRecord> trace;
    double wall_seconds = 0.0;
};

/// Measurements on a trace. `reaction_integrals` holds ∫F dx at each record.
inline void summarize_trace(const ExperimentConfig& cfg, const std::vector<TraceRecord>& trace,
                            const std::vector<double>& reaction_integrals, RunSummary& s) {
    if (trace.empty()) return;
    s.cm_start = trace.front().cm_plain;
    s.cm_end = trace.back().cm_plain;
    s.max_mass = -std::numeric_limits<double>::infinity();
    s.min_u_ratio = std::numeric_limits<double>::infinity();
    const double x_peak = cfg.kinetics.pheromone ? cfg.kinetics.pheromone->x_peak : 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& r = trace[i];
        s.max_mass = std::max(s.max_mass, r.mass_u);
        if (r.u_max > 0.0) s.min_u_ratio = std::min(s.min_u_ratio, r.u_min / r.u_max);
        if (!s.time_to_peak && std::fabs(r.cm_plain - x_peak) < cfg.peak_tol) s.time_to_peak = r.time;
        if (i > 0 && trace[i - 1].time >= cfg.transient) {
            s.cm_max_decrease = std::max(s.cm_max_decrease, trace[i - 1].cm_plain - r.cm_plain);
            if (i < reaction_integrals.size())
                s.mass_rate_scale = std::max({s.mass_rate_scale, std::fabs(reaction_integrals[i]), cfg.kinetics.b * r.mass_u});
            // Simpson over equally spaced sample triples: (U(t+h) - U(t-h)) / 2h against the time average of ∫F.
            if (i + 1 < trace.size() && i + 1 < reaction_integrals.size()) {
                const double h0 = r.time - trace[i - 1].time, h1 = trace[i + 1].time - r.time;
                if (std::fabs(h1 - h0) <= 1e-9 * h0) {
                    const double rate = (trace[i + 1].mass_u - trace[i - 1].mass_u) / (h0 + h1);
                    const double predicted =
                        (reaction_integrals[i - 1] + 4.0 * reaction_integrals[i] + reaction_integrals[i + 1]) / 6.0;
                    s.mass_balance_error = std::max(s.mass_balance_error, std::fabs(rate - predicted));
                }
            }
        }
    }
    if (!std::isfinite(s.min_u_ratio)) s.min_u_ratio = 0.0;
    try {
        s.speed = speed_fit(trace, cfg.speed_window, cfg.transient);
    } catch (const InsufficientData& e) {
        s.speed_error = e.what();
    }
    std::vector<double> v;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const auto& a = trace[i - 1];
        const auto& b = trace[i];
        if (a.time < cfg.transient) continue;
        const auto in = [&](double x) { return x >= cfg.speed_window.lo && x <= cfg.speed_window.hi; };
        if (in(a.cm_plain) && in(b.cm_plain)) v.push_back((b.cm_plain - a.cm_plain) / (b.time - a.time));
    }
    if (v.size() >= 2) {
        double mean = 0.0, var = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size() - 1);
        if (mean != 0.0) s.velocity_cv = std::sqrt(var) / std::fabs(mean);
    }
}

/// Writes error.json (plus the residual history when present) and rethrows nothing.
inline void write_error_manifest(const fs::path& dir, const std::exception& e, json extra = json::object()) {
    json j = std::move(extra);
    j["status"] = "failed";
    j["kind"] = detail::error_kind(e);
    j["message"] = e.what();
    if (const auto* nc = dynamic_cast<const NonConvergence*>(&e)) {
        detail::write_text(dir / "residual_history.csv", detail::residual_csv(nc->history()));
        j["residual_history"] = "residual_history.csv";
    }
    if (const auto* sf = dynamic_cast<const StiffFailure*>(&e)) j["time"] = sf->time();
    if (const auto* ie = dynamic_cast<const IntegrityError*>(&e)) j["time"] = ie->time();
    detail::write_json(dir / "error.json", j);
}

/// Equilibrates the seed bump with alpha forced to zero.
inline EquilibrationResult equilibrate_seed(const ExperimentConfig& cfg) {
    const auto sys = cfg.system();
    auto seed = SimState::from_field(initial_bump(cfg.grid, cfg.initial, cfg.kinetics.M, cfg.quadrature), 0.0,
                                     cfg.quadrature);
    return equilibrate(std::move(seed), sys, cfg.stepper, cfg.equilibrate);
}

/// Runs the configured system from `start`, recording every sample_every seconds.
/// On a stepper failure the partial trace is kept in `trace` before rethrowing.
inline SimState record_run(const ExperimentConfig& cfg, const ReactionSystem& sys, SimState start, double t_end,
                           std::vector<TraceRecord>& trace, std::vector<double>* reaction_integrals = nullptr) {
    std::vector<double> reaction(start.u.size());
    const Observer obs{cfg.sample_every, [&](const SimState& s) {
                           trace.push_back(record(s, cfg.diagnostics));
                           if (reaction_integrals) {
                               sys.reaction(s.u.values(), s.mass_u, reaction);
                               reaction_integrals->push_back(integrate(s.u.grid(), reaction, cfg.quadrature));
                           }
                       }};
    return run_until(std::move(start), sys, cfg.stepper, t_end, std::span(&obs, 1));
}

/// equilibrate -> switch on the pheromone at t = 0 -> run to t_end -> measure.
/// Artifacts in `out`: trace.csv, pheromone.csv, initial_state.txt, final_state.txt,
/// residual_history.csv, run.json; on failure error.json and whatever was produced.
inline RunResult run_experiment(const ExperimentConfig& cfg, const fs::path& out) {
    const auto wall0 = std::chrono::steady_clock::now();
    cfg.validate();
    fs::create_directories(out);
    json meta = {{"config_hash", cfg.hash}, {"code_version", std::string(code_version)},
                 {"alpha", cfg.kinetics.alpha}};
    detail::write_text(out / "pheromone.csv", pheromone_csv(cfg));

    RunResult result;
    EquilibrationResult eq;
    try {
        eq = equilibrate_seed(cfg);
    } catch (const DomainError& e) {
        write_error_manifest(out, e, json{{"stage", "equilibrate"}, {"config_hash", cfg.hash}});
        throw;
    }
    detail::write_text(out / "residual_history.csv", detail::residual_csv(eq.history));

    SimState start = eq.state;
    start.time = 0.0;
    start.step_count = 0;
    result.initial = start;
    auto& s = result.summary;
    s.alpha = cfg.kinetics.alpha;
    s.equilibration_time = eq.state.time;
    s.equilibration_residual = eq.residual;
    s.equilibration_steps = eq.state.step_count;
    if (cfg.write_snapshots) write_state(out / "initial_state.txt", start);

    const auto sys = cfg.system();
    std::vector<double> reaction_integrals;
    try {
        result.final = record_run(cfg, sys, start, cfg.t_end, result.trace, &reaction_integrals);
    } catch (const DomainError& e) {
        write_trace(out / "trace.csv", result.trace);
        if (const auto* sf = dynamic_cast<const StiffFailure*>(&e))
            write_state(out / "failure_state.txt",
                        SimState{Field(cfg.grid, sf->state()), sf->time(), 0.0, 0});
        write_error_manifest(out, e, json{{"stage", "run"}, {"config_hash", cfg.hash}});
        throw;
    }
    write_trace(out / "trace.csv", result.trace);
    if (cfg.write_snapshots) write_state(out / "final_state.txt", result.final);

    s.steps = result.final.step_count;
    s.final_peak_x = detail::peak_location(result.final.u);
    s.final_peak_count = peak_count(result.final.u, cfg.diagnostics.prominence_fraction * result.final.max());
    summarize_trace(cfg, result.trace, reaction_integrals, s);

    json j = meta;
    j["status"] = "ok";
    j["t_end"] = cfg.t_end;
    j["sample_every"] = cfg.sample_every;
    j["summary"] = s.to_json();
    detail::write_json(out / "run.json", j);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return result;
}

struct SweepRow {
    double alpha = 0.0;
    bool ok = false;
    std::string error;
    std::string directory;
    std::optional<SpeedFit> speed;
    std::optional<double> time_to_peak;
    RunSummary summary;
    double wall_seconds = 0.0;  // in memory only
};

struct SweepResult {
    std::string config_hash;
    std::string code_version;
    std::vector<SweepRow> rows;  // sorted by alpha
    std::optional<LineFit> fit;  // speed against alpha over rows with a speed
    std::string fit_error;

    json to_json() const {
        json j;
        j["config_hash"] = config_hash;
        j["code_version"] = code_version;
        j["rows"] = json::array();
        for (const auto& r : rows) {
            json row = {{"alpha", r.alpha}, {"status", r.ok ? "ok" : "failed"}, {"directory", r.directory}};
            row["speed"] = r.speed ? json(r.speed->speed) : json(nullptr);
            row["r2"] = r.speed ? json(r.speed->r_squared) : json(nullptr);
            row["time_to_peak"] = detail::nullable(r.time_to_peak);
            if (!r.error.empty()) row["error"] = r.error;
            j["rows"].push_back(row);
        }
        if (fit)
            j["fit"] = {{"slope", fit->slope}, {"intercept", fit->intercept}, {"r2", fit->r_squared}};
        else
            j["fit"] = {{"error", fit_error}};
        return j;
    }
};

inline int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// One run_experiment per alpha in member directories alpha_<index>/, `threads` at a time.
/// A failing member yields a failed row and leaves the others untouched.
inline SweepResult sweep_alpha(const ExperimentConfig& base, const std::vector<double>& alphas, const fs::path& out,
                               int threads = 1) {
    base.validate();
    if (alphas.empty()) throw ConfigError("sweep needs at least one alpha");
    fs::create_directories(out);
    std::vector<SweepRow> rows(alphas.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < alphas.size(); i = next++) {
            auto& row = rows[i];
            row.alpha = alphas[i];
            row.directory = fmt::format("alpha_{:02d}", i);
            ExperimentConfig cfg = base;
            cfg.kinetics.alpha = alphas[i];
            try {
                const auto r = run_experiment(cfg, out / row.directory);
                row.ok = true;
                row.summary = r.summary;
                row.speed = r.summary.speed;
                row.time_to_peak = r.summary.time_to_peak;
                row.wall_seconds = r.wall_seconds;
                if (!row.speed) row.error = r.summary.speed_error;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(alphas.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    SweepResult result;
    result.config_hash = base.hash;
    result.code_version = std::string(code_version);
    result.rows = std::move(rows);
    std::stable_sort(result.rows.begin(), result.rows.end(),
                     [](const SweepRow& a, const SweepRow& b) { return a.alpha < b.alpha; });
    std::vector<double> xs, ys;
    for (const auto& r : result.rows)
        if (r.speed) {
            xs.push_back(r.alpha);
            ys.push_back(r.speed->speed);
        }
    try {
        result.fit = fit_line(xs, ys);
    } catch (const InsufficientData& e) {
        result.fit_error = e.what();
    }
    detail::write_json(out / "summary.json", result.to_json());
    return result;
}

struct RegularityResult {
    std::vector<TraceRecord> trace;
    std::map<int, double> growth;  // max over second half / max over first half
    bool finite = true;
    std::string error;
};

/// Records H^s norms along a run of the configured system (diffusion per stepper.diffusion)
/// and reports, per order in regularity.orders, the ratio of the late-window maximum to the
/// early-window maximum. Writes norms.csv and regularity.json.
inline RegularityResult regularity_probe(const ExperimentConfig& cfg, const fs::path& out) {
    cfg.validate();
    fs::create_directories(out);
    RegularityResult result;
    auto orders = cfg.diagnostics.sobolev_orders;
    auto write = [&] {
        detail::write_text(out / "norms.csv", norms_csv(result.trace, orders));
        json j = {{"config_hash", cfg.hash},
                  {"code_version", std::string(code_version)},
                  {"dim", cfg.grid.dim},
                  {"diffusion", cfg.stepper.diffusion == Diffusion::on},
                  {"t_end", cfg.t_end},
                  {"finite", result.finite}};
        json g = json::object();
        for (const auto& [s, v] : result.growth) g[fmt::format("h{}", s)] = v;
        j["growth"] = g;
        j["status"] = result.error.empty() ? "ok" : "failed";
        if (!result.error.empty()) j["error"] = result.error;
        detail::write_json(out / "regularity.json", j);
    };

    SimState start;
    try {
        if (cfg.regularity.equilibrate) {
            ExperimentConfig eq_cfg = cfg;
            eq_cfg.stepper.diffusion = Diffusion::on;
            start = equilibrate_seed(eq_cfg).state;
        } else {
            start = SimState::from_field(initial_bump(cfg.grid, cfg.initial, cfg.kinetics.M, cfg.quadrature), 0.0,
                                         cfg.quadrature);
        }
        start.time = 0.0;
        start.step_count = 0;
        record_run(cfg, cfg.system(), start, cfg.t_end, result.trace);
    } catch (const DomainError& e) {
        result.finite = false;
        result.error = e.what();
        write();
        write_error_manifest(out, e, json{{"stage", "regularity"}});
        throw;
    }
    const double mid = 0.5 * cfg.t_end;
    for (int s : cfg.regularity.orders) {
        double early = 0.0, late = 0.0;
        for (const auto& r : result.trace) {
            const double v = r.h_norms.at(s);
            if (!std::isfinite(v)) result.finite = false;
            if (r.time <= mid) early = std::max(early, v);
            if (r.time >= mid) late = std::max(late, v);
        }
        result.growth[s] = late / early;
    }
    for (const auto& r : result.trace)
        for (const auto& [s, v] : r.h_norms)
            if (!std::isfinite(v)) result.finite = false;
    write();
    return result;
}

struct ConvergenceResult {
    std::vector<int> resolutions;
    std::vector<double> eigen_errors;  // max-norm error against exp(-k (2 pi/L)^2 t) cos
    std::vector<double> observed_orders;
    double repeat_difference = 0.0;  // finest eigenmode run repeated
    std::vector<double> cm_values;  // CM at cm_t_end per resolution
    std::vector<double> cm_differences;  // between consecutive resolutions
};

/// (a) pure-diffusion eigenmode decay across resolutions, observed spatial order;
/// (b) CM of the production pipeline at convergence.cm_t_end across resolutions.
inline ConvergenceResult convergence_study(const ExperimentConfig& base, const fs::path& out) {
    base.validate();
    const auto& res = base.convergence.resolutions;
    if (res.size() < 3) throw ConfigError("convergence.resolutions needs at least 3 grids");
    for (std::size_t i = 2; i < res.size(); ++i)
        if (res[i] * res[i - 2] != res[i - 1] * res[i - 1])
            throw ConfigError("convergence.resolutions must form a geometric progression");
    fs::create_directories(out);
    ConvergenceResult r;
    r.resolutions = res;

    const double L = base.grid.extent;
    const double kk = std::pow(2.0 * pi / L, 2);
    const double T = base.convergence.eigen_t_end;
    auto eigen_run = [&](int n) {
        const auto g = GridSpec::line(L, n);
        KineticsSpec heat;
        heat.variant = Variant::simplest;
        heat.a = 0.0;
        heat.b = 0.0;
        heat.k = base.kinetics.k;
        const ReactionSystem sys(g, heat);
        StepperConfig sc;
        sc.rel_tol = 1e-11;
        sc.abs_tol = 1e-13;
        sc.check_positivity = false;
        const auto u0 = Field::sample(g, [&](double x) { return std::cos(2.0 * pi * x / L); });
        return run_until(SimState::from_field(u0), sys, sc, T);
    };
    std::vector<SimState> finals;
    for (int n : res) {
        finals.push_back(eigen_run(n));
        const auto& u = finals.back().u;
        const double decay = std::exp(-base.kinetics.k * kk * T);
        double err = 0.0;
        for (int j = 0; j < n; ++j)
            err = std::max(err, std::fabs(u[j] - decay * std::cos(2.0 * pi * u.grid().coordinate(j) / L)));
        r.eigen_errors.push_back(err);
    }
    for (std::size_t i = 1; i < res.size(); ++i)
        r.observed_orders.push_back(std::log(r.eigen_errors[i - 1] / r.eigen_errors[i]) /
                                    std::log(static_cast<double>(res[i]) / res[i - 1]));
    {
        const auto again = eigen_run(res.back());
        for (std::size_t j = 0; j < again.u.size(); ++j)
            r.repeat_difference = std::max(r.repeat_difference, std::fabs(again.u[j] - finals.back().u[j]));
    }

    for (int n : res) {
        ExperimentConfig cfg = base;
        cfg.grid.points = n;
        const auto eq = equilibrate_seed(cfg);
        SimState start = eq.state;
        start.time = 0.0;
        const auto fin = run_until(start, cfg.system(), cfg.stepper, base.convergence.cm_t_end);
        r.cm_values.push_back(center_of_mass(fin.u, CmMode::plain));
    }
    for (std::size_t i = 1; i < res.size(); ++i) r.cm_differences.push_back(std::fabs(r.cm_values[i] - r.cm_values[i - 1]));

    json j = {{"config_hash", base.hash},
              {"code_version", std::string(code_version)},
              {"resolutions", r.resolutions},
              {"eigenmode", {{"t_end", T}, {"max_errors", r.eigen_errors}, {"observed_orders", r.observed_orders},
                             {"repeat_difference", r.repeat_difference}}},
              {"cm", {{"t_end", base.convergence.cm_t_end}, {"values", r.cm_values},
                      {"differences", r.cm_differences}}}};
    detail::write_json(out / "convergence.json", j);
    return r;
}

struct ReportResult {
    std::vector<std::string> files;
    bool no_data = false;
};

/// Plots and a summary from run directories (containing run.json) and sweep directories
/// (containing summary.json and alpha_<i>/ members).
inline ReportResult emit_report(const std::vector<fs::path>& inputs, const fs::path& out) {
    struct RunData {
        std::string label;
        double alpha;
        std::vector<TraceRecord> trace;
        std::optional<SimState> initial, final;
        json summary;
        fs::path pheromone;
    };
    std::vector<RunData> runs;
    std::vector<std::pair<std::string, json>> sweeps;

    auto read_json = [](const fs::path& p) {
        std::ifstream in(p);
        if (!in) throw ConfigError(fmt::format("cannot open '{}'", p.string()));
        try {
            return json::parse(in);
        } catch (const json::parse_error& e) {
            throw ParseError(fmt::format("{}: {}", p.string(), e.what()));
        }
    };
    auto load_run = [&](const fs::path& dir, const std::string& label) {
        RunData d;
        const json j = read_json(dir / "run.json");
        d.alpha = j.at("alpha").get<double>();
        d.label = label;
        d.summary = j.at("summary");
        d.trace = read_trace(dir / "trace.csv");
        if (fs::exists(dir / "initial_state.txt")) d.initial = read_state(dir / "initial_state.txt");
        if (fs::exists(dir / "final_state.txt")) d.final = read_state(dir / "final_state.txt");
        if (fs::exists(dir / "pheromone.csv")) d.pheromone = dir / "pheromone.csv";
        runs.push_back(std::move(d));
    };
    for (const auto& in : inputs) {
        if (fs::exists(in / "summary.json")) {
            const json j = read_json(in / "summary.json");
            sweeps.emplace_back(in.string(), j);
            for (const auto& row : j.at("rows"))
                if (row.at("status") == "ok")
                    load_run(in / row.at("directory").get<std::string>(),
                             fmt::format("alpha={}", row.at("alpha").get<double>()));
        } else if (fs::exists(in / "run.json")) {
            const json j = read_json(in / "run.json");
            load_run(in, fmt::format("alpha={}", j.at("alpha").get<double>()));
        } else {
            throw ConfigError(fmt::format("'{}' holds neither run.json nor summary.json", in.string()));
        }
    }

    fs::create_directories(out);
    ReportResult result;
    json summary;
    summary["code_version"] = std::string(code_version);
    if (runs.empty() && sweeps.empty()) {
        result.no_data = true;
        summary["no_data"] = true;
        detail::write_json(out / "summary.json", summary);
        result.files.push_back("summary.json");
        return result;
    }
    summary["no_data"] = false;

    auto emit = [&](const std::string& name, const svg::Plot& p) {
        detail::write_text(out / name, svg::render(p));
        result.files.push_back(name);
    };

    // Signal profiles.
    {
        svg::Plot p{"Pheromone profile", "x (um)", "f(x)", {}, ""};
        std::vector<std::string> seen;
        for (const auto& r : runs) {
            if (r.pheromone.empty()) continue;
            const auto lines = detail::read_lines(r.pheromone);
            std::string body;
            for (std::size_t i = 1; i < lines.size(); ++i) body += lines[i] + "\n";
            if (std::find(seen.begin(), seen.end(), body) != seen.end()) continue;
            seen.push_back(body);
            svg::Series s{r.label, {}, {}, false};
            for (std::size_t i = 1; i < lines.size(); ++i) {
                if (lines[i].empty()) continue;
                const auto cells = detail::split_csv_row(lines[i]);
                if (cells.size() != 2)
                    throw ParseError(fmt::format("{}: row {}: expected 2 columns", r.pheromone.string(), i + 1));
                s.x.push_back(detail::parse_cell(cells[0], r.pheromone.string(), i + 1, "x"));
                s.y.push_back(detail::parse_cell(cells[1], r.pheromone.string(), i + 1, "f"));
            }
            p.series.push_back(std::move(s));
        }
        emit("pheromone.svg", p);
    }
    // u at switch-on and at the end of each run.
    {
        svg::Plot p{"Activator profile at t = 0 and t_end", "x (um)", "u", {}, ""};
        for (const auto& r : runs)
            for (const auto* st : {r.initial ? &*r.initial : nullptr, r.final ? &*r.final : nullptr}) {
                if (!st || st->u.grid().dim != 1) continue;
                svg::Series s{fmt::format("{} t={:g}", r.label, st->time), {}, {}, false};
                for (int j = 0; j < st->u.grid().points; ++j) {
                    s.x.push_back(st->u.grid().coordinate(j));
                    s.y.push_back(st->u[j]);
                }
                p.series.push_back(std::move(s));
            }
        emit("snapshots.svg", p);
    }
    // Center of mass trajectories.
    {
        svg::Plot p{"Center of mass", "t (s)", "CM (um)", {}, ""};
        for (const auto& r : runs) {
            svg::Series s{r.label, {}, {}, false};
            for (const auto& t : r.trace) {
                s.x.push_back(t.time);
                s.y.push_back(t.cm_plain);
            }
            p.series.push_back(std::move(s));
        }
        emit("cm.svg", p);
    }
    json run_rows = json::array();
    for (const auto& r : runs)
        run_rows.push_back({{"label", r.label},
                            {"alpha", r.alpha},
                            {"speed_fit", r.summary.at("speed_fit")},
                            {"time_to_peak", r.summary.at("time_to_peak")},
                            {"final_peak_x", r.summary.at("final_peak_x")}});
    summary["runs"] = run_rows;

    // Speed against alpha with the fitted line.
    if (!sweeps.empty()) {
        svg::Plot p{"Transport speed", "alpha (1/s)", "speed (um/s)", {}, ""};
        json sweep_rows = json::array();
        for (const auto& [name, j] : sweeps) {
            svg::Series pts{"measured", {}, {}, true};
            for (const auto& row : j.at("rows"))
                if (!row.at("speed").is_null()) {
                    pts.x.push_back(row.at("alpha").get<double>());
                    pts.y.push_back(row.at("speed").get<double>());
                }
            if (j.at("fit").contains("slope") && !pts.x.empty()) {
                const double slope = j["fit"]["slope"].get<double>(), icpt = j["fit"]["intercept"].get<double>();
                const double lo = *std::min_element(pts.x.begin(), pts.x.end());
                const double hi = *std::max_element(pts.x.begin(), pts.x.end());
                p.series.push_back({"least-squares fit", {lo, hi}, {icpt + slope * lo, icpt + slope * hi}, false});
            }
            p.series.push_back(std::move(pts));
            sweep_rows.push_back({{"source", name}, {"config_hash", j.at("config_hash")}, {"rows", j.at("rows")},
                                  {"fit", j.at("fit")}});
        }
        if (p.series.empty()) p.note = "no completed sweep rows";
        emit("speed.svg", p);
        summary["sweeps"] = sweep_rows;
    }
    detail::write_json(out / "summary.json", summary);
    result.files.push_back("summary.json");
    return result;
}

}  // namespace mcas
