#pragma once

// Experiment configuration: a flat table of dotted keys ("section.name") with typed
// defaults, loaded from an INI file and patched by "key=value" overrides.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mcas/diagnostics.hpp"
#include "mcas/error.hpp"
#include "mcas/grid.hpp"
#include "mcas/initial.hpp"
#include "mcas/integrator.hpp"
#include "mcas/kinetics.hpp"

namespace mcas {

inline constexpr std::string_view code_version = "0.1.0";

enum class ValueKind { real, integer, boolean, text, real_list, int_list };

struct ConfigKey {
    std::string name;
    ValueKind kind;
    std::string default_value;
    std::string help;
    std::vector<std::string> choices = {};  // text keys only; empty = free text
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    const std::string t = trim(s);
    if (t.empty()) return out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("{}: cannot parse '{}' as a finite real", key, v));
}

inline long long parse_integer(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used == v.size()) return i;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("{}: cannot parse '{}' as an integer", key, v));
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ConfigError(fmt::format("{}: cannot parse '{}' as a boolean", key, v));
}

}  // namespace detail

/// Every recognized key, in display order. Defaults reproduce the cell-polarity
/// parameter set (a = b = 1, k = 0.01, M = 10, cell circumference 10 um).
inline const std::vector<ConfigKey>& config_keys() {
    using K = ValueKind;
    static const std::vector<ConfigKey> keys = {
        {"grid.dim", K::integer, "1", "spatial dimension (1 or 2)"},
        {"grid.extent", K::real, "10", "period of each axis, um"},
        {"grid.points", K::integer, "256", "nodes per axis (even, >= 16)"},
        {"grid.quadrature", K::text, "trapezoid", "rule for U(t)", {"trapezoid", "simpson"}},

        {"kinetics.variant", K::text, "pheromone_modified", "reaction term",
         {"simplest", "goryachev", "otsuji", "pheromone_modified"}},
        {"kinetics.a", K::real, "1", "activation strength a, um^2"},
        {"kinetics.b", K::real, "1", "depletion rate b, 1/s"},
        {"kinetics.c", K::real, "0", "linear activation coefficient (goryachev)"},
        {"kinetics.alpha", K::real, "2", "pheromone strength, 1/s"},
        {"kinetics.k", K::real, "0.01", "diffusion coefficient of u, um^2/s"},
        {"kinetics.M", K::real, "10", "total mass"},
        {"kinetics.alpha_list", K::real_list, "0.5,1,1.5,2,2.5,3", "alphas for the sweep subcommand"},

        {"pheromone.kind", K::text, "piecewise_linear", "signal profile",
         {"heat_kernel", "piecewise_linear", "tabulated", "zero"}},
        {"pheromone.beta", K::real, "1500", "heat kernel response strength"},
        {"pheromone.gamma", K::real, "10", "heat kernel source diffusion coefficient"},
        {"pheromone.source_time", K::real, "1", "heat kernel evaluation time"},
        {"pheromone.source_distance", K::real, "10", "heat kernel source distance L"},
        {"pheromone.x_peak", K::real, "5", "location of the signal maximum, um"},
        {"pheromone.height", K::real, "2", "piecewise-linear peak value"},
        {"pheromone.table", K::real_list, "", "tabulated node values over one period"},

        {"stepper.method", K::text, "imex_bdf2", "time stepper", {"imex_bdf2", "explicit_rk4"}},
        {"stepper.dt_init", K::real, "0.001", "initial (RK4: fixed) step, s"},
        {"stepper.dt_min", K::real, "1e-12", "smallest adaptive step before failing, s"},
        {"stepper.dt_max", K::real, "1", "largest adaptive step, s"},
        {"stepper.rel_tol", K::real, "1e-06", "relative error tolerance"},
        {"stepper.abs_tol", K::real, "1e-09", "absolute error tolerance"},
        {"stepper.diffusion", K::boolean, "true", "include k*Laplacian(u)"},
        {"stepper.check_positivity", K::boolean, "true", "fail on min(u) < -negativity_tol*max(u)"},
        {"stepper.negativity_tol", K::real, "1e-08", "tolerated relative undershoot"},
        {"stepper.stability_safety", K::real, "0.9", "fraction of the explicit stability limit (<= 0: off)"},

        {"run.t_end", K::real, "10000", "run length after the pheromone is switched on, s"},
        {"run.sample_every", K::real, "10", "trace sampling interval, s"},
        {"run.transient", K::real, "100", "initial interval excluded from speed fits and monotonicity, s"},

        {"initial.bump_center", K::real, "1", "seed bump center, um"},
        {"initial.bump_width", K::real, "0.5", "seed bump standard deviation, um"},
        {"initial.bump_mass_fraction", K::real, "0.5", "seed mass as a fraction of M"},

        {"equilibrate.tol", K::real, "1e-08", "residual max-norm target"},
        {"equilibrate.cap", K::real, "50000", "time limit, s"},
        {"equilibrate.history_every", K::real, "10", "residual history interval, s"},

        {"diagnostics.sobolev_orders", K::int_list, "0,1,2", "H^s norms recorded per sample"},
        {"diagnostics.prominence_fraction", K::real, "0.01", "peak prominence as a fraction of max(u)"},
        {"diagnostics.window_lo", K::real, "1", "speed fit window lower CM bound, um"},
        {"diagnostics.window_hi", K::real, "2.5", "speed fit window upper CM bound, um"},
        {"diagnostics.peak_tol", K::real, "0.1", "time-to-peak threshold on |CM - x_peak|, um"},

        {"regularity.equilibrate", K::boolean, "true", "start the probe from the equilibrated bump"},
        {"regularity.orders", K::int_list, "1,2", "norms whose growth statistic is reported"},

        {"convergence.resolutions", K::int_list, "128,256,512", "grid sizes (geometric progression)"},
        {"convergence.eigen_t_end", K::real, "100", "eigenmode decay horizon, s"},
        {"convergence.cm_t_end", K::real, "1000", "CM self-convergence horizon, s"},

        {"output.snapshots", K::boolean, "true", "write initial and final state files"},
    };
    return keys;
}

inline const ConfigKey& config_key(const std::string& name) {
    for (const auto& k : config_keys())
        if (k.name == name) return k;
    throw ConfigError(fmt::format("unknown configuration key '{}'", name));
}

/// Raw key/value table; values are stored in canonical text form.
class ConfigTable {
public:
    ConfigTable() {
        for (const auto& k : config_keys()) values_[k.name] = canonicalize(k, k.default_value);
    }

    static ConfigTable from_file(const std::filesystem::path& path) {
        if (!std::filesystem::exists(path))
            throw ConfigError(fmt::format("config file '{}' does not exist", path.string()));
        std::ifstream in(path);
        if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
        return from_stream(in, path.string());
    }

    static ConfigTable from_stream(std::istream& in, const std::string& origin = "<config>") {
        boost::property_tree::ptree tree;
        try {
            boost::property_tree::ini_parser::read_ini(in, tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ParseError(fmt::format("{}:{}: {}", origin, e.line(), e.message()));
        }
        ConfigTable t;
        for (const auto& [section, body] : tree) {
            if (body.empty() && !body.data().empty())
                throw ConfigError(fmt::format("{}: key '{}' outside any [section]", origin, section));
            for (const auto& [name, value] : body) t.set(section + "." + name, value.data());
        }
        return t;
    }

    /// "key=value"
    void apply_override(std::string_view assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(fmt::format("override '{}' is not of the form key=value", assignment));
        set(detail::trim(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1)));
    }

    void set(const std::string& name, const std::string& raw) {
        const auto& key = config_key(name);
        values_[name] = canonicalize(key, detail::trim(raw));
    }

    const std::string& get(const std::string& name) const {
        config_key(name);
        return values_.at(name);
    }

    double real(const std::string& name) const { return detail::parse_real(name, get(name)); }
    long long integer(const std::string& name) const { return detail::parse_integer(name, get(name)); }
    bool boolean(const std::string& name) const { return detail::parse_bool(name, get(name)); }

    std::vector<double> reals(const std::string& name) const {
        std::vector<double> out;
        for (const auto& item : detail::split_list(get(name))) out.push_back(detail::parse_real(name, item));
        return out;
    }

    std::vector<int> integers(const std::string& name) const {
        std::vector<int> out;
        for (const auto& item : detail::split_list(get(name)))
            out.push_back(static_cast<int>(detail::parse_integer(name, item)));
        return out;
    }

    /// One "key = value" line per key, in key order; the input of config_hash.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += fmt::format("{} = {}\n", k, v);
        return out;
    }

    /// INI text that reads back to the same table.
    std::string to_ini() const {
        std::string out;
        std::string section;
        for (const auto& k : config_keys()) {
            const auto dot = k.name.find('.');
            const auto sec = k.name.substr(0, dot);
            if (sec != section) {
                out += fmt::format("{}[{}]\n", section.empty() ? "" : "\n", sec);
                section = sec;
            }
            out += fmt::format("{} = {}\n", k.name.substr(dot + 1), values_.at(k.name));
        }
        return out;
    }

    /// 64-bit FNV-1a of canonical(), as 16 hex digits.
    std::string hash() const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : canonical()) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return fmt::format("{:016x}", h);
    }

private:
    static std::string canonicalize(const ConfigKey& key, const std::string& v) {
        switch (key.kind) {
            case ValueKind::real: return fmt::format("{}", detail::parse_real(key.name, v));
            case ValueKind::integer: return fmt::format("{}", detail::parse_integer(key.name, v));
            case ValueKind::boolean: return detail::parse_bool(key.name, v) ? "true" : "false";
            case ValueKind::text:
                if (!key.choices.empty() &&
                    std::find(key.choices.begin(), key.choices.end(), v) == key.choices.end())
                    throw ConfigError(fmt::format("{}: '{}' is not one of {}", key.name, v,
                                                  fmt::join(key.choices, ", ")));
                return v;
            case ValueKind::real_list: {
                std::vector<std::string> items;
                for (const auto& s : detail::split_list(v))
                    items.push_back(fmt::format("{}", detail::parse_real(key.name, s)));
                return fmt::format("{}", fmt::join(items, ","));
            }
            case ValueKind::int_list: {
                std::vector<std::string> items;
                for (const auto& s : detail::split_list(v))
                    items.push_back(fmt::format("{}", detail::parse_integer(key.name, s)));
                return fmt::format("{}", fmt::join(items, ","));
            }
        }
        return v;
    }

    std::map<std::string, std::string> values_;
};

struct RegularityConfig {
    bool equilibrate = true;
    std::vector<int> orders{1, 2};
};

struct ConvergenceConfig {
    std::vector<int> resolutions{128, 256, 512};
    double eigen_t_end = 100.0;
    double cm_t_end = 1000.0;
};

struct ExperimentConfig {
    GridSpec grid;
    Quadrature quadrature = Quadrature::trapezoid;
    KineticsSpec kinetics;  // pheromone attached, period = grid.extent
    std::vector<double> alpha_list;
    StepperConfig stepper;
    double t_end = 10000.0;
    double sample_every = 10.0;
    double transient = 100.0;
    InitialBump initial;
    EquilibrateOptions equilibrate;
    DiagnosticsConfig diagnostics;
    Window speed_window;
    double peak_tol = 0.1;
    RegularityConfig regularity;
    ConvergenceConfig convergence;
    bool write_snapshots = true;
    std::string hash;

    void validate() const {
        grid.validate();
        kinetics.validate();
        stepper.validate();
        initial.validate(grid);
        if (!(t_end > 0.0)) throw ConfigError("run.t_end must be positive");
        if (!(sample_every > 0.0)) throw ConfigError("run.sample_every must be positive");
        if (!(transient >= 0.0)) throw ConfigError("run.transient must be non-negative");
        if (!(equilibrate.tol > 0.0) || !(equilibrate.cap > 0.0) || !(equilibrate.history_every > 0.0))
            throw ConfigError("equilibrate.tol, cap and history_every must be positive");
        if (!(speed_window.lo < speed_window.hi)) throw ConfigError("diagnostics.window_lo must be < window_hi");
        if (!(diagnostics.prominence_fraction > 0.0)) throw ConfigError("diagnostics.prominence_fraction must be positive");
        if (!(peak_tol > 0.0)) throw ConfigError("diagnostics.peak_tol must be positive");
        for (int s : diagnostics.sobolev_orders)
            if (s < 0 || s > grid.points / 4)
                throw ConfigError(fmt::format("diagnostics.sobolev_orders: {} outside [0, {}]", s, grid.points / 4));
        for (int s : regularity.orders)
            if (std::find(diagnostics.sobolev_orders.begin(), diagnostics.sobolev_orders.end(), s) ==
                diagnostics.sobolev_orders.end())
                throw ConfigError(fmt::format("regularity.orders: {} is not in diagnostics.sobolev_orders", s));
        for (double a : alpha_list)
            if (!(a >= 0.0)) throw ConfigError("kinetics.alpha_list entries must be non-negative");
    }

    ReactionSystem system() const { return ReactionSystem(grid, kinetics, quadrature); }
};

namespace detail {

template <class E>
E parse_choice(const std::string& v, std::initializer_list<E> all) {
    for (E e : all)
        if (to_string(e) == v) return e;
    throw ConfigError(fmt::format("unrecognized value '{}'", v));
}

}  // namespace detail

inline ExperimentConfig build_config(const ConfigTable& t) {
    ExperimentConfig c;
    c.grid.dim = static_cast<int>(t.integer("grid.dim"));
    c.grid.extent = t.real("grid.extent");
    c.grid.points = static_cast<int>(t.integer("grid.points"));
    c.quadrature = detail::parse_choice(t.get("grid.quadrature"), {Quadrature::trapezoid, Quadrature::simpson});

    auto& k = c.kinetics;
    k.variant = detail::parse_choice(t.get("kinetics.variant"),
                                     {Variant::simplest, Variant::goryachev, Variant::otsuji,
                                      Variant::pheromone_modified});
    k.a = t.real("kinetics.a");
    k.b = t.real("kinetics.b");
    k.c = t.real("kinetics.c");
    k.alpha = t.real("kinetics.alpha");
    k.k = t.real("kinetics.k");
    k.M = t.real("kinetics.M");
    c.alpha_list = t.reals("kinetics.alpha_list");

    PheromoneProfile p;
    p.kind = detail::parse_choice(t.get("pheromone.kind"),
                                  {PheromoneKind::heat_kernel, PheromoneKind::piecewise_linear,
                                   PheromoneKind::tabulated, PheromoneKind::zero});
    p.beta = t.real("pheromone.beta");
    p.gamma = t.real("pheromone.gamma");
    p.source_time = t.real("pheromone.source_time");
    p.source_distance = t.real("pheromone.source_distance");
    p.x_peak = t.real("pheromone.x_peak");
    p.height = t.real("pheromone.height");
    p.table = t.reals("pheromone.table");
    p.period = c.grid.extent;
    k.pheromone = p;

    auto& s = c.stepper;
    s.method = detail::parse_choice(t.get("stepper.method"), {Method::imex_bdf2, Method::explicit_rk4});
    s.dt_init = t.real("stepper.dt_init");
    s.dt_min = t.real("stepper.dt_min");
    s.dt_max = t.real("stepper.dt_max");
    s.rel_tol = t.real("stepper.rel_tol");
    s.abs_tol = t.real("stepper.abs_tol");
    s.diffusion = t.boolean("stepper.diffusion") ? Diffusion::on : Diffusion::off;
    s.check_positivity = t.boolean("stepper.check_positivity");
    s.negativity_tol = t.real("stepper.negativity_tol");
    s.stability_safety = t.real("stepper.stability_safety");

    c.t_end = t.real("run.t_end");
    c.sample_every = t.real("run.sample_every");
    c.transient = t.real("run.transient");

    c.initial.center = t.real("initial.bump_center");
    c.initial.width = t.real("initial.bump_width");
    c.initial.mass_fraction = t.real("initial.bump_mass_fraction");

    c.equilibrate.tol = t.real("equilibrate.tol");
    c.equilibrate.cap = t.real("equilibrate.cap");
    c.equilibrate.history_every = t.real("equilibrate.history_every");

    c.diagnostics.sobolev_orders = t.integers("diagnostics.sobolev_orders");
    c.diagnostics.prominence_fraction = t.real("diagnostics.prominence_fraction");
    c.diagnostics.quadrature = c.quadrature;
    c.speed_window = {t.real("diagnostics.window_lo"), t.real("diagnostics.window_hi")};
    c.peak_tol = t.real("diagnostics.peak_tol");

    c.regularity.equilibrate = t.boolean("regularity.equilibrate");
    c.regularity.orders = t.integers("regularity.orders");
    c.convergence.resolutions = t.integers("convergence.resolutions");
    c.convergence.eigen_t_end = t.real("convergence.eigen_t_end");
    c.convergence.cm_t_end = t.real("convergence.cm_t_end");
    c.write_snapshots = t.boolean("output.snapshots");

    c.hash = t.hash();
    c.validate();
    return c;
}

/// Help text listing every key with its default.
inline std::string describe_keys() {
    std::string out = "configuration keys (section.name = default):\n";
    for (const auto& k : config_keys()) {
        std::string extra;
        if (!k.choices.empty()) extra = fmt::format(" [{}]", fmt::join(k.choices, "|"));
        out += fmt::format("  {} = {}{}\n      {}\n", k.name, k.default_value.empty() ? "\"\"" : k.default_value,
                           extra, k.help);
    }
    return out;
}

}  // namespace mcas
