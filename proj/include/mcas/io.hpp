#pragma once

// Text artifacts: trace CSV, state files, norm tables. Reals are written with 17
// significant digits so that files round-trip exactly and replays compare byte for byte.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mcas/diagnostics.hpp"
#include "mcas/error.hpp"
#include "mcas/grid.hpp"
#include "mcas/state.hpp"

namespace mcas {

inline std::string format_real(double v) { return fmt::format("{:.17g}", v); }

inline constexpr const char* trace_header =
    "time,mass_u,cm_plain,cm_circular,u_min,u_max,h1_norm,h2_norm,peak_count";

namespace detail {

inline double norm_or_nan(const TraceRecord& r, int order) {
    const auto it = r.h_norms.find(order);
    return it == r.h_norms.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << text;
    if (!out) throw Error(fmt::format("write to '{}' failed", path.string()));
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_cell(const std::string& cell, const std::string& origin, std::size_t row,
                         const char* column) {
    if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used == cell.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError(fmt::format("{}: row {}: column {}: cannot parse '{}'", origin, row, column, cell));
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace detail

inline std::string trace_row(const TraceRecord& r) {
    return fmt::format("{},{},{},{},{},{},{},{},{}", format_real(r.time), format_real(r.mass_u),
                       format_real(r.cm_plain), format_real(r.cm_circular), format_real(r.u_min),
                       format_real(r.u_max), format_real(detail::norm_or_nan(r, 1)),
                       format_real(detail::norm_or_nan(r, 2)), r.peak_count);
}

inline std::string trace_csv(std::span<const TraceRecord> trace) {
    std::string out = std::string(trace_header) + "\n";
    for (const auto& r : trace) out += trace_row(r) + "\n";
    return out;
}

inline void write_trace(const std::filesystem::path& path, std::span<const TraceRecord> trace) {
    detail::write_text(path, trace_csv(trace));
}

/// Reads a trace CSV. Row numbers in errors are 1-based file lines.
inline std::vector<TraceRecord> read_trace(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    const std::string origin = path.string();
    if (lines.empty() || lines[0] != trace_header)
        throw ParseError(fmt::format("{}: row 1: expected header '{}'", origin, trace_header));
    static const char* columns[] = {"time", "mass_u", "cm_plain", "cm_circular", "u_min",
                                    "u_max", "h1_norm", "h2_norm", "peak_count"};
    std::vector<TraceRecord> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto cells = detail::split_csv_row(lines[i]);
        if (cells.size() != 9)
            throw ParseError(fmt::format("{}: row {}: expected 9 columns, found {}", origin, i + 1, cells.size()));
        double v[9];
        for (int c = 0; c < 9; ++c) v[c] = detail::parse_cell(cells[c], origin, i + 1, columns[c]);
        TraceRecord r;
        r.time = v[0];
        r.mass_u = v[1];
        r.cm_plain = v[2];
        r.cm_circular = v[3];
        r.u_min = v[4];
        r.u_max = v[5];
        if (!std::isnan(v[6])) r.h_norms[1] = v[6];
        if (!std::isnan(v[7])) r.h_norms[2] = v[7];
        if (v[8] != std::floor(v[8]))
            throw ParseError(fmt::format("{}: row {}: column peak_count: not an integer", origin, i + 1));
        r.peak_count = static_cast<int>(v[8]);
        out.push_back(std::move(r));
    }
    return out;
}

/// Norm table with one column per order: time,h<s>_norm,...
inline std::string norms_csv(std::span<const TraceRecord> trace, std::span<const int> orders) {
    std::string out = "time";
    for (int s : orders) out += fmt::format(",h{}_norm", s);
    out += "\n";
    for (const auto& r : trace) {
        out += format_real(r.time);
        for (int s : orders) out += "," + format_real(detail::norm_or_nan(r, s));
        out += "\n";
    }
    return out;
}

/// State file: "key,value" metadata lines, then a "values" line, then one node value per
/// line (2D: x fastest).
inline std::string state_text(const SimState& s) {
    const auto& g = s.u.grid();
    std::string out = fmt::format("dim,{}\nextent,{}\npoints,{}\ntime,{}\nmass_u,{}\nstep_count,{}\nvalues\n",
                                  g.dim, format_real(g.extent), g.points, format_real(s.time),
                                  format_real(s.mass_u), s.step_count);
    for (double v : s.u.values()) out += format_real(v) + "\n";
    return out;
}

inline void write_state(const std::filesystem::path& path, const SimState& s) {
    detail::write_text(path, state_text(s));
}

inline SimState read_state(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    const std::string origin = path.string();
    const char* keys[] = {"dim", "extent", "points", "time", "mass_u", "step_count"};
    double meta[6];
    for (std::size_t i = 0; i < 6; ++i) {
        if (i >= lines.size()) throw ParseError(fmt::format("{}: row {}: missing '{}'", origin, i + 1, keys[i]));
        const auto cells = detail::split_csv_row(lines[i]);
        if (cells.size() != 2 || cells[0] != keys[i])
            throw ParseError(fmt::format("{}: row {}: expected '{},<value>'", origin, i + 1, keys[i]));
        meta[i] = detail::parse_cell(cells[1], origin, i + 1, keys[i]);
    }
    if (lines.size() < 7 || lines[6] != "values")
        throw ParseError(fmt::format("{}: row 7: expected 'values'", origin));
    GridSpec g{static_cast<int>(meta[0]), meta[1], static_cast<int>(meta[2])};
    g.validate();
    std::vector<double> values;
    for (std::size_t i = 7; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        values.push_back(detail::parse_cell(lines[i], origin, i + 1, "value"));
    }
    if (values.size() != g.size())
        throw ParseError(fmt::format("{}: expected {} values, found {}", origin, g.size(), values.size()));
    return {Field(g, std::move(values)), meta[3], meta[4], static_cast<std::int64_t>(meta[5])};
}

}  // namespace mcas
