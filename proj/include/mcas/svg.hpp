#pragma once

// Minimal deterministic SVG line and scatter plots.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace mcas::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false;  // points instead of a polyline
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::string note;  // shown instead of axes when there is nothing to draw
};

namespace detail {

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10.0 * mag;
}

inline const char* color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    return palette[i % 8];
}

}  // namespace detail

inline std::string render(const Plot& p) {
    const double W = 640, H = 420, L = 70, R = 160, T = 40, B = 50;
    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W, H, W, H, (L + W - R) / 2, detail::escape(p.title));

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : p.series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) {
        out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n</svg>\n", W / 2, H / 2,
                           detail::escape(p.note.empty() ? "no data" : p.note));
        return out;
    }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    const double pw = W - L - R, ph = H - T - B;
    auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return T + ph - (y - y0) / (y1 - y0) * ph; };

    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", L, T,
                       pw, ph);
    const double xs = detail::nice_step(x1 - x0, 6), ys = detail::nice_step(y1 - y0, 6);
    for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs)
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#ccc\"/>"
                           "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">{4:g}</text>\n",
                           sx(t), T, T + ph, T + ph + 16, std::fabs(t) < 1e-12 * xs ? 0.0 : t);
    for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys)
        out += fmt::format("<line x1=\"{1}\" y1=\"{0:.2f}\" x2=\"{2}\" y2=\"{0:.2f}\" stroke=\"#ccc\"/>"
                           "<text x=\"{3}\" y=\"{0:.2f}\" text-anchor=\"end\" dominant-baseline=\"middle\">{4:g}</text>\n",
                           sy(t), L, L + pw, L - 6, std::fabs(t) < 1e-12 * ys ? 0.0 : t);
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", L + pw / 2, H - 12,
                       detail::escape(p.x_label));
    out += fmt::format("<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                       T + ph / 2, detail::escape(p.y_label));

    for (std::size_t k = 0; k < p.series.size(); ++k) {
        const auto& s = p.series[k];
        const char* c = detail::color(k);
        if (s.markers) {
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\"/>\n", sx(s.x[i]),
                                       sy(s.y[i]), c);
        } else {
            std::string pts;
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                    pts += fmt::format("{:.2f},{:.2f} ", sx(s.x[i]), sy(s.y[i]));
            out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", c, pts);
        }
        const double ly = T + 14 + 18 * static_cast<double>(k);
        out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"4\" fill=\"{}\"/>"
                           "<text x=\"{}\" y=\"{}\">{}</text>\n",
                           L + pw + 12, ly - 4, c, L + pw + 32, ly, detail::escape(s.label));
    }
    out += "</svg>\n";
    return out;
}

}  // namespace mcas::svg
