#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "crossdiff/grid.hpp"

namespace crossdiff {

struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
};

/// Minimal self-contained line plot: frame, min/max tick labels, one polyline
/// per series with a small fixed palette. No external renderer.
inline void svg_line_plot(const std::string& path, const std::vector<SvgSeries>& series,
                          const std::string& title = "") {
    const int W = 760, H = 480, ML = 70, MR = 20, MT = 30, MB = 45;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]); xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]); ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmin < xmax)) { xmin -= 0.5; xmax += 0.5; }
    if (!(ymin < ymax)) { ymin -= 0.5; ymax += 0.5; }
    auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
    auto py = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("svg_line_plot: cannot open " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<rect x='" << ML << "' y='" << MT << "' width='" << W - ML - MR << "' height='"
        << H - MT - MB << "' fill='none' stroke='black'/>\n";
    if (!title.empty())
        out << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
            << "</text>\n";
    out << "<text x='" << ML << "' y='" << H - MB + 16 << "' font-size='11'>" << xmin << "</text>\n";
    out << "<text x='" << W - MR << "' y='" << H - MB + 16
        << "' text-anchor='end' font-size='11'>" << xmax << "</text>\n";
    out << "<text x='" << ML - 6 << "' y='" << H - MB << "' text-anchor='end' font-size='11'>"
        << ymin << "</text>\n";
    out << "<text x='" << ML - 6 << "' y='" << MT + 10 << "' text-anchor='end' font-size='11'>"
        << ymax << "</text>\n";

    int ci = 0;
    int legend_y = MT + 14;
    for (const auto& s : series) {
        const char* color = palette[ci % 6];
        out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (size_t i = 0; i < s.x.size(); ++i)
            out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        out << "'/>\n";
        if (!s.label.empty()) {
            out << "<text x='" << W - MR - 6 << "' y='" << legend_y
                << "' text-anchor='end' font-size='11' fill='" << color << "'>" << s.label
                << "</text>\n";
            legend_y += 14;
        }
        ++ci;
    }
    out << "</svg>\n";
}

/// Heatmap of a 2D field (or a 1D field drawn as a single row): one rect per
/// cell on a blue-white-red ramp, with the value range printed below.
inline void svg_heatmap(const std::string& path, const Field& f, const std::string& title = "") {
    const int nx = f.grid.n[0];
    const int ny = f.grid.dim == 2 ? f.grid.n[1] : 1;
    const int W = 720, MT = 30, MB = 30;
    const double cell = std::max(1.0, static_cast<double>(W) / nx);
    const int H = static_cast<int>(cell * ny) + MT + MB;

    double lo = min_value(f), hi = max_value(f);
    if (!(lo < hi)) hi = lo + 1.0;
    auto channel = [&](double t, double a, double b) {
        return static_cast<int>(std::lround(255.0 * (a + (b - a) * t)));
    };
    std::ofstream out(path);
    if (!out) throw std::runtime_error("svg_heatmap: cannot open " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    if (!title.empty())
        out << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
            << "</text>\n";
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double t = (f[j * nx + i] - lo) / (hi - lo);
            // blue (low) through white to red (high)
            const int r = t < 0.5 ? channel(t * 2.0, 0.2, 1.0) : 255;
            const int g = t < 0.5 ? channel(t * 2.0, 0.3, 1.0) : channel((t - 0.5) * 2.0, 1.0, 0.2);
            const int b = t < 0.5 ? 255 : channel((t - 0.5) * 2.0, 1.0, 0.15);
            out << "<rect x='" << i * cell << "' y='" << MT + (ny - 1 - j) * cell << "' width='"
                << cell + 0.5 << "' height='" << cell + 0.5 << "' fill='rgb(" << r << ',' << g
                << ',' << b << ")'/>\n";
        }
    out << "<text x='4' y='" << H - 8 << "' font-size='11'>min " << lo << "</text>\n";
    out << "<text x='" << W - 4 << "' y='" << H - 8 << "' text-anchor='end' font-size='11'>max "
        << hi << "</text>\n";
    out << "</svg>\n";
}

} // namespace crossdiff
