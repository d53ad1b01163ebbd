#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "crossdiff/grid.hpp"
#include "crossdiff/stepper.hpp"

namespace crossdiff {

namespace detail {

// 17 significant digits round-trip an IEEE double exactly.
inline std::string full_precision(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace detail

/// Plain-text snapshot: header (dim, cells per axis, extents) followed by one
/// value per line in row-major order. Decimal with 17 significant digits, so
/// save/load round-trips bit-exactly.
inline void save_field(const std::string& path, const Field& f) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_field: cannot open " + path);
    const Grid& g = f.grid;
    out << "dim " << g.dim << "\n";
    out << "n " << g.n[0];
    if (g.dim == 2) out << " " << g.n[1];
    out << "\n";
    out << "extent " << detail::full_precision(g.extent[0]);
    if (g.dim == 2) out << " " << detail::full_precision(g.extent[1]);
    out << "\n";
    for (int i = 0; i < f.size(); ++i) out << detail::full_precision(f[i]) << "\n";
    if (!out) throw std::runtime_error("save_field: write failed for " + path);
}

inline Field load_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_field: cannot open " + path);
    std::string key;
    int dim = 0;
    if (!(in >> key >> dim) || key != "dim" || (dim != 1 && dim != 2))
        throw std::runtime_error("load_field: bad header in " + path);
    int nx = 0, ny = 1;
    if (!(in >> key >> nx) || key != "n") throw std::runtime_error("load_field: bad cell count in " + path);
    if (dim == 2 && !(in >> ny)) throw std::runtime_error("load_field: bad cell count in " + path);
    double ex = 0.0, ey = 1.0;
    if (!(in >> key >> ex) || key != "extent")
        throw std::runtime_error("load_field: bad extent in " + path);
    if (dim == 2 && !(in >> ey)) throw std::runtime_error("load_field: bad extent in " + path);

    Grid g = dim == 1 ? Grid::line(nx, ex) : Grid::box(nx, ny, ex, ey);
    Field f(g);
    for (int i = 0; i < f.size(); ++i)
        if (!(in >> f.v[static_cast<size_t>(i)]))
            throw std::runtime_error("load_field: truncated data in " + path);
    return f;
}

/// Diagnostics CSV with the fixed column set, one row per recorded step.
inline void write_csv(const std::string& path, const DiagnosticSeries& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << "t,mass_u,mass_v,l2_u,l2_v,l4_u,linf_u,linf_v,l2_grad_u,l2_grad_v,"
           "mass_residual,energy_residual\n";
    for (size_t k = 0; k < s.size(); ++k) {
        out << detail::full_precision(s.t[k]) << ','
            << detail::full_precision(s.mass_u[k]) << ','
            << detail::full_precision(s.mass_v[k]) << ','
            << detail::full_precision(s.l2_u[k]) << ','
            << detail::full_precision(s.l2_v[k]) << ','
            << detail::full_precision(s.l4_u[k]) << ','
            << detail::full_precision(s.linf_u[k]) << ','
            << detail::full_precision(s.linf_v[k]) << ','
            << detail::full_precision(s.l2_grad_u[k]) << ','
            << detail::full_precision(s.l2_grad_v[k]) << ','
            << detail::full_precision(s.mass_residual[k]) << ','
            << detail::full_precision(s.energy_residual[k]) << '\n';
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

/// Two-column CSV helper for report series (stability D(t), ladders, ...).
inline void write_csv_pairs(const std::string& path, const std::string& header_a,
                            const std::string& header_b, const std::vector<double>& a,
                            const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("write_csv_pairs: length mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv_pairs: cannot open " + path);
    out << header_a << ',' << header_b << '\n';
    for (size_t k = 0; k < a.size(); ++k)
        out << detail::full_precision(a[k]) << ',' << detail::full_precision(b[k]) << '\n';
}

} // namespace crossdiff
