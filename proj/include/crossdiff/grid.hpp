#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace crossdiff {

inline constexpr double pi = 3.14159265358979323846;

/// Uniform cell-centered mesh on an interval (dim 1) or rectangle (dim 2).
/// Cell centers sit at (i + 1/2) h per axis; homogeneous-Neumann operators
/// mirror the adjacent interior value into the ghost cell.
struct Grid {
    int dim = 1;
    std::array<int, 2> n{2, 1};          // cells per axis; n[1] == 1 in 1D
    std::array<double, 2> extent{1.0, 1.0};

    static Grid line(int nx, double length = 1.0) {
        if (nx < 2 || length <= 0.0) throw std::invalid_argument("Grid::line: need nx >= 2, length > 0");
        Grid g;
        g.dim = 1;
        g.n = {nx, 1};
        g.extent = {length, 1.0};
        return g;
    }

    static Grid box(int nx, int ny, double lx = 1.0, double ly = 1.0) {
        if (nx < 2 || ny < 2 || lx <= 0.0 || ly <= 0.0)
            throw std::invalid_argument("Grid::box: need nx, ny >= 2 and positive extents");
        Grid g;
        g.dim = 2;
        g.n = {nx, ny};
        g.extent = {lx, ly};
        return g;
    }

    double h(int axis) const { return extent[axis] / n[axis]; }
    double min_h() const { return dim == 1 ? h(0) : std::min(h(0), h(1)); }
    int cells() const { return dim == 1 ? n[0] : n[0] * n[1]; }
    double cell_volume() const { return dim == 1 ? h(0) : h(0) * h(1); }
    double measure() const { return dim == 1 ? extent[0] : extent[0] * extent[1]; }
    double center(int axis, int i) const { return (i + 0.5) * h(axis); }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim == b.dim && a.n == b.n && a.extent == b.extent;
    }
};

/// Grid function: one value per cell, x-index fastest (row-major in y).
struct Field {
    Grid grid;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid(g), v(static_cast<size_t>(g.cells()), fill) {}

    int size() const { return static_cast<int>(v.size()); }
    double& operator[](int i) { return v[static_cast<size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<size_t>(i)]; }
    double& at(int ix, int iy) { return v[static_cast<size_t>(iy) * grid.n[0] + ix]; }
    double at(int ix, int iy) const { return v[static_cast<size_t>(iy) * grid.n[0] + ix]; }
};

inline void require_same_grid(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("field operation on mismatched grids");
}

/// Sample f(x) (1D) or f(x, y) (2D) at cell centers.
inline Field sample(const Grid& g, const std::function<double(double, double)>& f) {
    Field out(g);
    if (g.dim == 1) {
        for (int i = 0; i < g.n[0]; ++i) out[i] = f(g.center(0, i), 0.0);
    } else {
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) out.at(i, j) = f(g.center(0, i), g.center(1, j));
    }
    return out;
}

inline Field sample(const Grid& g, const std::function<double(double)>& f) {
    return sample(g, [&](double x, double) { return f(x); });
}

// --- pointwise arithmetic -------------------------------------------------

inline Field operator+(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field out = a;
    for (int i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

inline Field operator-(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field out = a;
    for (int i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

inline Field operator*(double s, const Field& a) {
    Field out = a;
    for (int i = 0; i < out.size(); ++i) out[i] *= s;
    return out;
}

inline Field& operator+=(Field& a, const Field& b) {
    require_same_grid(a, b);
    for (int i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline void axpy(Field& y, double alpha, const Field& x) {
    require_same_grid(y, x);
    for (int i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

/// Plain (unweighted) dot product; fixed sequential order for determinism.
inline double dot(const Field& a, const Field& b) {
    require_same_grid(a, b);
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// --- quadrature and norms ---------------------------------------------------

/// Midpoint quadrature: h^dim * sum of values.
inline double integrate(const Field& f) {
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i) s += f[i];
    return s * f.grid.cell_volume();
}

inline double mean(const Field& f) { return integrate(f) / f.grid.measure(); }

inline double lp_norm(const Field& f, double p) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i) s += std::pow(std::abs(f[i]), p);
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

inline double l2_norm(const Field& f) {
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i) s += f[i] * f[i];
    return std::sqrt(s * f.grid.cell_volume());
}

inline double linf(const Field& f) {
    double m = 0.0;
    for (int i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i]));
    return m;
}

inline double min_value(const Field& f) {
    double m = f.size() ? f[0] : 0.0;
    for (int i = 1; i < f.size(); ++i) m = std::min(m, f[i]);
    return m;
}

inline double max_value(const Field& f) {
    double m = f.size() ? f[0] : 0.0;
    for (int i = 1; i < f.size(); ++i) m = std::max(m, f[i]);
    return m;
}

// --- Neumann Laplacian ------------------------------------------------------

/// 3-point (1D) / 5-point (2D) Laplacian with mirror ghost cells. Written in
/// flux form so the discrete divergence theorem sum(lap) = 0 telescopes
/// exactly and the operator is symmetric negative semidefinite with kernel
/// equal to the constants.
inline Field laplacian_neumann(const Field& f) {
    Field out(f.grid, 0.0);
    const int nx = f.grid.n[0];
    const double ihx2 = 1.0 / (f.grid.h(0) * f.grid.h(0));
    if (f.grid.dim == 1) {
        for (int i = 0; i < nx; ++i) {
            const double fr = (i + 1 < nx) ? f[i + 1] - f[i] : 0.0; // mirror ghost: zero flux
            const double fl = (i > 0) ? f[i] - f[i - 1] : 0.0;
            out[i] = (fr - fl) * ihx2;
        }
        return out;
    }
    const int ny = f.grid.n[1];
    const double ihy2 = 1.0 / (f.grid.h(1) * f.grid.h(1));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double c = f.at(i, j);
            const double fxr = (i + 1 < nx) ? f.at(i + 1, j) - c : 0.0;
            const double fxl = (i > 0) ? c - f.at(i - 1, j) : 0.0;
            const double fyr = (j + 1 < ny) ? f.at(i, j + 1) - c : 0.0;
            const double fyl = (j > 0) ? c - f.at(i, j - 1) : 0.0;
            out.at(i, j) = (fxr - fxl) * ihx2 + (fyr - fyl) * ihy2;
        }
    }
    return out;
}

/// Discrete Dirichlet energy sum_faces h^dim (df/h)^2; faces across the
/// boundary carry zero gradient. Equals dot(-laplacian(f), f) * cell_volume.
inline double grad_energy(const Field& f) {
    const int nx = f.grid.n[0];
    const double vol = f.grid.cell_volume();
    double s = 0.0;
    if (f.grid.dim == 1) {
        const double ihx2 = 1.0 / (f.grid.h(0) * f.grid.h(0));
        for (int i = 0; i + 1 < nx; ++i) {
            const double d = f[i + 1] - f[i];
            s += d * d * ihx2;
        }
        return s * vol;
    }
    const int ny = f.grid.n[1];
    const double ihx2 = 1.0 / (f.grid.h(0) * f.grid.h(0));
    const double ihy2 = 1.0 / (f.grid.h(1) * f.grid.h(1));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const double d = f.at(i + 1, j) - f.at(i, j);
            s += d * d * ihx2;
        }
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double d = f.at(i, j + 1) - f.at(i, j);
            s += d * d * ihy2;
        }
    return s * vol;
}

inline double l2_grad(const Field& f) { return std::sqrt(grad_energy(f)); }

} // namespace crossdiff
