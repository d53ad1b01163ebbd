#pragma once

#include <cmath>

#include "crossdiff/grid.hpp"
#include "crossdiff/linsolve.hpp"

namespace crossdiff {

/// Solve the homogeneous-Neumann Poisson problem
///     -lap(phi) = w - mean(w),   mean(phi) = 0,
/// by conjugate gradients restricted to the mean-zero subspace (the mean is
/// re-projected out every iteration). Residual stops at tol relative to
/// ||w - mean(w)||.
inline Field neumann_poisson(const Field& w, double tol = 1e-10, int max_iter = -1) {
    Field rhs = w;
    const double wm = mean(w);
    for (int i = 0; i < rhs.size(); ++i) rhs[i] -= wm;
    Field phi(w.grid, 0.0);
    if (max_iter < 0) max_iter = 40 * w.grid.cells() + 200;
    auto remove_mean = [](Field& f) {
        double m = mean(f);
        for (int i = 0; i < f.size(); ++i) f[i] -= m;
    };
    conjugate_gradient([](const Field& p) { return -1.0 * laplacian_neumann(p); },
                       rhs, phi, tol, max_iter, remove_mean);
    return phi;
}

/// Dual norm ||w||_{(H1)'} = sqrt(mean(w)^2 + grad_energy(phi)) with phi the
/// Neumann potential of the mean-free part.
inline double h1_dual_norm(const Field& w, double tol = 1e-10) {
    const double wm = mean(w);
    Field phi = neumann_poisson(w, tol);
    return std::sqrt(wm * wm + grad_energy(phi));
}

} // namespace crossdiff
