#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "crossdiff/errors.hpp"
#include "crossdiff/grid.hpp"

namespace crossdiff {

using LinearOp = std::function<Field(const Field&)>;

struct LinSolveResult {
    int iterations = 0;
    double rel_residual = 0.0;
};

/// Conjugate gradients for a symmetric positive (semi)definite operator.
/// Converges to ||rhs - A x|| <= tol * ||rhs||. An optional projection is
/// applied to the iterate and residual every iteration (used to pin the
/// mean-zero subspace of the Neumann Poisson problem).
inline LinSolveResult conjugate_gradient(const LinearOp& apply, const Field& rhs, Field& x,
                                         double tol, int max_iter,
                                         const std::function<void(Field&)>& project = {}) {
    const double rhs_norm = std::sqrt(dot(rhs, rhs));
    if (rhs_norm == 0.0) {
        x = Field(rhs.grid, 0.0);
        return {0, 0.0};
    }
    if (project) project(x);
    Field r = rhs - apply(x);
    if (project) project(r);
    Field p = r;
    double rr = dot(r, r);
    const double stop = tol * rhs_norm;
    if (std::sqrt(rr) <= stop) return {0, std::sqrt(rr) / rhs_norm};

    for (int it = 1; it <= max_iter; ++it) {
        Field ap = apply(p);
        const double pap = dot(p, ap);
        if (pap <= 0.0)
            throw NonConvergence("conjugate_gradient: operator not positive definite (pAp = " +
                                 std::to_string(pap) + ")");
        const double alpha = rr / pap;
        axpy(x, alpha, p);
        axpy(r, -alpha, ap);
        if (project) { project(x); project(r); }
        const double rr_new = dot(r, r);
        if (std::sqrt(rr_new) <= stop) return {it, std::sqrt(rr_new) / rhs_norm};
        const double beta = rr_new / rr;
        rr = rr_new;
        for (int i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    }
    throw NonConvergence("conjugate_gradient: no convergence in " + std::to_string(max_iter) +
                         " iterations (rel residual " + std::to_string(std::sqrt(rr) / rhs_norm) + ")");
}

/// BiCGStab for nonsymmetric operators (the Newton Jacobian of the implicit
/// divergence-form step). Same relative stopping rule as conjugate_gradient.
inline LinSolveResult bicgstab(const LinearOp& apply, const Field& rhs, Field& x,
                               double tol, int max_iter) {
    const double rhs_norm = std::sqrt(dot(rhs, rhs));
    if (rhs_norm == 0.0) {
        x = Field(rhs.grid, 0.0);
        return {0, 0.0};
    }
    Field r = rhs - apply(x);
    Field r0 = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    Field p(rhs.grid, 0.0), v(rhs.grid, 0.0);
    const double stop = tol * rhs_norm;

    for (int it = 1; it <= max_iter; ++it) {
        const double rho_new = dot(r0, r);
        if (rho_new == 0.0) break;
        if (it == 1) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            for (int i = 0; i < p.size(); ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho_new;
        v = apply(p);
        const double r0v = dot(r0, v);
        if (r0v == 0.0) break;
        alpha = rho / r0v;
        Field s = r;
        axpy(s, -alpha, v);
        if (std::sqrt(dot(s, s)) <= stop) {
            axpy(x, alpha, p);
            return {it, std::sqrt(dot(s, s)) / rhs_norm};
        }
        Field t = apply(s);
        const double tt = dot(t, t);
        if (tt == 0.0) break;
        omega = dot(t, s) / tt;
        axpy(x, alpha, p);
        axpy(x, omega, s);
        r = s;
        axpy(r, -omega, t);
        if (std::sqrt(dot(r, r)) <= stop) return {it, std::sqrt(dot(r, r)) / rhs_norm};
        if (omega == 0.0) break;
    }
    const double rel = std::sqrt(dot(r, r)) / rhs_norm;
    if (rel <= tol) return {max_iter, rel};
    throw NonConvergence("bicgstab: no convergence (rel residual " + std::to_string(rel) + ")");
}

} // namespace crossdiff
