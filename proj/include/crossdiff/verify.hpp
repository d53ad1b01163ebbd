#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/poisson.hpp"
#include "crossdiff/stepper.hpp"

namespace crossdiff {

// --- maximum principle -------------------------------------------------------

struct MaxPrincipleResult {
    bool pass = true;
    double worst_ratio = 0.0;
    double at_t = 0.0;
};

/// |v(t)|_inf must stay below e^{C_g t} |v(0)|_inf. The bound is attained by
/// spatially constant data with g == C_g, so the tolerance is a pure
/// roundoff allowance.
inline MaxPrincipleResult check_max_principle(const DiagnosticSeries& s, double C_g,
                                              double v0_linf, double tol = 1e-8) {
    MaxPrincipleResult r;
    if (v0_linf <= 0.0) {
        r.worst_ratio = 0.0;
        for (double x : s.linf_v) r.pass = r.pass && (x == 0.0);
        return r;
    }
    for (size_t k = 0; k < s.size(); ++k) {
        const double ratio = s.linf_v[k] / (std::exp(C_g * s.t[k]) * v0_linf);
        if (ratio > r.worst_ratio) {
            r.worst_ratio = ratio;
            r.at_t = s.t[k];
        }
    }
    r.pass = r.worst_ratio <= 1.0 + tol;
    return r;
}

// --- energy inequality -------------------------------------------------------

struct EnergyCheckResult {
    double max_violation = 0.0; // max over steps of the positive part of the residual
    double at_t = 0.0;
};

/// Scan the recorded per-step residuals of
///   (|u^{n+1}|_2^2 - |u^n|_2^2) / (2 dt) <= (a2^2/2a0) |grad v|_2^2 + C_f |u|_2^2.
/// The residual is O(dt)-consistent; its positive part is the violation.
inline EnergyCheckResult check_energy_estimate(const DiagnosticSeries& s, const ModelSpec&) {
    EnergyCheckResult r;
    for (size_t k = 0; k < s.size(); ++k) {
        if (s.energy_residual[k] > r.max_violation) {
            r.max_violation = s.energy_residual[k];
            r.at_t = s.t[k];
        }
    }
    return r;
}

struct EnergyEnvelopeResult {
    double violation_dt = 0.0;
    double violation_half_dt = 0.0;
};

/// Calibrate the O(dt) envelope by running once at cfg.dt and once at dt/2.
inline EnergyEnvelopeResult energy_envelope_check(const ModelSpec& model, SolverConfig cfg,
                                                  const Field& u0, const Field& v0) {
    EnergyEnvelopeResult r;
    r.violation_dt = check_energy_estimate(run(model, cfg, u0, v0).series, model).max_violation;
    cfg.dt *= 0.5;
    r.violation_half_dt = check_energy_estimate(run(model, cfg, u0, v0).series, model).max_violation;
    return r;
}

// --- trajectory collection ---------------------------------------------------

struct Trajectory {
    std::vector<double> t;
    std::vector<Field> u, v;
};

inline Trajectory run_trajectory(const ModelSpec& model, const SolverConfig& cfg, const Field& u0,
                                 const Field& v0) {
    Trajectory traj;
    Observer collect = [&traj](const State& st, int) {
        traj.t.push_back(st.t);
        traj.u.push_back(st.u);
        traj.v.push_back(st.v);
    };
    run(model, cfg, u0, v0, {collect});
    return traj;
}

// --- stability experiments (L2 and dual-norm functionals) --------------------

struct StabilityReport {
    double lambda = 0.0;  // L2 functional weight, or the dual M weight
    std::vector<double> t;
    std::vector<double> D; // distance functional per time
    double K = 0.0;        // Gronwall rate fitted on log D
    double gronwall_C = 0.0; // max_t D(t) / (e^{K t} D(0))
    double c_stab = 0.0;     // sup_t D(t) / D(0)
    double l2h1_integral = 0.0; // int_0^T (|grad du|^2 + |grad dv|^2) dt
    // norms of the unperturbed solution the paper's constants depend on
    double u2_linf = 0.0;
    double v2_linf = 0.0;
    double grad_u2_l4 = 0.0;       // L4 in space-time of the face gradient
    double grad_v2_l2t_linfx = 0.0; // L2 in time of the sup face gradient
};

namespace detail {

inline void fit_gronwall(StabilityReport& r) {
    // least squares on log D over times where D is meaningfully positive
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (size_t k = 0; k < r.t.size(); ++k) {
        if (r.D[k] <= 1e-30) continue;
        const double x = r.t[k], y = std::log(r.D[k]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++m;
    }
    if (m < 2) {
        r.K = 0.0;
        r.gronwall_C = r.D.empty() ? 0.0 : 1.0;
        r.c_stab = 1.0;
        return;
    }
    const double denom = m * sxx - sx * sx;
    r.K = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;

    const double D0 = r.D.front();
    r.gronwall_C = 0.0;
    r.c_stab = 0.0;
    if (D0 > 0.0) {
        for (size_t k = 0; k < r.t.size(); ++k) {
            r.gronwall_C = std::max(r.gronwall_C, r.D[k] / (std::exp(r.K * r.t[k]) * D0));
            r.c_stab = std::max(r.c_stab, r.D[k] / D0);
        }
    }
}

inline double face_grad_linf(const Field& f) {
    const int nx = f.grid.n[0];
    double m = 0.0;
    if (f.grid.dim == 1) {
        for (int i = 0; i + 1 < nx; ++i)
            m = std::max(m, std::abs(f[i + 1] - f[i]) / f.grid.h(0));
        return m;
    }
    const int ny = f.grid.n[1];
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i)
            m = std::max(m, std::abs(f.at(i + 1, j) - f.at(i, j)) / f.grid.h(0));
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i)
            m = std::max(m, std::abs(f.at(i, j + 1) - f.at(i, j)) / f.grid.h(1));
    return m;
}

inline double face_grad_l4_pow4(const Field& f) {
    const int nx = f.grid.n[0];
    const double vol = f.grid.cell_volume();
    double s = 0.0;
    auto acc = [&](double d, double h) {
        const double q = d / h;
        s += q * q * q * q * vol;
    };
    if (f.grid.dim == 1) {
        for (int i = 0; i + 1 < nx; ++i) acc(f[i + 1] - f[i], f.grid.h(0));
        return s;
    }
    const int ny = f.grid.n[1];
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) acc(f.at(i + 1, j) - f.at(i, j), f.grid.h(0));
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i) acc(f.at(i, j + 1) - f.at(i, j), f.grid.h(1));
    return s;
}

inline void require_matching_time_grids(const Trajectory& t1, const Trajectory& t2) {
    if (t1.t.size() != t2.t.size())
        throw std::runtime_error("stability experiment: paired runs took different step counts "
                                 "(dt retry ladder fired); rerun with a smaller dt");
}

inline void record_base_norms(StabilityReport& r, const Trajectory& base, double dt_avg) {
    double g4 = 0.0, g2i = 0.0;
    for (size_t k = 0; k < base.t.size(); ++k) {
        r.u2_linf = std::max(r.u2_linf, linf(base.u[k]));
        r.v2_linf = std::max(r.v2_linf, linf(base.v[k]));
        g4 += face_grad_l4_pow4(base.u[k]) * dt_avg;
        const double gs = face_grad_linf(base.v[k]);
        g2i += gs * gs * dt_avg;
    }
    r.grad_u2_l4 = std::pow(g4, 0.25);
    r.grad_v2_l2t_linfx = std::sqrt(g2i);
}

} // namespace detail

/// Default weight of the L2 stability functional D = |du|^2 + lambda |dv|^2,
/// taken a factor 2 above the proof's admissible threshold
/// a2^2/(a0 d_v) + a0/(4 d_v).
inline double default_stability_lambda(const ModelSpec& m) {
    const auto& d = m.diffusivity;
    return 2.0 * (d.a2 * d.a2 / (d.a0 * m.d_v) + d.a0 / (4.0 * m.d_v));
}

/// Default dual-functional weight, "large enough" in the sense of the
/// threshold M > 16 a2^2 / (a0 d_v).
inline double default_dual_m_weight(const ModelSpec& m) {
    const auto& d = m.diffusivity;
    return 16.0 * (d.a2 * d.a2 / (d.a0 * m.d_v) + 1.0);
}

/// Run the pair (u0, v0) and (u0 + du0, v0 + dv0) and assemble the
/// lambda-weighted L2 distance D(t) = |u1-u2|_2^2 + lambda |v1-v2|_2^2 with
/// the fitted Gronwall rate and stability constants.
inline StabilityReport stability_experiment(const ModelSpec& model, const SolverConfig& cfg,
                                            const Field& u0, const Field& v0, const Field& du0,
                                            const Field& dv0,
                                            std::optional<double> lambda = std::nullopt) {
    StabilityReport r;
    r.lambda = lambda.value_or(default_stability_lambda(model));

    Trajectory base = run_trajectory(model, cfg, u0, v0);
    Trajectory pert = run_trajectory(model, cfg, u0 + du0, v0 + dv0);
    detail::require_matching_time_grids(base, pert);

    r.t = base.t;
    r.D.resize(r.t.size());
    for (size_t k = 0; k < r.t.size(); ++k) {
        const Field du = pert.u[k] - base.u[k];
        const Field dv = pert.v[k] - base.v[k];
        const double nu = l2_norm(du), nv = l2_norm(dv);
        r.D[k] = nu * nu + r.lambda * nv * nv;
        if (k + 1 < r.t.size()) {
            const double dt_k = r.t[k + 1] - r.t[k];
            r.l2h1_integral += (grad_energy(du) + grad_energy(dv)) * dt_k;
        }
    }
    const double dt_avg = r.t.size() > 1 ? (r.t.back() - r.t.front()) / (r.t.size() - 1) : 0.0;
    detail::record_base_norms(r, base, dt_avg);
    detail::fit_gronwall(r);
    return r;
}

/// Same pairing under the (H1)' functional of the dual-norm stability proof:
/// D(t) = (du)_mean^2 + |grad phi|^2 + M |grad psi|^2 + (dv)_mean^2 with phi,
/// psi the Neumann potentials of the mean-free parts of du, dv.
inline StabilityReport dual_stability_experiment(const ModelSpec& model, const SolverConfig& cfg,
                                                 const Field& u0, const Field& v0,
                                                 const Field& du0, const Field& dv0,
                                                 std::optional<double> m_weight = std::nullopt,
                                                 double poisson_tol = 1e-10) {
    StabilityReport r;
    r.lambda = m_weight.value_or(default_dual_m_weight(model));

    Trajectory base = run_trajectory(model, cfg, u0, v0);
    Trajectory pert = run_trajectory(model, cfg, u0 + du0, v0 + dv0);
    detail::require_matching_time_grids(base, pert);

    r.t = base.t;
    r.D.resize(r.t.size());
    for (size_t k = 0; k < r.t.size(); ++k) {
        const Field du = pert.u[k] - base.u[k];
        const Field dv = pert.v[k] - base.v[k];
        const double mu_ = mean(du), mv = mean(dv);
        const Field phi = neumann_poisson(du, poisson_tol);
        const Field psi = neumann_poisson(dv, poisson_tol);
        r.D[k] = mu_ * mu_ + grad_energy(phi) + r.lambda * grad_energy(psi) + mv * mv;
        if (k + 1 < r.t.size()) {
            const double dt_k = r.t[k + 1] - r.t[k];
            r.l2h1_integral += (grad_energy(du) + grad_energy(dv)) * dt_k;
        }
    }
    const double dt_avg = r.t.size() > 1 ? (r.t.back() - r.t.front()) / (r.t.size() - 1) : 0.0;
    detail::record_base_norms(r, base, dt_avg);
    detail::fit_gronwall(r);
    return r;
}

// --- linear parabolic bounds (appendix checks) --------------------------------

struct AppendixReport {
    bool pass = true;
    double worst_ratio = 0.0; // |b(t)|_inf / (|b0|_inf e^{int sup r})
    double at_t = 0.0;
    // monitored quantities of the second a-priori estimate
    double dtb_l2 = 0.0;      // |d_t b|_{L2(Omega_T)} by backward differences
    double grad_b_linf_l2 = 0.0; // max_t |grad b|_{L2}
    double lap_b_l2 = 0.0;    // |lap b|_{L2(Omega_T)}
    double rb_l2 = 0.0;       // |r b|_{L2(Omega_T)}
};

/// Evolve d_t b = gamma lap(b) + r(t) b and test the sup bound
/// |b(t)|_inf <= |b0|_inf exp(int_0^t sup_x r). The discrete scheme satisfies
/// it exactly for nonnegative data when dt |r|_inf < 1, so tol is roundoff.
inline AppendixReport appendix_bound_check(const Field& gamma,
                                           const std::function<Field(double)>& r_of_t,
                                           const Field& b0, double dt, double t_end,
                                           double linear_tol = 1e-11, double tol = 1e-8) {
    AppendixReport rep;
    const double b0_linf = linf(b0);
    Field b = b0;
    double t = 0.0;
    double sup_r_integral = 0.0;
    double dtb2 = 0.0, lap2 = 0.0, rb2 = 0.0;
    rep.grad_b_linf_l2 = l2_grad(b0);

    const double t_eps = 1e-12 * std::max(1.0, t_end);
    while (t < t_end - t_eps) {
        const double step_dt = std::min(dt, t_end - t);
        const Field r = r_of_t(t);
        Field b_next = step_linear_parabolic(b, gamma, r, step_dt, linear_tol);

        sup_r_integral += step_dt * max_value(r);
        t += step_dt;

        const Field db = b_next - b;
        dtb2 += l2_norm(db) * l2_norm(db) / step_dt;
        const double lapn = l2_norm(laplacian_neumann(b_next));
        lap2 += step_dt * lapn * lapn;
        Field rb(b.grid);
        for (int i = 0; i < rb.size(); ++i) rb[i] = r[i] * b[i];
        rb2 += step_dt * l2_norm(rb) * l2_norm(rb);
        rep.grad_b_linf_l2 = std::max(rep.grad_b_linf_l2, l2_grad(b_next));

        b = std::move(b_next);
        const double bound = b0_linf * std::exp(sup_r_integral);
        const double ratio = bound > 0.0 ? linf(b) / bound : (linf(b) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.at_t = t;
        }
    }
    rep.dtb_l2 = std::sqrt(dtb2);
    rep.lap_b_l2 = std::sqrt(lap2);
    rep.rb_l2 = std::sqrt(rb2);
    rep.pass = rep.worst_ratio <= 1.0 + tol;
    return rep;
}

// --- convergence / regularization ladders -------------------------------------

struct ConvergenceReport {
    std::vector<double> param;
    std::vector<double> error;
    double order = std::numeric_limits<double>::quiet_NaN();
    bool asymptotic = false; // errors strictly decreasing along the ladder
};

/// Least-squares slope of log(error) against log(param).
inline double fit_order(const std::vector<double>& param, const std::vector<double>& error) {
    if (param.size() != error.size() || param.size() < 2)
        throw std::invalid_argument("fit_order: need at least two (param, error) pairs");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int m = static_cast<int>(param.size());
    for (int i = 0; i < m; ++i) {
        const double x = std::log(param[static_cast<size_t>(i)]);
        const double y = std::log(std::max(error[static_cast<size_t>(i)], 1e-300));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline ConvergenceReport make_convergence_report(std::vector<double> param,
                                                 std::vector<double> error) {
    ConvergenceReport r;
    r.param = std::move(param);
    r.error = std::move(error);
    if (r.param.size() >= 2) r.order = fit_order(r.param, r.error);
    r.asymptotic = true;
    for (size_t i = 0; i + 1 < r.error.size(); ++i)
        r.asymptotic = r.asymptotic && (r.error[i + 1] < r.error[i]);
    return r;
}

/// Average fine cells onto a coarser nested grid (factor must divide evenly).
inline Field restrict_to(const Field& fine, const Grid& coarse) {
    if (fine.grid.dim != coarse.dim) throw std::invalid_argument("restrict_to: dim mismatch");
    const int rx = fine.grid.n[0] / coarse.n[0];
    if (rx * coarse.n[0] != fine.grid.n[0])
        throw std::invalid_argument("restrict_to: grids are not nested");
    Field out(coarse, 0.0);
    if (coarse.dim == 1) {
        for (int i = 0; i < coarse.n[0]; ++i) {
            double s = 0.0;
            for (int k = 0; k < rx; ++k) s += fine[i * rx + k];
            out[i] = s / rx;
        }
        return out;
    }
    const int ry = fine.grid.n[1] / coarse.n[1];
    if (ry * coarse.n[1] != fine.grid.n[1])
        throw std::invalid_argument("restrict_to: grids are not nested");
    for (int j = 0; j < coarse.n[1]; ++j)
        for (int i = 0; i < coarse.n[0]; ++i) {
            double s = 0.0;
            for (int kj = 0; kj < ry; ++kj)
                for (int ki = 0; ki < rx; ++ki) s += fine.at(i * rx + ki, j * ry + kj);
            out.at(i, j) = s / (rx * ry);
        }
    return out;
}

using InitialSampler = std::function<double(double, double)>;
using ExactSolution = std::function<double(double, double, double)>; // (x, y, t)

/// Spatial refinement study in 1D. dt is scaled with h^2 from cfg.dt declared
/// at ns.front() so the first-order time error refines with the square of the
/// mesh and the fit isolates the spatial order. Errors are measured against
/// the exact solution when given, otherwise against the restricted finest run.
inline ConvergenceReport grid_convergence(const ModelSpec& model, SolverConfig cfg,
                                          const std::vector<int>& ns, double extent,
                                          const InitialSampler& u0f, const InitialSampler& v0f,
                                          const ExactSolution& exact = {}) {
    if (ns.size() < 3) throw std::invalid_argument("grid_convergence: ladder length >= 3 required");
    const double dt0 = cfg.dt;
    std::vector<Field> finals;
    std::vector<double> hs;
    for (int n : ns) {
        Grid g = Grid::line(n, extent);
        const double scale = static_cast<double>(ns.front()) / n;
        cfg.dt = dt0 * scale * scale;
        RunResult rr = run(model, cfg, sample(g, u0f), sample(g, v0f));
        finals.push_back(rr.state.u);
        hs.push_back(g.h(0));
    }
    std::vector<double> param, err;
    if (exact) {
        for (size_t k = 0; k < finals.size(); ++k) {
            Field ex = sample(finals[k].grid, [&](double x, double y) { return exact(x, y, cfg.t_end); });
            param.push_back(hs[k]);
            err.push_back(linf(finals[k] - ex));
        }
    } else {
        for (size_t k = 0; k + 1 < finals.size(); ++k) {
            Field ref = restrict_to(finals.back(), finals[k].grid);
            param.push_back(hs[k]);
            err.push_back(linf(finals[k] - ref));
        }
    }
    return make_convergence_report(std::move(param), std::move(err));
}

/// Time-step refinement at fixed grid; self-convergence against the finest dt.
inline ConvergenceReport dt_convergence(const ModelSpec& model, SolverConfig cfg,
                                        const std::vector<double>& dts, const Field& u0,
                                        const Field& v0) {
    if (dts.size() < 3) throw std::invalid_argument("dt_convergence: ladder length >= 3 required");
    std::vector<Field> finals;
    for (double dt : dts) {
        cfg.dt = dt;
        finals.push_back(run(model, cfg, u0, v0).state.u);
    }
    std::vector<double> param, err;
    for (size_t k = 0; k + 1 < finals.size(); ++k) {
        param.push_back(dts[k]);
        err.push_back(linf(finals[k] - finals.back()));
    }
    return make_convergence_report(std::move(param), std::move(err));
}

/// Mollification-scale ladder: run with initial data smoothed at each eps and
/// report the successive l2 trajectory differences at t_end (Cauchy test).
inline ConvergenceReport regularization_convergence_eps(const ModelSpec& model, SolverConfig cfg,
                                                        const std::vector<double>& eps_ladder,
                                                        const Field& u0, const Field& v0) {
    if (eps_ladder.size() < 2)
        throw std::invalid_argument("regularization ladder needs at least two members");
    std::vector<Field> finals;
    for (double eps : eps_ladder) {
        cfg.mollifier_eps = eps;
        finals.push_back(run(model, cfg, u0, v0).state.u);
    }
    std::vector<double> param, err;
    for (size_t k = 0; k + 1 < finals.size(); ++k) {
        param.push_back(eps_ladder[k]);
        err.push_back(l2_norm(finals[k] - finals[k + 1]));
    }
    return make_convergence_report(std::move(param), std::move(err));
}

/// Truncation-level ladder (use infinity for the untruncated member).
inline ConvergenceReport regularization_convergence_M(const ModelSpec& model, SolverConfig cfg,
                                                      const std::vector<double>& M_ladder,
                                                      const Field& u0, const Field& v0) {
    if (M_ladder.size() < 2)
        throw std::invalid_argument("regularization ladder needs at least two members");
    std::vector<Field> finals;
    for (double M : M_ladder) {
        cfg.truncation_M = M;
        finals.push_back(run(model, cfg, u0, v0).state.u);
    }
    std::vector<double> param, err;
    for (size_t k = 0; k + 1 < finals.size(); ++k) {
        param.push_back(M_ladder[k]);
        err.push_back(l2_norm(finals[k] - finals[k + 1]));
    }
    ConvergenceReport r;
    r.param = std::move(param);
    r.error = std::move(err);
    r.asymptotic = true;
    for (size_t i = 0; i + 1 < r.error.size(); ++i)
        r.asymptotic = r.asymptotic && (r.error[i + 1] <= r.error[i] + 1e-14);
    return r;
}

} // namespace crossdiff
