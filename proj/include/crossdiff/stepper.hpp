#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "crossdiff/errors.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/linsolve.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/regularize.hpp"

namespace crossdiff {

enum class Scheme { NonDivergenceIMEX, DivergenceExplicit, DivergenceImplicit };

inline std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::NonDivergenceIMEX: return "nondivergence-imex";
        case Scheme::DivergenceExplicit: return "divergence-explicit";
        case Scheme::DivergenceImplicit: return "divergence-implicit";
    }
    return "?";
}

struct SolverConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    Scheme scheme = Scheme::NonDivergenceIMEX;
    double linear_tol = 1e-11;
    double nonlinear_tol = 1e-11;
    double truncation_M = no_truncation; // finite M reproduces the truncated reactions
    double mollifier_eps = 0.0;          // > 0: pre-smooth the initial data
    double cfl_safety = 0.9;
    int max_dt_halvings = 20;
};

struct State {
    double t = 0.0;
    Field u;
    Field v;
    Field a; // cached A(u, v); authoritative unknown of the non-divergence scheme
};

struct DiagnosticSeries {
    std::vector<double> t;
    std::vector<double> mass_u, mass_v;
    std::vector<double> l2_u, l2_v, l4_u;
    std::vector<double> linf_u, linf_v;
    std::vector<double> l2_grad_u, l2_grad_v;
    std::vector<double> mass_residual, energy_residual;

    size_t size() const { return t.size(); }
};

struct RunResult {
    State state;
    DiagnosticSeries series;
    int steps = 0;
    int dt_retries = 0;
};

using Observer = std::function<void(const State&, int step)>;

namespace detail {

inline double truncated(double x, double M) { return std::min(x, M); }

// g truncated in both arguments, f only in u (the v-equation never needs it).
inline double g_M(const ReactionSpec& r, double u, double v, double M) {
    return r.g(truncated(u, M), truncated(v, M));
}

inline double f_M(const ReactionSpec& r, double u, double v, double M) {
    return r.f(truncated(u, M), v);
}

// Zero out negative values that survived the -1e-10 * scale guard; they are
// roundoff under the linear-solver tolerance, and the state contract keeps
// densities nonnegative after each step.
inline void clip_roundoff_negativity(Field& f) {
    for (int i = 0; i < f.size(); ++i)
        if (f[i] < 0.0) f[i] = 0.0;
}

} // namespace detail

/// One step of d_t v = d_v lap(v) + v g(u, v): diffusion implicit, reaction
/// explicit. The right-hand side v(1 + dt g) stays nonnegative under the
/// guard dt C_g (1 + |u|_inf + |v|_inf) < 1, and the implicit operator is an
/// M-matrix, so nonnegativity survives the solve. The step itself is linear
/// algebra and also accepts sign-changing data; run() enforces the density
/// nonnegativity contract.
inline Field step_v(const State& state, const ModelSpec& model, double dt,
                    double linear_tol = 1e-11, double truncation_M = no_truncation) {
    const auto& r = model.reaction;
    if (dt * r.C_g * (1.0 + linf(state.u) + linf(state.v)) >= 1.0)
        throw StepTooLarge("step_v: dt C_g (1+|u|+|v|) >= 1");

    Field rhs = state.v;
    for (int i = 0; i < rhs.size(); ++i)
        rhs[i] = state.v[i] * (1.0 + dt * detail::g_M(r, state.u[i], state.v[i], truncation_M));

    const double dv = model.d_v;
    Field x = state.v; // warm start
    conjugate_gradient(
        [dv, dt](const Field& p) {
            Field ap = laplacian_neumann(p);
            for (int i = 0; i < ap.size(); ++i) ap[i] = p[i] - dt * dv * ap[i];
            return ap;
        },
        rhs, x, linear_tol, 100 * rhs.grid.cells() + 200);
    return x;
}

/// One step of the non-divergence equation d_t a = mu(a, v) lap(a) + a s:
/// frozen-coefficient implicit diffusion, explicit source. dtv must be the
/// backward difference (v_next - v)/dt of the v-step taken first. The
/// variable-coefficient system is symmetrized by dividing each row by
/// mu >= a0, leaving diag(1/mu) - dt lap for plain CG.
inline Field step_a_nondiv(const State& state, const ModelSpec& model, double dt,
                           const Field& v_next, const Field& dtv, const SolverConfig& cfg) {
    const auto& diff = model.diffusivity;
    const auto& reac = model.reaction;
    require_same_grid(state.a, v_next);

    const int n = state.a.size();
    Field mu_f(state.a.grid), rhs(state.a.grid);
    for (int i = 0; i < n; ++i) {
        const double ai = state.a[i], vi = v_next[i];
        const double tol = cfg.nonlinear_tol * std::max(1.0, ai);
        mu_f[i] = mu(diff, ai, vi, tol);
        const double s = source_s(diff, reac, ai, vi, dtv[i], cfg.truncation_M, tol);
        const double growth = 1.0 + dt * s;
        if (growth < 0.0) throw StepTooLarge("step_a_nondiv: 1 + dt s < 0");
        rhs[i] = ai * growth / mu_f[i];
    }

    Field x = state.a; // warm start
    conjugate_gradient(
        [&mu_f, dt](const Field& p) {
            Field ap = laplacian_neumann(p);
            for (int i = 0; i < ap.size(); ++i) ap[i] = p[i] / mu_f[i] - dt * ap[i];
            return ap;
        },
        rhs, x, cfg.linear_tol, 100 * n + 200);

    if (min_value(x) < -1e-10 * std::max(1.0, linf(state.a)))
        throw StepTooLarge("step_a_nondiv: negativity beyond roundoff tolerance");
    detail::clip_roundoff_negativity(x);
    return x;
}

/// Forward-Euler step of d_t u = lap(A(u, v)) + u f(u, v). Conserves
/// integral(u) exactly up to the reaction term (flux-form Laplacian).
inline Field step_u_div_explicit(const State& state, const ModelSpec& model, double dt,
                                 const Field& v_next, const SolverConfig& cfg) {
    const Grid& g = state.u.grid;
    const double hmin = g.min_h();
    const double dt_max = cfg.cfl_safety * hmin * hmin / (2.0 * g.dim * model.diffusivity.a1);
    if (dt > dt_max)
        throw CflViolation("step_u_div_explicit: dt " + std::to_string(dt) + " exceeds CFL bound " +
                           std::to_string(dt_max));

    Field A_f(g);
    for (int i = 0; i < A_f.size(); ++i) A_f[i] = model.diffusivity.A(state.u[i], v_next[i]);
    Field lapA = laplacian_neumann(A_f);
    Field out = state.u;
    for (int i = 0; i < out.size(); ++i)
        out[i] += dt * (lapA[i] + state.u[i] *
                                      detail::f_M(model.reaction, state.u[i], v_next[i], cfg.truncation_M));
    if (min_value(out) < -1e-10 * std::max(1.0, linf(state.u)))
        throw StepTooLarge("step_u_div_explicit: negativity beyond roundoff tolerance");
    detail::clip_roundoff_negativity(out);
    return out;
}

/// Backward step of the divergence form: solve
///     x - dt lap(A(x, v_next)) = u + dt u f(u, v_next)
/// by damped Newton with Jacobian w -> w - dt lap(d1A(x, v_next) w) solved by
/// BiCGStab; a lagged-coefficient Picard sweep takes over when a Newton step
/// fails to reduce the residual.
inline Field step_u_div_implicit(const State& state, const ModelSpec& model, double dt,
                                 const Field& v_next, const SolverConfig& cfg) {
    const auto& diff = model.diffusivity;
    const Grid& g = state.u.grid;
    const int n = state.u.size();

    Field rhs = state.u;
    for (int i = 0; i < n; ++i)
        rhs[i] = state.u[i] * (1.0 + dt * detail::f_M(model.reaction, state.u[i], v_next[i],
                                                      cfg.truncation_M));
    const double rhs_norm = std::max(l2_norm(rhs), 1e-300);

    auto residual = [&](const Field& x) {
        Field A_f(g);
        for (int i = 0; i < n; ++i) A_f[i] = diff.A(x[i], v_next[i]);
        Field lapA = laplacian_neumann(A_f);
        Field res(g);
        for (int i = 0; i < n; ++i) res[i] = x[i] - dt * lapA[i] - rhs[i];
        return res;
    };

    Field x = state.u;
    Field res = residual(x);
    double res_norm = l2_norm(res);

    const int max_newton = 60;
    for (int it = 0; it < max_newton; ++it) {
        if (res_norm <= cfg.nonlinear_tol * rhs_norm) {
            if (min_value(x) < -1e-10 * std::max(1.0, linf(state.u)))
                throw StepTooLarge("step_u_div_implicit: negativity beyond roundoff tolerance");
            detail::clip_roundoff_negativity(x);
            return x;
        }

        Field mu_f(g);
        for (int i = 0; i < n; ++i) mu_f[i] = diff.d1A(x[i], v_next[i]);

        Field delta(g, 0.0);
        Field neg_res = -1.0 * res;
        bool newton_ok = true;
        try {
            bicgstab(
                [&mu_f, dt](const Field& w) {
                    Field mw = w;
                    for (int i = 0; i < mw.size(); ++i) mw[i] *= mu_f[i];
                    Field ap = laplacian_neumann(mw);
                    for (int i = 0; i < ap.size(); ++i) ap[i] = w[i] - dt * ap[i];
                    return ap;
                },
                neg_res, delta, cfg.linear_tol, 200 * n + 400);
        } catch (const NonConvergence&) {
            newton_ok = false;
        }

        if (newton_ok) {
            double step = 1.0;
            for (int bt = 0; bt < 12; ++bt) {
                Field trial = x;
                axpy(trial, step, delta);
                Field tres = residual(trial);
                const double tnorm = l2_norm(tres);
                if (tnorm < res_norm * (1.0 - 1e-4 * step)) {
                    x = trial;
                    res = tres;
                    res_norm = tnorm;
                    newton_ok = true;
                    break;
                }
                step *= 0.5;
                newton_ok = false;
            }
        }

        if (!newton_ok) {
            // Picard: linearize A around the current iterate with lagged slope
            // and solve the symmetrized frozen-coefficient system by CG.
            Field corr(g);
            for (int i = 0; i < n; ++i) corr[i] = diff.A(x[i], v_next[i]) - mu_f[i] * x[i];
            Field lap_corr = laplacian_neumann(corr);
            Field prhs(g);
            for (int i = 0; i < n; ++i) prhs[i] = (rhs[i] + dt * lap_corr[i]) / mu_f[i];
            Field xnew = x;
            conjugate_gradient(
                [&mu_f, dt](const Field& p) {
                    Field ap = laplacian_neumann(p);
                    for (int i = 0; i < ap.size(); ++i) ap[i] = p[i] / mu_f[i] - dt * ap[i];
                    return ap;
                },
                prhs, xnew, cfg.linear_tol, 100 * n + 200);
            x = xnew;
            res = residual(x);
            res_norm = l2_norm(res);
        }
    }
    throw NonConvergence("step_u_div_implicit: Newton/Picard stalled at relative residual " +
                         std::to_string(res_norm / rhs_norm));
}

/// One implicit-diffusion / explicit-reaction step of the scalar linear
/// parabolic problem d_t b = gamma(x) lap(b) + r(x) b with gamma >= gamma0 > 0.
inline Field step_linear_parabolic(const Field& b, const Field& gamma, const Field& r, double dt,
                                   double linear_tol = 1e-11) {
    require_same_grid(b, gamma);
    require_same_grid(b, r);
    if (min_value(gamma) <= 0.0)
        throw std::invalid_argument("step_linear_parabolic: gamma must be strictly positive");

    Field rhs(b.grid);
    for (int i = 0; i < rhs.size(); ++i) rhs[i] = b[i] * (1.0 + dt * r[i]) / gamma[i];
    Field x = b;
    conjugate_gradient(
        [&gamma, dt](const Field& p) {
            Field ap = laplacian_neumann(p);
            for (int i = 0; i < ap.size(); ++i) ap[i] = p[i] / gamma[i] - dt * ap[i];
            return ap;
        },
        rhs, x, linear_tol, 100 * b.size() + 200);
    return x;
}

namespace detail {

struct StepOutcome {
    Field u_next, v_next, a_next;
    double f_mass_rate; // integral(u f) actually fed to the step, for the mass identity
};

inline StepOutcome advance(const State& state, const ModelSpec& model, const SolverConfig& cfg,
                           double dt) {
    StepOutcome out;
    out.v_next = step_v(state, model, dt, cfg.linear_tol, cfg.truncation_M);
    if (min_value(out.v_next) < -1e-10 * (1.0 + linf(state.v)))
        throw StepTooLarge("advance: v developed negativity beyond roundoff tolerance");
    clip_roundoff_negativity(out.v_next);
    Field dtv = out.v_next - state.v;
    for (int i = 0; i < dtv.size(); ++i) dtv[i] /= dt;

    switch (cfg.scheme) {
        case Scheme::NonDivergenceIMEX: {
            out.a_next = step_a_nondiv(state, model, dt, out.v_next, dtv, cfg);
            out.u_next = Field(state.u.grid);
            for (int i = 0; i < out.u_next.size(); ++i) {
                const double tol = cfg.nonlinear_tol * std::max(1.0, out.a_next[i]);
                out.u_next[i] = invert_A(model.diffusivity, out.a_next[i], out.v_next[i], tol,
                                         state.u[i]);
            }
            break;
        }
        case Scheme::DivergenceExplicit:
            out.u_next = step_u_div_explicit(state, model, dt, out.v_next, cfg);
            break;
        case Scheme::DivergenceImplicit:
            out.u_next = step_u_div_implicit(state, model, dt, out.v_next, cfg);
            break;
    }
    if (cfg.scheme != Scheme::NonDivergenceIMEX) {
        out.a_next = Field(state.u.grid);
        for (int i = 0; i < out.a_next.size(); ++i)
            out.a_next[i] = model.diffusivity.A(out.u_next[i], out.v_next[i]);
    }

    Field uf(state.u.grid);
    for (int i = 0; i < uf.size(); ++i)
        uf[i] = state.u[i] * f_M(model.reaction, state.u[i], out.v_next[i], cfg.truncation_M);
    out.f_mass_rate = integrate(uf);
    return out;
}

inline void record(DiagnosticSeries& s, const State& st, double mass_resid, double energy_resid) {
    s.t.push_back(st.t);
    s.mass_u.push_back(integrate(st.u));
    s.mass_v.push_back(integrate(st.v));
    s.l2_u.push_back(l2_norm(st.u));
    s.l2_v.push_back(l2_norm(st.v));
    s.l4_u.push_back(lp_norm(st.u, 4.0));
    s.linf_u.push_back(linf(st.u));
    s.linf_v.push_back(linf(st.v));
    s.l2_grad_u.push_back(l2_grad(st.u));
    s.l2_grad_v.push_back(l2_grad(st.v));
    s.mass_residual.push_back(mass_resid);
    s.energy_residual.push_back(energy_resid);
}

} // namespace detail

/// Advance the coupled system to t_end: v first, then u (through a in the
/// non-divergence scheme), recording the norm/identity diagnostics every
/// step. Guard failures trigger a per-step dt-halving retry ladder.
inline RunResult run(const ModelSpec& model, const SolverConfig& cfg, Field u0, Field v0,
                     const std::vector<Observer>& observers = {}) {
    require_same_grid(u0, v0);
    if (cfg.mollifier_eps > 0.0) {
        Mollifier m(cfg.mollifier_eps);
        u0 = mollify_space(u0, m);
        v0 = mollify_space(v0, m);
    }
    if (min_value(u0) < -1e-12 || min_value(v0) < -1e-12)
        throw std::invalid_argument("run: initial data must be nonnegative");
    detail::clip_roundoff_negativity(u0);
    detail::clip_roundoff_negativity(v0);

    RunResult res;
    State& st = res.state;
    st.t = 0.0;
    st.u = u0;
    st.v = v0;
    st.a = Field(u0.grid);
    for (int i = 0; i < st.a.size(); ++i) st.a[i] = model.diffusivity.A(u0[i], v0[i]);

    detail::record(res.series, st, 0.0, 0.0);
    for (const auto& obs : observers) obs(st, 0);

    const double energy_coef = model.diffusivity.a2 * model.diffusivity.a2 /
                               (2.0 * model.diffusivity.a0);
    const double t_eps = 1e-12 * std::max(1.0, cfg.t_end);

    while (st.t < cfg.t_end - t_eps) {
        double dt = std::min(cfg.dt, cfg.t_end - st.t);
        detail::StepOutcome next;
        int halvings = 0;
        for (;;) {
            try {
                next = detail::advance(st, model, cfg, dt);
                break;
            } catch (const StepTooLarge&) {
                if (++halvings > cfg.max_dt_halvings) throw;
            } catch (const NonConvergence&) {
                if (++halvings > cfg.max_dt_halvings) throw;
            }
            dt *= 0.5;
            ++res.dt_retries;
        }

        const double mass_resid = integrate(next.u_next) - integrate(st.u) - dt * next.f_mass_rate;
        const double l2u_old = l2_norm(st.u);
        const double l2u_new = l2_norm(next.u_next);
        const double energy_resid = 0.5 * (l2u_new * l2u_new - l2u_old * l2u_old) / dt -
                                    energy_coef * grad_energy(next.v_next) -
                                    model.reaction.C_f * l2u_old * l2u_old;

        st.u = std::move(next.u_next);
        st.v = std::move(next.v_next);
        st.a = std::move(next.a_next);
        st.t += dt;
        ++res.steps;

        detail::record(res.series, st, mass_resid, energy_resid);
        for (const auto& obs : observers) obs(st, res.steps);
    }
    return res;
}

} // namespace crossdiff
