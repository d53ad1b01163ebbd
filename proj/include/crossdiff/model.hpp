#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "crossdiff/errors.hpp"
#include "crossdiff/rootfind.hpp"

namespace crossdiff {

using Coefficient = std::function<double(double, double)>; // of (u, v) or (a, v)

namespace detail {

/// Centered difference with step 1e-6 * max(1, |x|); falls back to a forward
/// difference when x - step would leave the nonnegative quadrant.
inline double fd_partial(const std::function<double(double)>& f, double x) {
    const double step = 1e-6 * std::max(1.0, std::abs(x));
    if (x - step >= 0.0) return (f(x + step) - f(x - step)) / (2.0 * step);
    return (f(x + step) - f(x)) / step;
}

} // namespace detail

/// Diffusion rate B(u, v) of the u-species together with A(u, v) := u B(u, v)
/// and the structural bounds a0 <= B, d1A <= a1, |d2A| <= a2, |d2B| <= a3.
/// Partials default to finite differences of A when closed forms are absent.
struct DiffusivitySpec {
    Coefficient B;
    Coefficient d1A_closed; // optional
    Coefficient d2A_closed; // optional
    Coefficient d2B_closed; // optional
    double a0 = 1.0;
    double a1 = 1.0;
    double a2 = 1.0;
    double a3 = 1.0;

    double A(double u, double v) const { return u * B(u, v); }

    double d1A(double u, double v) const {
        if (d1A_closed) return d1A_closed(u, v);
        return detail::fd_partial([&](double x) { return A(x, v); }, u);
    }

    double d2A(double u, double v) const {
        if (d2A_closed) return d2A_closed(u, v);
        return detail::fd_partial([&](double y) { return A(u, y); }, v);
    }

    double d2B(double u, double v) const {
        if (d2B_closed) return d2B_closed(u, v);
        return detail::fd_partial([&](double y) { return B(u, y); }, v);
    }

    static DiffusivitySpec from_B(Coefficient b, double a0, double a1, double a2, double a3) {
        DiffusivitySpec d;
        d.B = std::move(b);
        d.a0 = a0; d.a1 = a1; d.a2 = a2; d.a3 = a3;
        return d;
    }

    static DiffusivitySpec constant(double value) {
        DiffusivitySpec d = from_B([value](double, double) { return value; },
                                   value, value, 1e-12, 1e-12);
        d.d1A_closed = [value](double, double) { return value; };
        d.d2A_closed = [](double, double) { return 0.0; };
        d.d2B_closed = [](double, double) { return 0.0; };
        return d;
    }
};

/// Lotka-Volterra type reaction pair with the growth/decay constants of the
/// bounds -C(1+u+v) <= f, g <= C and |partials| <= C'.
struct ReactionSpec {
    Coefficient f;
    Coefficient g;
    double C_f = 1.0;
    double C_f_prime = 1.0;
    double C_g = 1.0;
    double C_g_prime = 1.0;

    static ReactionSpec zero() {
        ReactionSpec r;
        r.f = [](double, double) { return 0.0; };
        r.g = [](double, double) { return 0.0; };
        return r;
    }
};

/// Microscopic starvation-driven parametrization: the population u splits into
/// a slow mover u_a and a fast mover u_b according to the balance
///     phi(b u_b + d v) u_b = psi(a u_a + c v) u_a,   u_a + u_b = u,
/// and the macroscopic diffusivity is A(u, v) = d_a u_a + d_b u_b.
struct StarvationSpec {
    std::function<double(double)> phi;
    std::function<double(double)> psi;
    double a = 1.0, b = 1.0, c = 1.0, d = 1.0;
    double d_a = 1.0;
    double d_b = 2.0;
};

/// Unique split (u_a, u_b) with u_a + u_b = u exactly. The root of
/// F(s) = phi(b(u-s)+dv)(u-s) - psi(as+cv)s on [0, u] is found by
/// bisection-safeguarded Newton; F(0) >= 0 >= F(u) holds for nonnegative
/// conversion rates and is verified at solve time.
inline std::pair<double, double> starvation_split(const StarvationSpec& sp, double u, double v,
                                                  double tol = 1e-14) {
    if (u <= 0.0) return {0.0, 0.0};
    auto F = [&](double s) {
        const double ub = u - s;
        return sp.phi(sp.b * ub + sp.d * v) * ub - sp.psi(sp.a * s + sp.c * v) * s;
    };
    auto dF = [&](double s) {
        const double step = 1e-7 * std::max(1.0, u);
        const double lo = std::max(0.0, s - step), hi = std::min(u, s + step);
        return (F(hi) - F(lo)) / (hi - lo);
    };
    RootOptions opt;
    opt.residual_tol = tol * (1.0 + u);
    const double ua = newton_bisection(F, dF, 0.0, u, opt);
    return {ua, u - ua};
}

/// Macroscopic diffusivity A(u, v) = d_a u_a + d_b u_b of the split.
inline double starvation_A(const StarvationSpec& sp, double u, double v, double tol = 1e-14) {
    auto [ua, ub] = starvation_split(sp, u, v, tol);
    return sp.d_a * ua + sp.d_b * ub;
}

/// Wrap a starvation parametrization as a DiffusivitySpec. B(u,v) = A(u,v)/u
/// extends continuously to u = 0 with the limit split fraction
/// phi(dv)/(phi(dv)+psi(cv)). The B bounds [min(d_a,d_b), max(d_a,d_b)] are
/// exact; a2, a3 are caller-declared (audited, not derived).
inline DiffusivitySpec starvation_diffusivity(const StarvationSpec& sp, double a2, double a3) {
    DiffusivitySpec d;
    d.B = [sp](double u, double v) {
        if (u > 1e-12) return starvation_A(sp, u, v) / u;
        const double p = sp.phi(sp.d * v), q = sp.psi(sp.c * v);
        const double alpha = (p + q > 0.0) ? p / (p + q) : 0.5; // limit of u_a/u
        return sp.d_a * alpha + sp.d_b * (1.0 - alpha);
    };
    d.a0 = std::min(sp.d_a, sp.d_b);
    d.a1 = std::max(sp.d_a, sp.d_b);
    d.a2 = a2;
    d.a3 = a3;
    return d;
}

enum class ModelOrigin { Direct, StarvationDriven };

struct ModelSpec {
    DiffusivitySpec diffusivity;
    ReactionSpec reaction;
    double d_v = 1.0;
    ModelOrigin origin = ModelOrigin::Direct;
    std::optional<StarvationSpec> starvation;
};

// --- change of variables a = A(u, v) ---------------------------------------

/// Reciprocal U(a, v) of A in its first argument: the u >= 0 with
/// A(u, v) = a to absolute residual tol. Since a0 <= B <= a1, the solution
/// is bracketed in [a/a1, a/a0]; Newton steps use d1A and fall back to
/// bisection whenever they leave the bracket.
inline double invert_A(const DiffusivitySpec& diff, double a, double v, double tol = 1e-12,
                       double hint = std::numeric_limits<double>::quiet_NaN()) {
    if (a < 0.0) throw std::invalid_argument("invert_A: a must be nonnegative");
    if (a == 0.0) return 0.0;
    auto F = [&](double u) { return diff.A(u, v) - a; };
    auto dF = [&](double u) { return diff.d1A(u, v); };
    RootOptions opt;
    opt.residual_tol = tol;
    opt.max_iter = 200;
    opt.initial_guess = hint;
    try {
        return newton_bisection(F, dF, a / diff.a1, a / diff.a0, opt);
    } catch (const NoSignChange&) {
        // the bracket [a/a1, a/a0] is exact when a0 <= B <= a1 holds, so a
        // dead bracket means the declared bounds are violated
        throw NonConvergence("invert_A: no root in [a/a1, a/a0] at a = " + std::to_string(a) +
                             ", v = " + std::to_string(v) + "; declared bounds violated");
    }
}

/// mu(a, v) = d1A(U(a, v), v); lies in [a0, a1].
inline double mu(const DiffusivitySpec& diff, double a, double v, double tol = 1e-12) {
    return diff.d1A(invert_A(diff, a, v, tol), v);
}

constexpr double no_truncation = std::numeric_limits<double>::infinity();

/// Source coefficient of the non-divergence form,
///   s = (U/a) [ f(min{U, M}, v) d1A(U, v) + d2B(U, v) dtv ],
/// with the singular ratio U/a continued through a = 0 by its limit
/// 1/d1A(0, v); the ratio always lies in [1/a1, 1/a0].
inline double source_s(const DiffusivitySpec& diff, const ReactionSpec& reac, double a, double v,
                       double dtv, double M = no_truncation, double tol = 1e-12) {
    double U, ratio;
    if (a <= 1e-12) {
        U = 0.0;
        ratio = 1.0 / diff.d1A(0.0, v);
    } else {
        U = invert_A(diff, a, v, tol);
        ratio = U / a;
    }
    const double fu = std::min(U, M);
    return ratio * (reac.f(fu, v) * diff.d1A(U, v) + diff.d2B(U, v) * dtv);
}

// --- numerical audit of the structural assumptions -------------------------

struct SampleBox {
    double u_lo = 0.0, u_hi = 1.0;
    double v_lo = 0.0, v_hi = 1.0;
};

struct AssumptionCheck {
    std::string name;
    double worst_slack = 0.0; // min over samples of (bound - quantity); negative = violated
    double at_u = 0.0, at_v = 0.0;
    bool pass = true;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool all_pass = true;

    std::string summary() const {
        std::string s;
        for (const auto& c : checks) {
            s += (c.pass ? "pass " : "FAIL ") + c.name + "  slack " + std::to_string(c.worst_slack) +
                 "  worst at (u,v)=(" + std::to_string(c.at_u) + "," + std::to_string(c.at_v) + ")\n";
        }
        return s;
    }
};

/// Sample every inequality of the structural assumptions on a box and report
/// the worst slack per inequality. Violations are reported, never thrown:
/// coefficient functions are user-supplied black boxes and the audit is the
/// contract check, not an exception path.
inline AssumptionReport check_assumptions(const ModelSpec& model, const SampleBox& box,
                                          int samples_per_axis = 33) {
    const int ns = std::max(2, samples_per_axis);
    const double slack_tol = -1e-9; // absorb finite-difference noise at tight bounds
    AssumptionReport report;

    struct Item {
        std::string name;
        std::function<double(double, double)> slack; // >= 0 means satisfied
    };
    const auto& d = model.diffusivity;
    const auto& r = model.reaction;
    auto d1f = [&](double u, double v) { return detail::fd_partial([&](double x) { return r.f(x, v); }, u); };
    auto d2f = [&](double u, double v) { return detail::fd_partial([&](double y) { return r.f(u, y); }, v); };
    auto d1g = [&](double u, double v) { return detail::fd_partial([&](double x) { return r.g(x, v); }, u); };
    auto d2g = [&](double u, double v) { return detail::fd_partial([&](double y) { return r.g(u, y); }, v); };

    const std::vector<Item> items = {
        {"B >= a0", [&](double u, double v) { return d.B(u, v) - d.a0; }},
        {"B <= a1", [&](double u, double v) { return d.a1 - d.B(u, v); }},
        {"d1A >= a0", [&](double u, double v) { return d.d1A(u, v) - d.a0; }},
        {"d1A <= a1", [&](double u, double v) { return d.a1 - d.d1A(u, v); }},
        {"|d2A| <= a2", [&](double u, double v) { return d.a2 - std::abs(d.d2A(u, v)); }},
        {"|d2B| <= a3", [&](double u, double v) { return d.a3 - std::abs(d.d2B(u, v)); }},
        {"f <= C_f", [&](double u, double v) { return r.C_f - r.f(u, v); }},
        {"f >= -C_f(1+u+v)", [&](double u, double v) { return r.f(u, v) + r.C_f * (1.0 + u + v); }},
        {"g <= C_g", [&](double u, double v) { return r.C_g - r.g(u, v); }},
        {"g >= -C_g(1+u+v)", [&](double u, double v) { return r.g(u, v) + r.C_g * (1.0 + u + v); }},
        {"|d1f| <= C_f'", [&](double u, double v) { return r.C_f_prime - std::abs(d1f(u, v)); }},
        {"|d2f| <= C_f'", [&](double u, double v) { return r.C_f_prime - std::abs(d2f(u, v)); }},
        {"|d1g| <= C_g'", [&](double u, double v) { return r.C_g_prime - std::abs(d1g(u, v)); }},
        {"|d2g| <= C_g'", [&](double u, double v) { return r.C_g_prime - std::abs(d2g(u, v)); }},
    };

    for (const auto& item : items) {
        AssumptionCheck c;
        c.name = item.name;
        c.worst_slack = std::numeric_limits<double>::infinity();
        for (int i = 0; i < ns; ++i) {
            const double u = box.u_lo + (box.u_hi - box.u_lo) * i / (ns - 1);
            for (int j = 0; j < ns; ++j) {
                const double v = box.v_lo + (box.v_hi - box.v_lo) * j / (ns - 1);
                const double s = item.slack(u, v);
                if (s < c.worst_slack) {
                    c.worst_slack = s;
                    c.at_u = u;
                    c.at_v = v;
                }
            }
        }
        c.pass = c.worst_slack >= slack_tol;
        report.all_pass = report.all_pass && c.pass;
        report.checks.push_back(std::move(c));
    }
    AssumptionCheck dv;
    dv.name = "d_v > 0";
    dv.worst_slack = model.d_v;
    dv.pass = model.d_v > 0.0;
    report.all_pass = report.all_pass && dv.pass;
    report.checks.push_back(std::move(dv));
    return report;
}

} // namespace crossdiff
