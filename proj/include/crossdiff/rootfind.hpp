#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "crossdiff/errors.hpp"

namespace crossdiff {

struct RootOptions {
    double residual_tol = 1e-13; // absolute tolerance on |F(x)|
    int max_iter = 200;
    double initial_guess = std::numeric_limits<double>::quiet_NaN(); // optional warm start
};

/// Newton iteration on F over [lo, hi], safeguarded by bisection: a Newton
/// step that leaves the current bracket is replaced by the midpoint. Requires
/// F(lo) and F(hi) of opposite (or zero) sign; the bracket is shrunk from
/// whichever side matches sign(F(mid)), so convergence is guaranteed for
/// continuous F even where the derivative is unreliable.
inline double newton_bisection(const std::function<double(double)>& f,
                               const std::function<double(double)>& df,
                               double lo, double hi, const RootOptions& opt = {}) {
    if (lo > hi) std::swap(lo, hi);
    double flo = f(lo);
    if (std::abs(flo) <= opt.residual_tol) return lo;
    double fhi = f(hi);
    if (std::abs(fhi) <= opt.residual_tol) return hi;
    if (flo * fhi > 0.0)
        throw NoSignChange("newton_bisection: no sign change on [" + std::to_string(lo) +
                           ", " + std::to_string(hi) + "]");

    double x = 0.5 * (lo + hi);
    if (std::isfinite(opt.initial_guess) && opt.initial_guess > lo && opt.initial_guess < hi)
        x = opt.initial_guess;
    double fx = f(x);

    for (int it = 0; it < opt.max_iter; ++it) {
        if (std::abs(fx) <= opt.residual_tol) return x;
        // shrink the bracket around the sign change
        if ((fx > 0.0) == (fhi > 0.0)) { hi = x; fhi = fx; }
        else                           { lo = x; flo = fx; }

        double d = df(x);
        double xn = x - fx / d;
        if (!std::isfinite(xn) || xn <= lo || xn >= hi)
            xn = 0.5 * (lo + hi); // bisect instead
        if (xn == x) xn = 0.5 * (lo + hi);
        x = xn;
        fx = f(x);
        if (hi - lo <= std::numeric_limits<double>::epsilon() * (std::abs(hi) + 1.0)) {
            if (std::abs(fx) <= opt.residual_tol) return x;
            break;
        }
    }
    if (std::abs(fx) <= opt.residual_tol) return x;
    throw NonConvergence("newton_bisection: residual " + std::to_string(std::abs(fx)) +
                         " above tolerance " + std::to_string(opt.residual_tol));
}

} // namespace crossdiff
