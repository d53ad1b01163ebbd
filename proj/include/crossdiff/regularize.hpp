#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "crossdiff/grid.hpp"

namespace crossdiff {

/// Compactly supported bump kernel (1 - (r/3eps)^2)^2 on radius 3 eps,
/// renormalized to unit discrete mass on whatever stencil it is sampled on.
struct Mollifier {
    double eps;

    explicit Mollifier(double eps_) : eps(eps_) {
        if (eps <= 0.0) throw std::invalid_argument("Mollifier: eps must be positive");
    }

    double radius() const { return 3.0 * eps; }

    double kernel(double r) const {
        const double q = r / radius();
        if (q >= 1.0) return 0.0;
        const double w = 1.0 - q * q;
        return w * w;
    }
};

/// Pointwise cap min(value, M); idempotent.
inline Field truncate(const Field& f, double M) {
    if (M <= 0.0) throw std::invalid_argument("truncate: M must be positive");
    Field out = f;
    for (int i = 0; i < out.size(); ++i) out[i] = std::min(out[i], M);
    return out;
}

namespace detail {

// Largest k with k*h < radius: offsets -k..k carry nonzero kernel weight;
// eps << h gives k = 0 and the convolution degenerates to the identity.
inline int axis_taps(double h, double radius) {
    const int k = static_cast<int>(std::ceil(radius / h)) - 1;
    return std::max(0, k);
}

} // namespace detail

/// Discrete spatial convolution with the field extended by ZERO outside the
/// box. Mass is therefore not preserved near the boundary; the sup norm never
/// increases (nonnegative unit-mass weights).
inline Field mollify_space(const Field& f, const Mollifier& m) {
    const Grid& g = f.grid;
    const double rad = m.radius();
    const int kx = detail::axis_taps(g.h(0), rad);
    const int ky = g.dim == 2 ? detail::axis_taps(g.h(1), rad) : 0;

    // weights on the offset stencil, normalized to unit discrete mass
    std::vector<double> w;
    double wsum = 0.0;
    for (int oy = -ky; oy <= ky; ++oy)
        for (int ox = -kx; ox <= kx; ++ox) {
            const double dx = ox * g.h(0);
            const double dy = g.dim == 2 ? oy * g.h(1) : 0.0;
            const double k = m.kernel(std::sqrt(dx * dx + dy * dy));
            w.push_back(k);
            wsum += k;
        }
    for (double& x : w) x /= wsum;

    Field out(g, 0.0);
    const int nx = g.n[0], ny = g.dim == 2 ? g.n[1] : 1;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double acc = 0.0;
            int t = 0;
            for (int oy = -ky; oy <= ky; ++oy)
                for (int ox = -kx; ox <= kx; ++ox, ++t) {
                    const int ii = i + ox, jj = j + oy;
                    if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue; // zero extension
                    acc += w[static_cast<size_t>(t)] * f[jj * nx + ii];
                }
            out[j * nx + i] = acc;
        }
    return out;
}

/// Space-time convolution of a uniformly sampled sequence of fields. Time is
/// extended by constant continuation of the terminal snapshots, space by zero
/// outside the box.
inline std::vector<Field> mollify_reaction(const std::vector<Field>& frames, double dt,
                                           const Mollifier& m) {
    if (frames.empty()) return {};
    if (dt <= 0.0) throw std::invalid_argument("mollify_reaction: dt must be positive");
    const Grid& g = frames.front().grid;
    for (const auto& fr : frames) require_same_grid(fr, frames.front());

    const double rad = m.radius();
    const int kt = detail::axis_taps(dt, rad);
    const int kx = detail::axis_taps(g.h(0), rad);
    const int ky = g.dim == 2 ? detail::axis_taps(g.h(1), rad) : 0;

    std::vector<double> w;
    double wsum = 0.0;
    for (int ot = -kt; ot <= kt; ++ot)
        for (int oy = -ky; oy <= ky; ++oy)
            for (int ox = -kx; ox <= kx; ++ox) {
                const double dtt = ot * dt;
                const double dx = ox * g.h(0);
                const double dy = g.dim == 2 ? oy * g.h(1) : 0.0;
                const double k = m.kernel(std::sqrt(dtt * dtt + dx * dx + dy * dy));
                w.push_back(k);
                wsum += k;
            }
    for (double& x : w) x /= wsum;

    const int nt = static_cast<int>(frames.size());
    const int nx = g.n[0], ny = g.dim == 2 ? g.n[1] : 1;
    std::vector<Field> out(frames.size(), Field(g, 0.0));
    for (int n = 0; n < nt; ++n)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                double acc = 0.0;
                int t = 0;
                for (int ot = -kt; ot <= kt; ++ot) {
                    const int nn = std::clamp(n + ot, 0, nt - 1); // constant continuation in time
                    for (int oy = -ky; oy <= ky; ++oy)
                        for (int ox = -kx; ox <= kx; ++ox, ++t) {
                            const int ii = i + ox, jj = j + oy;
                            if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue;
                            acc += w[static_cast<size_t>(t)] * frames[static_cast<size_t>(nn)][jj * nx + ii];
                        }
                }
                out[static_cast<size_t>(n)][j * nx + i] = acc;
            }
    return out;
}

} // namespace crossdiff
