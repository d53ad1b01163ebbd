#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "crossdiff/model.hpp"

using namespace crossdiff;

namespace {

// Independent scalar oracle: plain bisection on [lo, hi], no Newton involved.
double bisect_oracle(const std::function<double(double)>& f, double lo, double hi,
                     int iters = 200) {
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) { lo = mid; flo = fm; }
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

DiffusivitySpec saturating_in_u() {
    // B = 1 + u/(1+u): A = u(1+2u)/(1+u), d1A in [1, 2)
    return DiffusivitySpec::from_B(
        [](double u, double) { return 1.0 + u / (1.0 + u); }, 1.0, 2.0, 1e-6, 1e-6);
}

DiffusivitySpec saturating_in_v(double a2 = 4.0) {
    // competition diffusivity B = 1 + v/(1+v)
    return DiffusivitySpec::from_B(
        [](double, double v) { return 1.0 + v / (1.0 + v); }, 1.0, 2.0, a2, 1.0);
}

ReactionSpec competition_reactions() {
    ReactionSpec r;
    r.f = [](double u, double v) { return 1.0 - u - 0.5 * v; };
    r.g = [](double u, double v) { return 1.0 - v - 0.5 * u; };
    return r;
}

ModelSpec wrap(DiffusivitySpec d, ReactionSpec r = ReactionSpec::zero()) {
    ModelSpec m;
    m.diffusivity = std::move(d);
    m.reaction = std::move(r);
    m.d_v = 1.0;
    return m;
}

} // namespace

TEST_CASE("check_assumptions passes a constant diffusivity with slack bounds") {
    ModelSpec m = wrap(DiffusivitySpec::from_B([](double, double) { return 2.0; }, 1.0, 3.0, 1.0, 1.0));
    m.reaction.C_f = m.reaction.C_g = m.reaction.C_f_prime = m.reaction.C_g_prime = 1.0;
    AssumptionReport rep = check_assumptions(m, {0.0, 10.0, 0.0, 10.0}, 21);
    CHECK(rep.all_pass);
}

TEST_CASE("check_assumptions flags a too-small a1 with the offending point") {
    // sup of v/(1+v) on [0,1] is 1/2, so B <= 1.5 is tight and 1.4 is violated at large v
    ModelSpec good = wrap(saturating_in_v());
    good.diffusivity.a1 = 1.5;
    AssumptionReport rep_good = check_assumptions(good, {0.0, 1.0, 0.0, 1.0}, 33);
    CHECK(rep_good.all_pass);

    ModelSpec bad = good;
    bad.diffusivity.a1 = 1.4;
    AssumptionReport rep_bad = check_assumptions(bad, {0.0, 1.0, 0.0, 1.0}, 33);
    CHECK(!rep_bad.all_pass);
    bool b_bound_flagged = false;
    for (const auto& c : rep_bad.checks)
        if (!c.pass) {
            // B is u-independent here, so both "B <= a1" and "d1A <= a1" trip
            CHECK((c.name == "B <= a1" || c.name == "d1A <= a1"));
            CHECK(c.at_v == doctest::Approx(1.0)); // worst point at the top of the box
            b_bound_flagged = b_bound_flagged || c.name == "B <= a1";
        }
    CHECK(b_bound_flagged);
}

TEST_CASE("check_assumptions reports zero slack for f = 1 - u - v at the origin") {
    ModelSpec m = wrap(DiffusivitySpec::constant(1.0));
    m.reaction.f = [](double u, double v) { return 1.0 - u - v; };
    m.reaction.g = [](double, double) { return 0.0; };
    m.reaction.C_f = 1.0;
    m.reaction.C_f_prime = 1.0;
    AssumptionReport rep = check_assumptions(m, {0.0, 2.0, 0.0, 2.0}, 21);
    for (const auto& c : rep.checks)
        if (c.name == "f <= C_f") {
            CHECK(c.pass);
            CHECK(c.worst_slack == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(c.at_u == 0.0);
            CHECK(c.at_v == 0.0);
        }
}

TEST_CASE("invert_A on linear diffusivities") {
    DiffusivitySpec d2 = DiffusivitySpec::constant(2.0);
    CHECK(invert_A(d2, 6.0, 0.3) == doctest::Approx(3.0).epsilon(1e-13));

    DiffusivitySpec dv = saturating_in_v();
    // at v = 1, A = 1.5 u
    CHECK(invert_A(dv, 3.0, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("invert_A on a u-dependent diffusivity matches the bisection oracle") {
    DiffusivitySpec d = saturating_in_u();
    // A(u, 0) = 2  <=>  2u^2 - u - 2 = 0
    const double oracle = bisect_oracle([](double u) { return 2.0 * u * u - u - 2.0; }, 0.0, 2.0);
    const double root = invert_A(d, 2.0, 0.0, 1e-13);
    CHECK(root == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(root == doctest::Approx((1.0 + std::sqrt(17.0)) / 4.0).epsilon(1e-10));
}

TEST_CASE("invert_A round trip and monotonicity") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> da(0.0, 40.0), dv(0.0, 8.0);
    for (DiffusivitySpec d : {saturating_in_u(), saturating_in_v()}) {
        for (int k = 0; k < 1000; ++k) {
            const double a = da(rng), v = dv(rng);
            const double u = invert_A(d, a, v, 1e-13);
            CHECK(std::abs(d.A(u, v) - a) <= 1e-12);
            CHECK(u >= a / d.a1 - 1e-12);
            CHECK(u <= a / d.a0 + 1e-12);
        }
        double prev = -1.0;
        for (int k = 0; k <= 50; ++k) {
            const double u = invert_A(d, 0.4 * k, 0.7, 1e-13);
            CHECK(u >= prev - 1e-12);
            prev = u;
        }
    }
}

TEST_CASE("invert_A reports NonConvergence when the declared bounds are wrong") {
    // B is actually 3 but the declared window is [1, 2]: the bracket misses the root
    DiffusivitySpec lying = DiffusivitySpec::from_B(
        [](double, double) { return 3.0; }, 1.0, 2.0, 1e-6, 1e-6);
    CHECK_THROWS_AS(invert_A(lying, 1.0, 0.0), NonConvergence);
}

TEST_CASE("mu is constant for constant B and matches a finite-difference oracle") {
    DiffusivitySpec dc = DiffusivitySpec::constant(3.0);
    CHECK(mu(dc, 5.0, 1.0) == doctest::Approx(3.0).epsilon(1e-12));

    DiffusivitySpec d = saturating_in_u();
    const double ustar = bisect_oracle([](double u) { return 2.0 * u * u - u - 2.0; }, 0.0, 2.0);
    const double h = 1e-6;
    const double oracle = (d.A(ustar + h, 0.0) - d.A(ustar - h, 0.0)) / (2.0 * h);
    CHECK(mu(d, 2.0, 0.0) == doctest::Approx(oracle).epsilon(1e-7));
    CHECK(mu(d, 2.0, 0.0) == doctest::Approx(1.80776).epsilon(1e-4));
}

TEST_CASE("mu stays within [a0, a1] on a lattice") {
    for (DiffusivitySpec d : {saturating_in_u(), saturating_in_v()}) {
        for (int i = 0; i <= 20; ++i)
            for (int j = 0; j <= 20; ++j) {
                const double m = mu(d, 2.0 * i, 0.4 * j);
                CHECK(m >= d.a0 - 1e-9);
                CHECK(m <= d.a1 + 1e-9);
            }
    }
}

TEST_CASE("source term reduces to f when B is constant one") {
    DiffusivitySpec d1 = DiffusivitySpec::constant(1.0);
    ReactionSpec r;
    r.f = [](double, double) { return 0.7; };
    r.g = [](double, double) { return 0.0; };
    CHECK(source_s(d1, r, 2.3, 0.5, 0.0) == doctest::Approx(0.7).epsilon(1e-12));

    ReactionSpec zero = ReactionSpec::zero();
    DiffusivitySpec dc = DiffusivitySpec::constant(2.0); // d2B = 0
    CHECK(source_s(dc, zero, 1.0, 1.0, 3.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("source term is continuous through a = 0") {
    DiffusivitySpec d = DiffusivitySpec::constant(2.0);
    ReactionSpec r;
    r.f = [](double, double) { return 1.0; };
    r.g = [](double, double) { return 0.0; };
    const double s0 = source_s(d, r, 0.0, 0.4, 0.0);
    CHECK(s0 == doctest::Approx(1.0).epsilon(1e-9)); // (1/2) * 1 * 2
    const double s9 = source_s(d, r, 1e-9, 0.4, 0.0);
    const double s6 = source_s(d, r, 1e-6, 0.4, 0.0);
    CHECK(std::abs(s9 - s6) < 1e-9);
    CHECK(std::abs(s0 - s9) < 1e-6);

    // near u = 0 the default d1A falls back to a one-sided difference, so the
    // continuity gap is resolved only to the finite-difference step
    DiffusivitySpec dnl = saturating_in_u();
    const double t0 = source_s(dnl, r, 0.0, 0.0, 0.0);
    const double t9 = source_s(dnl, r, 1e-9, 0.0, 0.0);
    CHECK(std::abs(t0 - t9) < 5e-6);
}

TEST_CASE("source term respects the truncation level") {
    DiffusivitySpec d1 = DiffusivitySpec::constant(1.0);
    ReactionSpec r;
    r.f = [](double u, double) { return 1.0 - u; };
    r.g = [](double, double) { return 0.0; };
    // U = a = 5; truncated f sees min(5, 2) = 2
    CHECK(source_s(d1, r, 5.0, 0.0, 0.0, 2.0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(source_s(d1, r, 5.0, 0.0, 0.0) == doctest::Approx(-4.0).epsilon(1e-12));
}

TEST_CASE("starvation split: trivial and symmetric cases") {
    StarvationSpec sp;
    sp.phi = [](double x) { return x / (1.0 + x); };
    sp.psi = sp.phi;
    sp.a = sp.b = 1.0;
    sp.c = sp.d = 2.0;
    auto [ua0, ub0] = starvation_split(sp, 0.0, 1.0);
    CHECK(ua0 == 0.0);
    CHECK(ub0 == 0.0);

    auto [ua, ub] = starvation_split(sp, 3.0, 0.7);
    CHECK(ua == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(ua + ub == 3.0); // exact by construction
}

TEST_CASE("starvation split matches the quadratic-root oracle") {
    StarvationSpec sp;
    sp.phi = [](double x) { return x; };
    sp.psi = [](double x) { return x; };
    sp.a = 1.0;
    sp.b = 4.0;
    sp.c = sp.d = 1.0;
    // v = 0, u = 1: 4(1-s)^2 = s^2, root s = 2/3
    const double oracle = bisect_oracle(
        [](double s) { return 4.0 * (1.0 - s) * (1.0 - s) - s * s; }, 0.0, 1.0);
    auto [ua, ub] = starvation_split(sp, 1.0, 0.0);
    CHECK(ua == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(ua == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(ub == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("starvation split components stay in [0, u] on random inputs") {
    StarvationSpec sp;
    sp.phi = [](double x) { return x / (1.0 + x); };
    sp.psi = [](double x) { return 0.5 * x / (1.0 + 0.5 * x); };
    sp.a = 1.3;
    sp.b = 0.7;
    sp.c = 2.0;
    sp.d = 0.4;
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> du(0.0, 10.0), dv(0.0, 5.0);
    for (int k = 0; k < 500; ++k) {
        const double u = du(rng), v = dv(rng);
        auto [ua, ub] = starvation_split(sp, u, v);
        CHECK(ua >= 0.0);
        CHECK(ub >= 0.0);
        // u_b is constructed as u - u_a, so the sum returns u up to one re-rounding
        CHECK(std::abs(ua + ub - u) <= 2.0 * std::numeric_limits<double>::epsilon() * u);
        const double resid = sp.phi(sp.b * ub + sp.d * v) * ub - sp.psi(sp.a * ua + sp.c * v) * ua;
        CHECK(std::abs(resid) <= 1e-12 * (1.0 + u));
    }
}

TEST_CASE("starvation split rejects rates without a sign change") {
    StarvationSpec sp;
    sp.phi = [](double x) { return x - 10.0; }; // negative near the origin: invalid
    sp.psi = [](double x) { return x + 1.0; };
    CHECK_THROWS_AS(starvation_split(sp, 0.5, 0.0), NoSignChange);
}

TEST_CASE("starvation A on trivial and derived cases") {
    StarvationSpec sym;
    sym.phi = [](double x) { return x / (1.0 + x); };
    sym.psi = sym.phi;
    sym.a = sym.b = 1.0;
    sym.c = sym.d = 1.0;
    sym.d_a = 1.0;
    sym.d_b = 3.0;
    CHECK(starvation_A(sym, 0.0, 2.0) == 0.0);
    CHECK(starvation_A(sym, 2.0, 0.5) == doctest::Approx(4.0).epsilon(1e-10));

    StarvationSpec sp;
    sp.phi = [](double x) { return x; };
    sp.psi = [](double x) { return x; };
    sp.a = 1.0;
    sp.b = 4.0;
    sp.c = sp.d = 1.0;
    sp.d_a = 1.0;
    sp.d_b = 2.0;
    CHECK(starvation_A(sp, 1.0, 0.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("starvation A is pinched between min and max diffusion rates") {
    StarvationSpec sp;
    sp.phi = [](double x) { return x / (1.0 + x); };
    sp.psi = [](double x) { return 2.0 * x / (1.0 + x); };
    sp.a = 0.8;
    sp.b = 1.7;
    sp.c = 0.6;
    sp.d = 1.1;
    sp.d_a = 0.5;
    sp.d_b = 2.5;
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> du(0.0, 6.0), dv(0.0, 6.0);
    for (int k = 0; k < 300; ++k) {
        const double u = du(rng), v = dv(rng);
        const double A = starvation_A(sp, u, v);
        CHECK(A >= 0.5 * u - 1e-12);
        CHECK(A <= 2.5 * u + 1e-12);
    }
}

TEST_CASE("starvation-driven diffusivity passes the structural audit on a desk box") {
    StarvationSpec sp;
    sp.phi = [](double x) { return x / (1.0 + x); };
    sp.psi = sp.phi;
    sp.a = 1.0;
    sp.b = 2.0;
    sp.c = 1.0;
    sp.d = 1.0;
    sp.d_a = 1.0;
    sp.d_b = 2.0;
    ModelSpec m = wrap(starvation_diffusivity(sp, 0.45, 0.65), competition_reactions());
    m.reaction.C_f = m.reaction.C_g = 1.0;
    m.reaction.C_f_prime = m.reaction.C_g_prime = 1.0;
    m.origin = ModelOrigin::StarvationDriven;
    m.starvation = sp;
    AssumptionReport rep = check_assumptions(m, {0.0, 4.0, 0.0, 4.0}, 25);
    INFO(rep.summary());
    CHECK(rep.all_pass);
}

TEST_CASE("starvation round trip through invert_A") {
    StarvationSpec sp;
    sp.phi = [](double x) { return x / (1.0 + x); };
    sp.psi = sp.phi;
    sp.a = 1.0;
    sp.b = 2.0;
    sp.c = 1.0;
    sp.d = 1.0;
    sp.d_a = 1.0;
    sp.d_b = 2.0;
    DiffusivitySpec d = starvation_diffusivity(sp, 0.45, 0.65);
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> da(0.0, 12.0), dv(0.0, 4.0);
    for (int k = 0; k < 300; ++k) {
        const double a = da(rng), v = dv(rng);
        const double u = invert_A(d, a, v, 1e-13);
        CHECK(std::abs(d.A(u, v) - a) <= 1e-12);
    }
}
