#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "crossdiff/io.hpp"
#include "crossdiff/scenario.hpp"
#include "crossdiff/stepper.hpp"
#include "crossdiff/svg.hpp"
#include "crossdiff/verify.hpp"

namespace fs = std::filesystem;
using namespace crossdiff;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_config_error = 2;

struct CommonArgs {
    std::string scenario;
    std::string out_dir = ".";
    double t_end = -1.0;
    double dt = -1.0;
    int nx = -1;
    std::string scheme;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_scenario = true) {
    if (needs_scenario)
        cmd->add_option("--scenario", args.scenario, "preset name or config file path")->required();
    cmd->add_option("--out", args.out_dir, "output directory (created if absent)");
    cmd->add_option("--t-end", args.t_end, "override final time");
    cmd->add_option("--dt", args.dt, "override time step");
    cmd->add_option("--nx", args.nx, "override cells per axis");
    cmd->add_option("--scheme", args.scheme,
                    "override scheme: nondivergence-imex | divergence-explicit | divergence-implicit");
}

Scenario load_scenario(const CommonArgs& args) {
    Scenario sc = scenario_from_arg(args.scenario);
    if (args.t_end > 0.0) sc.solver.t_end = args.t_end;
    if (args.dt > 0.0) sc.solver.dt = args.dt;
    if (args.nx > 0) {
        sc.grid = sc.grid.dim == 1 ? Grid::line(args.nx, sc.grid.extent[0])
                                   : Grid::box(args.nx, args.nx, sc.grid.extent[0], sc.grid.extent[1]);
    }
    if (!args.scheme.empty()) {
        if (args.scheme == "nondivergence-imex") sc.solver.scheme = Scheme::NonDivergenceIMEX;
        else if (args.scheme == "divergence-explicit") sc.solver.scheme = Scheme::DivergenceExplicit;
        else if (args.scheme == "divergence-implicit") sc.solver.scheme = Scheme::DivergenceImplicit;
        else throw ParseError("unknown scheme '" + args.scheme + "'", 0, 0);
    }
    fs::create_directories(args.out_dir);
    return sc;
}

std::vector<double> parse_ladder(const std::string& csv) {
    std::vector<double> out;
    std::istringstream is(csv);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item == "inf" || item == "infinity") out.push_back(no_truncation);
        else out.push_back(std::stod(item));
    }
    return out;
}

void emit_series_svg(const std::string& path, const DiagnosticSeries& s) {
    svg_line_plot(path,
                  {{"linf_u", s.t, s.linf_u},
                   {"linf_v", s.t, s.linf_v},
                   {"l2_u", s.t, s.l2_u},
                   {"l2_v", s.t, s.l2_v}},
                  "density norms over time");
}

struct CheckLine {
    bool pass;
    std::string text;
};

int report_checks(const std::vector<CheckLine>& lines, const std::string& summary_path) {
    std::ofstream sum(summary_path);
    bool all = true;
    for (const auto& c : lines) {
        const std::string line = std::string(c.pass ? "PASS " : "FAIL ") + c.text;
        std::cout << line << "\n";
        sum << line << "\n";
        all = all && c.pass;
    }
    std::cout << (all ? "all checks passed" : "some checks FAILED") << "\n";
    sum << (all ? "all checks passed" : "some checks FAILED") << "\n";
    return all ? exit_ok : exit_check_failed;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

// --- subcommands ---------------------------------------------------------

int cmd_run(const CommonArgs& args, const std::string& snapshot_times) {
    Scenario sc = load_scenario(args);
    std::vector<double> snap_at;
    if (!snapshot_times.empty()) snap_at = parse_ladder(snapshot_times);

    std::vector<std::pair<double, State>> snaps;
    Observer snapper = [&](const State& st, int) {
        for (double t : snap_at)
            if (std::abs(st.t - t) <= 0.5 * sc.solver.dt && (snaps.empty() || snaps.back().first != t))
                snaps.emplace_back(t, st);
    };

    RunResult rr = run(sc.model, sc.solver, sc.initial_u(), sc.initial_v(), {snapper});

    const fs::path out(args.out_dir);
    write_csv((out / "diagnostics.csv").string(), rr.series);
    save_field((out / "u_final.snap").string(), rr.state.u);
    save_field((out / "v_final.snap").string(), rr.state.v);
    emit_series_svg((out / "series.svg").string(), rr.series);
    if (sc.grid.dim == 2) {
        svg_heatmap((out / "u_final.svg").string(), rr.state.u, "u at t_end");
        svg_heatmap((out / "v_final.svg").string(), rr.state.v, "v at t_end");
    }
    for (const auto& [t, st] : snaps) {
        std::ostringstream name;
        name << "u_t" << t << ".snap";
        save_field((out / name.str()).string(), st.u);
    }
    std::cout << "run complete (" << scheme_name(sc.solver.scheme) << "): " << rr.steps
              << " steps to t = " << rr.state.t << ", " << rr.dt_retries
              << " dt retries; outputs in " << args.out_dir << "\n";
    return exit_ok;
}

int cmd_verify(const CommonArgs& args) {
    Scenario sc = load_scenario(args);
    const fs::path out(args.out_dir);
    std::vector<CheckLine> lines;

    AssumptionReport audit = check_assumptions(sc.model, sc.box);
    lines.push_back({audit.all_pass, "assumptions: sampled audit on the declared box"});

    RunResult rr = run(sc.model, sc.solver, sc.initial_u(), sc.initial_v());
    write_csv((out / "diagnostics.csv").string(), rr.series);
    emit_series_svg((out / "series.svg").string(), rr.series);

    for (const std::string& check : sc.checks) {
        if (check == "max-principle") {
            MaxPrincipleResult res =
                check_max_principle(rr.series, sc.model.reaction.C_g, rr.series.linf_v[0]);
            lines.push_back({res.pass, "max-principle: worst ratio " + fmt(res.worst_ratio) +
                                           " at t = " + fmt(res.at_t) + " (<= 1 + 1e-8)"});
        } else if (check == "nonnegativity") {
            double min_seen = 0.0;
            Observer track = [&](const State& st, int) {
                min_seen = std::min({min_seen, min_value(st.u), min_value(st.v)});
            };
            run(sc.model, sc.solver, sc.initial_u(), sc.initial_v(), {track});
            const double floor = -1e-10 * (1.0 + std::max(rr.series.linf_u[0], rr.series.linf_v[0]));
            lines.push_back({min_seen >= floor,
                             "nonnegativity: min value " + fmt(min_seen) + " (floor " + fmt(floor) + ")"});
        } else if (check == "energy") {
            EnergyEnvelopeResult env =
                energy_envelope_check(sc.model, sc.solver, sc.initial_u(), sc.initial_v());
            const bool pass =
                env.violation_half_dt <= std::max(0.6 * env.violation_dt, 1e-10);
            lines.push_back({pass, "energy: violation " + fmt(env.violation_dt) + " at dt, " +
                                       fmt(env.violation_half_dt) + " at dt/2 (O(dt) envelope)"});
        } else if (check == "mass-identity") {
            SolverConfig cfg = sc.solver;
            cfg.scheme = Scheme::DivergenceExplicit;
            const double hmin = sc.grid.min_h();
            cfg.dt = 0.45 * hmin * hmin / (2.0 * sc.grid.dim * sc.model.diffusivity.a1);
            cfg.t_end = std::min(sc.solver.t_end, 200.0 * cfg.dt); // a short exact-balance window
            RunResult er = run(sc.model, cfg, sc.initial_u(), sc.initial_v());
            double worst = 0.0;
            for (size_t k = 0; k < er.series.size(); ++k) {
                const double scale = 1e-12 * sc.grid.measure() * std::max(1.0, er.series.linf_u[k]);
                worst = std::max(worst, std::abs(er.series.mass_residual[k]) / scale);
            }
            lines.push_back({worst <= 1.0, "mass-identity: worst residual " + fmt(worst) +
                                               "x the 1e-12 |Omega| linf(u) budget"});
        } else {
            lines.push_back({false, "unknown check '" + check + "'"});
        }
    }
    return report_checks(lines, (out / "verify_summary.txt").string());
}

int cmd_stability(const CommonArgs& args, double rho, double lambda_or_mw, bool dual) {
    Scenario sc = load_scenario(args);
    const fs::path out(args.out_dir);
    Grid g = sc.grid;
    Field u0 = sc.initial_u();
    Field v0 = sc.initial_v();
    Field pert = sample(g, [&](double x, double) { return rho * std::cos(pi * x / g.extent[0]); });
    Field zero(g, 0.0);
    std::optional<double> weight;
    if (lambda_or_mw > 0.0) weight = lambda_or_mw;

    auto experiment = [&](const Field& du) {
        return dual ? dual_stability_experiment(sc.model, sc.solver, u0, v0, du, zero, weight)
                    : stability_experiment(sc.model, sc.solver, u0, v0, du, zero, weight);
    };
    StabilityReport full = experiment(pert);
    StabilityReport half = experiment(0.5 * pert);

    write_csv_pairs((out / (dual ? "dual_stability.csv" : "stability.csv")).string(), "t", "D",
                    full.t, full.D);
    svg_line_plot((out / (dual ? "dual_stability.svg" : "stability.svg")).string(),
                  {{"D(t), rho", full.t, full.D}, {"D(t), rho/2", half.t, half.D}},
                  dual ? "dual-norm distance" : "L2 distance");

    double sup_full = 0.0, sup_half = 0.0;
    for (double d : full.D) sup_full = std::max(sup_full, d);
    for (double d : half.D) sup_half = std::max(sup_half, d);
    const double scale = sup_half > 0.0 ? sup_full / sup_half : 0.0;

    std::vector<CheckLine> lines;
    lines.push_back({std::isfinite(full.K),
                     std::string(dual ? "dual-" : "") + "stability: fitted Gronwall K = " + fmt(full.K) +
                         ", C_gronwall = " + fmt(full.gronwall_C) + ", C_stab = " + fmt(full.c_stab)});
    lines.push_back({scale > 3.2 && scale < 4.8,
                     "linear response: sup D scales by " + fmt(scale) + " for rho -> rho/2 (expect 4)"});
    bool bounded = true;
    for (double d : full.D) bounded = bounded && d <= full.c_stab * full.D.front() * (1.0 + 1e-12);
    lines.push_back({bounded, "D(t) <= C_stab D(0) over the run, C_stab = " + fmt(full.c_stab)});
    lines.push_back({true, "weight used: " + fmt(full.lambda) + "; L2H1 integral " +
                               fmt(full.l2h1_integral) + "; base-solution norms: |u2|_inf " +
                               fmt(full.u2_linf) + ", |v2|_inf " + fmt(full.v2_linf) +
                               ", |grad u2|_L4 " + fmt(full.grad_u2_l4) + ", |grad v2|_L2Linf " +
                               fmt(full.grad_v2_l2t_linfx)});
    return report_checks(lines, (out / (dual ? "dual_stability_summary.txt" : "stability_summary.txt")).string());
}

int cmd_convergence(const CommonArgs& args, const std::string& kind, const std::string& ladder_csv,
                    double min_order) {
    Scenario sc = load_scenario(args);
    const fs::path out(args.out_dir);
    ConvergenceReport rep;
    if (kind == "grid") {
        std::vector<double> ladder = ladder_csv.empty() ? std::vector<double>{32, 64, 128}
                                                        : parse_ladder(ladder_csv);
        std::vector<int> ns(ladder.begin(), ladder.end());
        // re-sample the configured initial shape analytically on each ladder grid
        const InitialSpec iu = sc.init_u, iv = sc.init_v;
        if (iu.kind == InitialSpec::Kind::File || iv.kind == InitialSpec::Kind::File)
            throw ParseError("grid convergence needs resamplable initial data, not a snapshot file", 0, 0);
        const double ext = sc.grid.extent[0];
        InitialSampler u0f = [iu, ext](double x, double) {
            if (iu.kind == InitialSpec::Kind::Constant) return iu.base;
            return iu.base + iu.amplitude * std::cos(iu.mode * pi * x / ext);
        };
        InitialSampler v0f = [iv, ext](double x, double) {
            if (iv.kind == InitialSpec::Kind::Constant) return iv.base;
            return iv.base + iv.amplitude * std::cos(iv.mode * pi * x / ext);
        };
        if (min_order <= 0.0) min_order = 1.5;
        rep = grid_convergence(sc.model, sc.solver, ns, ext, u0f, v0f);
    } else if (kind == "dt") {
        std::vector<double> ladder = ladder_csv.empty()
                                         ? std::vector<double>{4e-3, 2e-3, 1e-3, 2.5e-4}
                                         : parse_ladder(ladder_csv);
        if (min_order <= 0.0) min_order = 0.8;
        rep = dt_convergence(sc.model, sc.solver, ladder, sc.initial_u(), sc.initial_v());
    } else {
        throw ParseError("unknown convergence kind '" + kind + "' (grid | dt)", 0, 0);
    }
    write_csv_pairs((out / "convergence.csv").string(), "param", "error", rep.param, rep.error);
    std::vector<CheckLine> lines;
    lines.push_back({rep.order >= min_order, kind + " convergence: fitted order " + fmt(rep.order) +
                                                 " (needs >= " + fmt(min_order) + ")"});
    lines.push_back({rep.asymptotic, "errors decrease monotonically along the ladder"});
    return report_checks(lines, (out / "convergence_summary.txt").string());
}

int cmd_regularize_study(const CommonArgs& args, const std::string& eps_csv,
                         const std::string& m_csv) {
    Scenario sc = load_scenario(args);
    const fs::path out(args.out_dir);
    std::vector<double> eps_ladder =
        eps_csv.empty() ? std::vector<double>{0.08, 0.04, 0.02, 0.01} : parse_ladder(eps_csv);
    std::vector<double> m_ladder =
        m_csv.empty() ? std::vector<double>{2.0, 4.0, 8.0, no_truncation} : parse_ladder(m_csv);

    ConvergenceReport eps_rep = regularization_convergence_eps(sc.model, sc.solver, eps_ladder,
                                                               sc.initial_u(), sc.initial_v());
    ConvergenceReport m_rep = regularization_convergence_M(sc.model, sc.solver, m_ladder,
                                                           sc.initial_u(), sc.initial_v());
    write_csv_pairs((out / "eps_ladder.csv").string(), "eps", "l2_diff", eps_rep.param, eps_rep.error);
    write_csv_pairs((out / "m_ladder.csv").string(), "M", "l2_diff", m_rep.param, m_rep.error);

    std::vector<CheckLine> lines;
    lines.push_back({eps_rep.asymptotic, "eps ladder: successive trajectory differences shrink ("
                                             + fmt(eps_rep.error.front()) + " -> " +
                                             fmt(eps_rep.error.back()) + ")"});
    lines.push_back({m_rep.asymptotic, "M ladder: successive trajectory differences shrink ("
                                           + fmt(m_rep.error.front()) + " -> " +
                                           fmt(m_rep.error.back()) + ")"});
    return report_checks(lines, (out / "regularize_summary.txt").string());
}

int cmd_appendix_check(const std::string& out_dir, int n, double dt, double t_end, int trials,
                       unsigned seed, double gamma0, double gamma1) {
    fs::create_directories(out_dir);
    Grid g = Grid::line(n, 1.0);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<CheckLine> lines;

    // equality case: constant r and b0, Richardson-extrapolated in dt
    {
        Field gamma = sample(g, [&](double x, double) { return gamma0 + (gamma1 - gamma0) * x; });
        const double r0 = 1.0, T = 0.5;
        auto terminal = [&](double step) {
            Field b(g, 1.0);
            Field r(g, r0);
            const int steps = static_cast<int>(std::round(T / step));
            for (int k = 0; k < steps; ++k) b = step_linear_parabolic(b, gamma, r, step);
            return linf(b);
        };
        const double extrapolated = 2.0 * terminal(5e-5) - terminal(1e-4);
        const double err = std::abs(extrapolated - std::exp(r0 * T)) / std::exp(r0 * T);
        lines.push_back({err < 1e-8, "equality case: Richardson-extrapolated gap " + fmt(err) +
                                         " (needs < 1e-8)"});
    }

    // randomized gamma and r: the sup bound must never be exceeded
    bool all_pass = true;
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const double ga = gamma0 + (gamma1 - gamma0) * unit(rng);
        const double gb = gamma0 + (gamma1 - gamma0) * unit(rng);
        const double w1 = 2.0 * unit(rng) - 1.0, w2 = 2.0 * unit(rng) - 1.0;
        const double freq = 1.0 + 3.0 * unit(rng);
        Field gamma = sample(g, [&](double x, double) {
            return std::min(gamma1, std::max(gamma0, 0.5 * (ga + gb) + 0.5 * (gb - ga) * std::cos(pi * x)));
        });
        auto r_of_t = [&](double t) {
            return sample(g, [&](double x, double) {
                return w1 * std::sin(freq * t) + w2 * std::cos(pi * x) * std::cos(freq * t);
            });
        };
        const double amp = 0.2 + 0.6 * unit(rng);
        Field b0 = sample(g, [&](double x, double) { return 1.0 + amp * std::cos(pi * x); });
        AppendixReport rep = appendix_bound_check(gamma, r_of_t, b0, dt, t_end);
        all_pass = all_pass && rep.pass;
        worst = std::max(worst, rep.worst_ratio);
    }
    lines.push_back({all_pass, "randomized trials: worst sup-bound ratio " + fmt(worst) +
                                   " over " + std::to_string(trials) + " trials (<= 1 + 1e-8)"});
    return report_checks(lines, (fs::path(out_dir) / "appendix_summary.txt").string());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"solver and verification harness for triangular reaction-cross-diffusion systems"};
    app.require_subcommand(1);

    CommonArgs run_args, verify_args, stab_args, dual_args, conv_args, reg_args;
    std::string snapshot_times;
    double rho = 0.01, lambda = -1.0, m_weight = -1.0, min_order = -1.0;
    std::string conv_kind = "grid", conv_ladder, eps_csv, m_csv;
    int ax_n = 32, ax_trials = 8;
    double ax_dt = 2e-4, ax_t_end = 1.0, ax_g0 = 0.5, ax_g1 = 2.0;
    unsigned ax_seed = 1234;
    std::string ax_out = ".";

    CLI::App* c_run = app.add_subcommand("run", "integrate a scenario and emit CSV/snapshots/SVG");
    add_common(c_run, run_args);
    c_run->add_option("--snapshots", snapshot_times, "comma-separated times for field snapshots");

    CLI::App* c_verify = app.add_subcommand("verify", "run the scenario's verification checks");
    add_common(c_verify, verify_args);

    CLI::App* c_stab = app.add_subcommand("stability", "paired-run L2 stability experiment");
    add_common(c_stab, stab_args);
    c_stab->add_option("--rho", rho, "perturbation amplitude (cosine profile)");
    c_stab->add_option("--lambda", lambda, "override the L2 functional weight");

    CLI::App* c_dual = app.add_subcommand("dual-stability", "paired-run (H1)' stability experiment");
    add_common(c_dual, dual_args);
    c_dual->add_option("--rho", rho, "perturbation amplitude (cosine profile)");
    c_dual->add_option("--m-weight", m_weight, "override the dual functional weight");

    CLI::App* c_conv = app.add_subcommand("convergence", "grid or dt refinement study");
    add_common(c_conv, conv_args);
    c_conv->add_option("--kind", conv_kind, "grid | dt");
    c_conv->add_option("--ladder", conv_ladder, "comma-separated ladder (cells or dt values)");
    c_conv->add_option("--min-order", min_order, "required fitted order");

    CLI::App* c_reg = app.add_subcommand("regularize-study", "eps and M regularization ladders");
    add_common(c_reg, reg_args);
    c_reg->add_option("--eps-ladder", eps_csv, "mollifier scales, default 0.08,0.04,0.02,0.01");
    c_reg->add_option("--m-ladder", m_csv, "truncation levels, default 2,4,8,inf");

    CLI::App* c_ax = app.add_subcommand("appendix-check", "linear parabolic sup-bound checks");
    c_ax->add_option("--out", ax_out, "output directory");
    c_ax->add_option("--n", ax_n, "cells");
    c_ax->add_option("--dt", ax_dt, "time step");
    c_ax->add_option("--t-end", ax_t_end, "final time");
    c_ax->add_option("--trials", ax_trials, "randomized trials");
    c_ax->add_option("--seed", ax_seed, "random seed");
    c_ax->add_option("--gamma0", ax_g0, "lower diffusivity bound");
    c_ax->add_option("--gamma1", ax_g1, "upper diffusivity bound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return exit_config_error;
    }

    try {
        if (c_run->parsed()) return cmd_run(run_args, snapshot_times);
        if (c_verify->parsed()) return cmd_verify(verify_args);
        if (c_stab->parsed()) return cmd_stability(stab_args, rho, lambda, false);
        if (c_dual->parsed()) return cmd_stability(dual_args, rho, m_weight, true);
        if (c_conv->parsed()) return cmd_convergence(conv_args, conv_kind, conv_ladder, min_order);
        if (c_reg->parsed()) return cmd_regularize_study(reg_args, eps_csv, m_csv);
        if (c_ax->parsed())
            return cmd_appendix_check(ax_out, ax_n, ax_dt, ax_t_end, ax_trials, ax_seed, ax_g0, ax_g1);
    } catch (const ParseError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const AssumptionViolation& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_check_failed;
    }
    return exit_config_error;
}
