#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crossdiff/errors.hpp"
#include "crossdiff/expr.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/io.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/stepper.hpp"

namespace crossdiff {

/// Initial data: constant, Neumann-compatible cosine bump, or a snapshot file.
struct InitialSpec {
    enum class Kind { Constant, CosineBump, File };
    Kind kind = Kind::Constant;
    double base = 0.0;
    double amplitude = 0.0;
    int mode = 1;
    std::string path;

    static InitialSpec constant(double c) {
        InitialSpec s;
        s.kind = Kind::Constant;
        s.base = c;
        return s;
    }

    static InitialSpec cosine_bump(double base, double amplitude, int mode = 1) {
        InitialSpec s;
        s.kind = Kind::CosineBump;
        s.base = base;
        s.amplitude = amplitude;
        s.mode = mode;
        return s;
    }

    static InitialSpec file(std::string p) {
        InitialSpec s;
        s.kind = Kind::File;
        s.path = std::move(p);
        return s;
    }

    Field realize(const Grid& g) const {
        switch (kind) {
            case Kind::Constant:
                return Field(g, base);
            case Kind::CosineBump: {
                const double kx = mode * pi / g.extent[0];
                if (g.dim == 1)
                    return sample(g, [&](double x, double) { return base + amplitude * std::cos(kx * x); });
                const double ky = mode * pi / g.extent[1];
                return sample(g, [&](double x, double y) {
                    return base + amplitude * std::cos(kx * x) * std::cos(ky * y);
                });
            }
            case Kind::File: {
                Field f = load_field(path);
                if (!(f.grid == g))
                    throw std::runtime_error("initial snapshot " + path + " does not match the scenario grid");
                return f;
            }
        }
        throw std::logic_error("unreachable");
    }
};

struct Scenario {
    std::string name;
    ModelSpec model;
    Grid grid = Grid::line(128);
    SolverConfig solver;
    InitialSpec init_u = InitialSpec::constant(1.0);
    InitialSpec init_v = InitialSpec::constant(1.0);
    SampleBox box{0.0, 4.0, 0.0, 4.0};
    std::vector<std::string> checks{"max-principle", "nonnegativity", "energy"};

    Field initial_u() const { return init_u.realize(grid); }
    Field initial_v() const { return init_v.realize(grid); }
};

// --- presets -----------------------------------------------------------------

/// Pure heat flow: B == 1, f == g == 0; the analytic decay benchmark.
inline Scenario preset_heat_sanity() {
    Scenario s;
    s.name = "heat-sanity";
    s.model.diffusivity = DiffusivitySpec::constant(1.0);
    s.model.reaction = ReactionSpec::zero();
    s.model.reaction.C_f = 1.0;
    s.model.reaction.C_f_prime = 1.0;
    s.model.reaction.C_g = 1.0;
    s.model.reaction.C_g_prime = 1.0;
    s.model.d_v = 1.0;
    s.grid = Grid::line(128, 1.0);
    s.solver.dt = 1e-4;
    s.solver.t_end = 0.1;
    s.init_u = InitialSpec::cosine_bump(1.0, 1.0, 1);
    s.init_v = InitialSpec::constant(1.0);
    s.box = {0.0, 3.0, 0.0, 3.0};
    return s;
}

/// Lotka-Volterra competition with a resource-sensitive diffusivity
/// B = 1 + v/(1+v). Bounds: B and d1A in [1, 2]; on the declared box
/// [0,4]^2, |d2A| = u/(1+v)^2 <= 4 and |d2B| = 1/(1+v)^2 <= 1.
inline Scenario preset_competition() {
    Scenario s;
    s.name = "competition";
    s.model.diffusivity = DiffusivitySpec::from_B(
        [](double, double v) { return 1.0 + v / (1.0 + v); }, 1.0, 2.0, 4.0, 1.0);
    s.model.diffusivity.d1A_closed = [](double, double v) { return 1.0 + v / (1.0 + v); };
    s.model.diffusivity.d2A_closed = [](double u, double v) { return u / ((1.0 + v) * (1.0 + v)); };
    s.model.diffusivity.d2B_closed = [](double, double v) { return 1.0 / ((1.0 + v) * (1.0 + v)); };
    s.model.reaction.f = [](double u, double v) { return 1.0 - u - 0.5 * v; };
    s.model.reaction.g = [](double u, double v) { return 1.0 - v - 0.5 * u; };
    s.model.reaction.C_f = 1.0;
    s.model.reaction.C_f_prime = 1.0;
    s.model.reaction.C_g = 1.0;
    s.model.reaction.C_g_prime = 1.0;
    s.model.d_v = 1.0;
    s.grid = Grid::line(128, 1.0);
    s.solver.dt = 1e-3;
    s.solver.t_end = 1.0;
    s.init_u = InitialSpec::cosine_bump(0.6, 0.3, 1);
    s.init_v = InitialSpec::cosine_bump(0.5, 0.2, 2);
    s.box = {0.0, 4.0, 0.0, 4.0};
    return s;
}

/// Starvation-driven instantiation with illustrative conversion rates
/// phi(x) = psi(x) = x/(1+x); competition reactions. The a2/a3 bounds are
/// sampled values on the declared box with margin, re-audited at parse time.
inline Scenario preset_starvation() {
    Scenario s;
    s.name = "starvation";
    StarvationSpec sp;
    sp.phi = [](double x) { return x / (1.0 + x); };
    sp.psi = [](double x) { return x / (1.0 + x); };
    sp.a = 1.0;
    sp.b = 2.0;
    sp.c = 1.0;
    sp.d = 1.0;
    sp.d_a = 1.0;
    sp.d_b = 2.0;
    s.model.diffusivity = starvation_diffusivity(sp, /*a2=*/0.45, /*a3=*/0.65);
    s.model.origin = ModelOrigin::StarvationDriven;
    s.model.starvation = sp;
    s.model.reaction.f = [](double u, double v) { return 1.0 - u - 0.5 * v; };
    s.model.reaction.g = [](double u, double v) { return 1.0 - v - 0.5 * u; };
    s.model.reaction.C_f = 1.0;
    s.model.reaction.C_f_prime = 1.0;
    s.model.reaction.C_g = 1.0;
    s.model.reaction.C_g_prime = 1.0;
    s.model.d_v = 1.0;
    s.grid = Grid::line(128, 1.0);
    s.solver.dt = 1e-3;
    s.solver.t_end = 0.5;
    s.init_u = InitialSpec::cosine_bump(0.8, 0.4, 1);
    s.init_v = InitialSpec::cosine_bump(0.6, 0.3, 1);
    s.box = {0.0, 4.0, 0.0, 4.0};
    return s;
}

inline std::vector<std::string> preset_names() { return {"heat-sanity", "competition", "starvation"}; }

inline std::optional<Scenario> find_preset(const std::string& name) {
    if (name == "heat-sanity") return preset_heat_sanity();
    if (name == "competition") return preset_competition();
    if (name == "starvation") return preset_starvation();
    return std::nullopt;
}

// --- config file -------------------------------------------------------------

namespace detail {

struct ConfigEntry {
    std::string value;
    int line = 0;
};

using ConfigSection = std::map<std::string, ConfigEntry>;
using ConfigData = std::map<std::string, ConfigSection>;

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline ConfigData read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file " + path, 0, 0);
    ConfigData data;
    std::string section = "";
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError("unterminated section header", lineno, 1);
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno, 1);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno, 1);
        data[section][key] = {value, lineno};
    }
    return data;
}

inline double parse_double(const ConfigEntry& e, const std::string& key) {
    if (e.value == "inf" || e.value == "infinity") return std::numeric_limits<double>::infinity();
    try {
        size_t used = 0;
        const double x = std::stod(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw ParseError("key '" + key + "' is not a number: '" + e.value + "'", e.line, 1);
    }
}

inline int parse_int(const ConfigEntry& e, const std::string& key) {
    try {
        size_t used = 0;
        const int x = std::stoi(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw ParseError("key '" + key + "' is not an integer: '" + e.value + "'", e.line, 1);
    }
}

inline InitialSpec parse_initial(const ConfigEntry& e, const std::string& key) {
    std::istringstream is(e.value);
    std::string kind;
    is >> kind;
    if (kind == "constant") {
        double c;
        if (!(is >> c)) throw ParseError("'" + key + " = constant' needs one value", e.line, 1);
        return InitialSpec::constant(c);
    }
    if (kind == "cosine-bump") {
        double base, amp;
        int mode = 1;
        if (!(is >> base >> amp)) throw ParseError("'" + key + " = cosine-bump' needs base and amplitude", e.line, 1);
        is >> mode;
        return InitialSpec::cosine_bump(base, amp, mode);
    }
    if (kind == "file") {
        std::string p;
        if (!(is >> p)) throw ParseError("'" + key + " = file' needs a path", e.line, 1);
        std::ifstream probe(p);
        if (!probe) throw ParseError("initial snapshot file not found: " + p, e.line, 1);
        return InitialSpec::file(p);
    }
    throw ParseError("unknown initial-data kind '" + kind + "' (constant | cosine-bump | file)",
                     e.line, 1);
}

} // namespace detail

/// Parse, validate and audit a scenario file. Sections: [model] (preset or
/// inline B/f/g expressions with their declared bounds), [grid], [solver],
/// [initial], [verify]. The structural assumptions are sampled on the
/// declared (u, v) box before any run; violations fail fast.
inline Scenario parse_config(const std::string& path) {
    using detail::ConfigEntry;
    auto data = detail::read_config(path);

    Scenario sc;
    bool have_preset = false;
    if (auto mit = data.find("model"); mit != data.end()) {
        if (auto p = mit->second.find("preset"); p != mit->second.end()) {
            auto preset = find_preset(p->second.value);
            if (!preset)
                throw ParseError("unknown preset '" + p->second.value + "'", p->second.line, 1);
            sc = *preset;
            have_preset = true;
        }
    }
    sc.name = path;

    auto section = [&](const std::string& name) -> detail::ConfigSection& {
        static detail::ConfigSection empty;
        auto it = data.find(name);
        return it == data.end() ? empty : it->second;
    };

    // [model]
    {
        auto& m = section("model");
        auto need = [&](const char* key) -> const ConfigEntry& {
            auto it = m.find(key);
            if (it == m.end())
                throw ParseError(std::string("missing key '") + key + "' in [model]", 0, 0);
            return it->second;
        };
        auto opt_num = [&](const char* key, double& target) {
            if (auto it = m.find(key); it != m.end()) target = detail::parse_double(it->second, key);
        };
        const bool inline_model = m.count("B") || m.count("f") || m.count("g");
        if (inline_model) {
            const auto& Be = need("B");
            const auto& fe = need("f");
            const auto& ge = need("g");
            DiffusivitySpec d;
            d.B = ExprParser::parse(Be.value, Be.line);
            d.a0 = detail::parse_double(need("a0"), "a0");
            d.a1 = detail::parse_double(need("a1"), "a1");
            d.a2 = detail::parse_double(need("a2"), "a2");
            d.a3 = detail::parse_double(need("a3"), "a3");
            ReactionSpec r;
            r.f = ExprParser::parse(fe.value, fe.line);
            r.g = ExprParser::parse(ge.value, ge.line);
            r.C_f = detail::parse_double(need("C_f"), "C_f");
            r.C_f_prime = detail::parse_double(need("C_f_prime"), "C_f_prime");
            r.C_g = detail::parse_double(need("C_g"), "C_g");
            r.C_g_prime = detail::parse_double(need("C_g_prime"), "C_g_prime");
            sc.model.diffusivity = std::move(d);
            sc.model.reaction = std::move(r);
            sc.model.origin = ModelOrigin::Direct;
            sc.model.starvation.reset();
            sc.model.d_v = detail::parse_double(need("d_v"), "d_v");
        } else if (!have_preset && !m.empty()) {
            throw ParseError("[model] needs either 'preset' or inline 'B', 'f', 'g'", 0, 0);
        } else if (have_preset) {
            opt_num("d_v", sc.model.d_v);
            opt_num("a2", sc.model.diffusivity.a2);
            opt_num("a3", sc.model.diffusivity.a3);
        } else {
            throw ParseError("missing [model] section", 0, 0);
        }
        opt_num("box_u", sc.box.u_hi);
        opt_num("box_v", sc.box.v_hi);
    }

    // [grid]
    {
        auto& g = section("grid");
        int dim = sc.grid.dim, nx = sc.grid.n[0], ny = sc.grid.dim == 2 ? sc.grid.n[1] : 64;
        double ex = sc.grid.extent[0], ey = sc.grid.dim == 2 ? sc.grid.extent[1] : 1.0;
        if (auto it = g.find("dim"); it != g.end()) dim = detail::parse_int(it->second, "dim");
        if (auto it = g.find("nx"); it != g.end()) nx = detail::parse_int(it->second, "nx");
        if (auto it = g.find("ny"); it != g.end()) ny = detail::parse_int(it->second, "ny");
        if (auto it = g.find("extent_x"); it != g.end()) ex = detail::parse_double(it->second, "extent_x");
        if (auto it = g.find("extent_y"); it != g.end()) ey = detail::parse_double(it->second, "extent_y");
        if (dim == 1) sc.grid = Grid::line(nx, ex);
        else if (dim == 2) sc.grid = Grid::box(nx, ny, ex, ey);
        else throw ParseError("grid dim must be 1 or 2", 0, 0);
    }

    // [solver]
    {
        auto& s = section("solver");
        if (auto it = s.find("scheme"); it != s.end()) {
            const std::string& v = it->second.value;
            if (v == "nondivergence-imex") sc.solver.scheme = Scheme::NonDivergenceIMEX;
            else if (v == "divergence-explicit") sc.solver.scheme = Scheme::DivergenceExplicit;
            else if (v == "divergence-implicit") sc.solver.scheme = Scheme::DivergenceImplicit;
            else throw ParseError("unknown scheme '" + v + "'", it->second.line, 1);
        }
        auto opt_num = [&](const char* key, double& target) {
            if (auto it = s.find(key); it != s.end()) target = detail::parse_double(it->second, key);
        };
        opt_num("dt", sc.solver.dt);
        opt_num("t_end", sc.solver.t_end);
        opt_num("linear_tol", sc.solver.linear_tol);
        opt_num("nonlinear_tol", sc.solver.nonlinear_tol);
        opt_num("truncation_M", sc.solver.truncation_M);
        opt_num("mollifier_eps", sc.solver.mollifier_eps);
        opt_num("cfl_safety", sc.solver.cfl_safety);
        if (sc.solver.dt <= 0.0 || sc.solver.t_end <= 0.0)
            throw ParseError("dt and t_end must be positive", 0, 0);
    }

    // [initial]
    {
        auto& i = section("initial");
        if (auto it = i.find("u"); it != i.end()) sc.init_u = detail::parse_initial(it->second, "u");
        if (auto it = i.find("v"); it != i.end()) sc.init_v = detail::parse_initial(it->second, "v");
    }

    // [verify]
    {
        auto& v = section("verify");
        if (auto it = v.find("checks"); it != v.end()) {
            sc.checks.clear();
            std::istringstream is(it->second.value);
            std::string item;
            while (std::getline(is, item, ',')) {
                item = detail::trim(item);
                if (!item.empty()) sc.checks.push_back(item);
            }
        }
    }

    AssumptionReport rep = check_assumptions(sc.model, sc.box);
    if (!rep.all_pass)
        throw AssumptionViolation("scenario '" + path + "' fails its assumption audit:\n" +
                                  rep.summary());
    return sc;
}

/// Resolve a --scenario argument: preset name first, then config-file path.
inline Scenario scenario_from_arg(const std::string& arg) {
    if (auto p = find_preset(arg)) {
        AssumptionReport rep = check_assumptions(p->model, p->box);
        if (!rep.all_pass)
            throw AssumptionViolation("preset '" + arg + "' fails its assumption audit:\n" +
                                      rep.summary());
        return *p;
    }
    return parse_config(arg);
}

} // namespace crossdiff
