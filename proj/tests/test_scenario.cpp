#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "crossdiff/expr.hpp"
#include "crossdiff/io.hpp"
#include "crossdiff/scenario.hpp"
#include "crossdiff/svg.hpp"

using namespace crossdiff;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

const char* inline_config = R"cfg(
[model]
B = 1 + v/(1 + v)
f = 1 - u - 0.5*v
g = 1 - v - 0.5*u
d_v = 2.0
a0 = 1.0
a1 = 2.0
a2 = 4.0
a3 = 1.0
C_f = 1.0
C_f_prime = 1.0
C_g = 1.0
C_g_prime = 1.0
box_u = 4.0
box_v = 4.0

[grid]
dim = 1
nx = 48
extent_x = 2.0

[solver]
scheme = divergence-implicit
dt = 5e-4
t_end = 0.25
truncation_M = inf

[initial]
u = cosine-bump 0.6 0.3 1
v = constant 0.5

[verify]
checks = max-principle, nonnegativity
)cfg";

} // namespace

TEST_CASE("expressions evaluate like their closed forms") {
    auto b = ExprParser::parse("1 + v/(1 + v)");
    auto f = ExprParser::parse("1 - u - 0.5*v");
    auto m = ExprParser::parse("min(u, 2)*exp(-v)");
    auto neg = ExprParser::parse("-u*(1 - v)/(2 + u)");
    for (double u : {0.0, 0.3, 1.7, 4.0})
        for (double v : {0.0, 0.5, 2.5}) {
            CHECK(b(u, v) == doctest::Approx(1.0 + v / (1.0 + v)).epsilon(1e-15));
            CHECK(f(u, v) == doctest::Approx(1.0 - u - 0.5 * v).epsilon(1e-15));
            CHECK(m(u, v) == doctest::Approx(std::min(u, 2.0) * std::exp(-v)).epsilon(1e-15));
            CHECK(neg(u, v) == doctest::Approx(-u * (1.0 - v) / (2.0 + u)).epsilon(1e-15));
        }
}

TEST_CASE("expression errors carry line and column") {
    CHECK_THROWS_AS(ExprParser::parse("1 + "), ParseError);
    CHECK_THROWS_AS(ExprParser::parse("foo(u)"), ParseError);
    CHECK_THROWS_AS(ExprParser::parse("min(u)"), ParseError);
    CHECK_THROWS_AS(ExprParser::parse("u @ v"), ParseError);
    try {
        ExprParser::parse("1 + (u", 7);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.line == 7);
        CHECK(e.column >= 6);
    }
}

TEST_CASE("presets resolve and pass their own audits") {
    for (const std::string& name : preset_names()) {
        Scenario sc = scenario_from_arg(name);
        CHECK(sc.name == name);
        AssumptionReport rep = check_assumptions(sc.model, sc.box);
        CHECK(rep.all_pass);
    }
    CHECK(!find_preset("no-such-preset").has_value());
}

TEST_CASE("heat-sanity preset is the pure heat benchmark") {
    Scenario sc = preset_heat_sanity();
    CHECK(sc.model.diffusivity.B(0.3, 0.7) == 1.0);
    CHECK(sc.model.reaction.f(2.0, 3.0) == 0.0);
    CHECK(sc.model.reaction.g(2.0, 3.0) == 0.0);
    CHECK(sc.model.d_v == 1.0);
    CHECK(sc.grid.n[0] == 128);
}

TEST_CASE("competition preset coefficients match their definitions") {
    Scenario sc = preset_competition();
    CHECK(sc.model.reaction.f(1.0, 1.0) == doctest::Approx(-0.5));
    CHECK(sc.model.reaction.g(1.0, 1.0) == doctest::Approx(-0.5));
    CHECK(sc.model.diffusivity.B(0.0, 1.0) == doctest::Approx(1.5));
    CHECK(sc.model.diffusivity.a0 == 1.0);
    CHECK(sc.model.diffusivity.a1 == 2.0);
}

TEST_CASE("inline config parses, audits and realizes") {
    TempFile cfg("scenario_inline_test.cfg", inline_config);
    Scenario sc = parse_config(cfg.path);
    CHECK(sc.model.d_v == 2.0);
    CHECK(sc.solver.scheme == Scheme::DivergenceImplicit);
    CHECK(sc.grid.n[0] == 48);
    CHECK(sc.grid.extent[0] == 2.0);
    CHECK(sc.checks.size() == 2);
    CHECK(sc.model.diffusivity.B(1.0, 1.0) == doctest::Approx(1.5));
    Field u0 = sc.initial_u();
    CHECK(u0.size() == 48);
    CHECK(u0[0] == doctest::Approx(0.6 + 0.3 * std::cos(pi * sc.grid.center(0, 0) / 2.0)));
}

TEST_CASE("missing required keys raise ParseError naming the key") {
    std::string no_dv(inline_config);
    no_dv.replace(no_dv.find("d_v = 2.0"), 9, "");
    TempFile cfg("scenario_missing_dv.cfg", no_dv);
    try {
        parse_config(cfg.path);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("d_v") != std::string::npos);
    }
}

TEST_CASE("declared bounds that fail the audit raise AssumptionViolation") {
    std::string bad(inline_config);
    bad.replace(bad.find("a1 = 2.0"), 8, "a1 = 1.4");
    TempFile cfg("scenario_bad_bound.cfg", bad);
    CHECK_THROWS_AS(parse_config(cfg.path), AssumptionViolation);
}

TEST_CASE("unknown preset and malformed syntax are ParseErrors") {
    TempFile cfg("scenario_bad_preset.cfg", "[model]\npreset = nope\n");
    CHECK_THROWS_AS(parse_config(cfg.path), ParseError);
    TempFile cfg2("scenario_bad_syntax.cfg", "[model\n");
    CHECK_THROWS_AS(parse_config(cfg2.path), ParseError);
    TempFile cfg3("scenario_bad_initial.cfg",
                  "[model]\npreset = heat-sanity\n[initial]\nu = wedge 1 2\n");
    CHECK_THROWS_AS(parse_config(cfg3.path), ParseError);
}

TEST_CASE("initial data can come from a snapshot file") {
    Grid g = Grid::line(128, 1.0); // heat-sanity grid
    Field f = sample(g, [](double x, double) { return 1.0 + 0.25 * std::cos(pi * x); });
    save_field("scenario_init_u.snap", f);
    TempFile cfg("scenario_file_init.cfg",
                 "[model]\npreset = heat-sanity\n[initial]\nu = file scenario_init_u.snap\n");
    Scenario sc = parse_config(cfg.path);
    Field u0 = sc.initial_u();
    for (int i = 0; i < u0.size(); ++i) CHECK(u0[i] == f[i]);
    std::remove("scenario_init_u.snap");
}

TEST_CASE("CSV writer emits the exact column set and one row per record") {
    Scenario sc = preset_competition();
    sc.solver.t_end = 0.05;
    Grid g = Grid::line(32, 1.0);
    RunResult rr = run(sc.model, sc.solver, sc.init_u.realize(g), sc.init_v.realize(g));
    write_csv("series_test.csv", rr.series);
    std::ifstream in("series_test.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,mass_u,mass_v,l2_u,l2_v,l4_u,linf_u,linf_v,l2_grad_u,l2_grad_v,"
                    "mass_residual,energy_residual");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == rr.steps + 1);
    CHECK(static_cast<size_t>(rows) == rr.series.size());
    std::remove("series_test.csv");
}

TEST_CASE("identical configs produce bit-identical CSV bytes") {
    Scenario sc = preset_competition();
    sc.solver.t_end = 0.05;
    Grid g = Grid::line(32, 1.0);
    auto emit = [&](const std::string& path) {
        RunResult rr = run(sc.model, sc.solver, sc.init_u.realize(g), sc.init_v.realize(g));
        write_csv(path, rr.series);
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string a = emit("series_det_a.csv");
    const std::string b = emit("series_det_b.csv");
    CHECK(a == b);
    std::remove("series_det_a.csv");
    std::remove("series_det_b.csv");
}

TEST_CASE("SVG emitters produce well-formed minimal plots") {
    std::vector<double> xs{0.0, 0.5, 1.0}, ys{1.0, 0.4, 0.6};
    svg_line_plot("plot_test.svg", {{"series", xs, ys}}, "test");
    std::ifstream in("plot_test.svg");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string svg = ss.str();
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    std::remove("plot_test.svg");

    Field f = sample(Grid::box(8, 8), [](double x, double y) { return x + y; });
    svg_heatmap("heat_test.svg", f);
    std::ifstream in2("heat_test.svg");
    std::ostringstream ss2;
    ss2 << in2.rdbuf();
    CHECK(ss2.str().find("rect") != std::string::npos);
    std::remove("heat_test.svg");
}
