// Experiment driver: adaptive/uniform solves, convergence studies with CSV/SVG
// output, and the verification suites.

#include "awbem/analysis.hpp"
#include "awbem/checks.hpp"
#include "awbem/io.hpp"
#include "awbem/solver.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace awbem;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 64;

struct RunSpec {
    std::string surface_name = "fichera";
    std::string rhs_name = "point";
    double alpha = 0.5;
    std::string mode = "adaptive";
    SolverConfig cfg;
    std::string csv_path;
    std::string svg_path;
    std::string solution_path;
    std::string cache_path;
    bool no_timing = false;
};

RightHandSide build_rhs(const RunSpec& spec, const Surface& surface) {
    if (spec.rhs_name == "point") {
        const Vec3 vertex =
            surface.name() == "fichera" ? Vec3(0.5, 0.5, 0.5) : Vec3(1.0, 1.0, 1.0);
        return RightHandSide::point_singularity(spec.alpha, vertex);
    }
    if (spec.rhs_name == "cartoon") {
        if (surface.name() != "cube")
            throw std::invalid_argument("cartoon rhs is defined on the cube");
        return RightHandSide::cartoon(Vec3(0.0, 0.0, 1.0), 0.5, 1.0);
    }
    if (spec.rhs_name == "constant")
        return RightHandSide::cartoon(Vec3(0.0, 0.0, 0.0), 1e9, 1.0);
    throw std::invalid_argument("unknown rhs: " + spec.rhs_name);
}

void add_common_flags(CLI::App* cmd, RunSpec& spec) {
    cmd->add_option("--surface", spec.surface_name, "surface name: fichera | cube")->required();
    cmd->add_option("--rhs", spec.rhs_name, "right-hand side: point | cartoon | constant");
    cmd->add_option("--alpha", spec.alpha, "point-singularity exponent in [1/2, 1)");
    cmd->add_option("--eps", spec.cfg.eps, "target residual norm");
    cmd->add_option("--omega", spec.cfg.omega, "residual-equivalence factor in (0,1)");
    cmd->add_option("--theta", spec.cfg.theta, "coarsening factor in (0,1)");
    cmd->add_option("--max-level", spec.cfg.max_uniform_level,
                    "last level of the uniform refinement ladder");
    cmd->add_option("--level-cap", spec.cfg.j_max, "level cap of the index universe");
    cmd->add_option("--quad-order", spec.cfg.quad.outer_order, "outer Gauss order per direction");
    cmd->add_option("--threads", spec.cfg.threads, "worker threads");
    cmd->add_option("--csv", spec.csv_path, "write the convergence history as CSV");
    cmd->add_option("--svg", spec.svg_path, "write a log-log convergence plot as SVG");
    cmd->add_option("--dump-solution", spec.solution_path, "write the final coefficients");
    cmd->add_option("--cache", spec.cache_path, "entry-cache dump file (loaded if present)");
    cmd->add_flag("--no-timing", spec.no_timing, "record zero wall times (reproducible output)");
    cmd->set_config("--config", "", "flat key=value configuration file");
}

void strip_timing(std::vector<ConvergenceRecord>& history) {
    for (ConvergenceRecord& r : history) r.wall_time_s = 0.0;
}

int cmd_solve(RunSpec spec) {
    const Surface surface = make_surface(spec.surface_name);
    const RightHandSide rhs = build_rhs(spec, surface);
    spec.cfg.mode = spec.mode == "uniform" ? SolveMode::Uniform : SolveMode::Adaptive;
    spec.cfg.record_timing = !spec.no_timing;

    Problem problem(surface, rhs, spec.cfg);
    if (!spec.cache_path.empty()) problem.cache().load(spec.cache_path);

    SolverState state = problem.solve();
    if (spec.no_timing) strip_timing(state.history);

    if (!spec.csv_path.empty() && !save_history_csv(spec.csv_path, state.history)) {
        std::cerr << "error: cannot write " << spec.csv_path << "\n";
        return kExitError;
    }
    if (!spec.solution_path.empty() && !save_coeffs(spec.solution_path, state.solution)) {
        std::cerr << "error: cannot write " << spec.solution_path << "\n";
        return kExitError;
    }
    if (!spec.svg_path.empty()) {
        PlotSeries series;
        series.label = spec.mode + " refinement";
        series.color = spec.mode == "uniform" ? "#c0392b" : "#2980b9";
        for (const ConvergenceRecord& r : state.history)
            series.points.emplace_back(static_cast<double>(r.dofs), r.residual_norm);
        std::ofstream out(spec.svg_path);
        out << render_loglog_svg(spec.surface_name + " / " + spec.rhs_name, {series}, {});
    }
    if (!spec.cache_path.empty()) problem.cache().dump(spec.cache_path);

    for (std::size_t i = 0; i < state.history.size(); ++i)
        std::cout << "step " << i << ": dofs " << state.history[i].dofs << "  residual "
                  << state.history[i].residual_norm << "  delta " << state.history[i].delta
                  << "\n";
    std::cout << (state.converged ? "converged" : "partial result (level cap reached)")
              << "\n";
    return state.converged ? kExitOk : kExitPartial;
}

int cmd_study(RunSpec spec) {
    const Surface surface = make_surface(spec.surface_name);
    const RightHandSide rhs = build_rhs(spec, surface);
    spec.cfg.record_timing = !spec.no_timing;

    SolverConfig uniform_cfg = spec.cfg;
    uniform_cfg.mode = SolveMode::Uniform;
    Problem uniform_problem(surface, rhs, uniform_cfg);
    if (!spec.cache_path.empty()) uniform_problem.cache().load(spec.cache_path);
    SolverState uniform_state = uniform_problem.solve();

    SolverConfig adaptive_cfg = spec.cfg;
    adaptive_cfg.mode = SolveMode::Adaptive;
    Problem adaptive_problem(surface, rhs, adaptive_cfg);
    if (!spec.cache_path.empty()) adaptive_problem.cache().load(spec.cache_path);
    SolverState adaptive_state = adaptive_problem.solve();
    if (!spec.cache_path.empty()) adaptive_problem.cache().dump(spec.cache_path);

    if (spec.no_timing) {
        strip_timing(uniform_state.history);
        strip_timing(adaptive_state.history);
    }

    auto to_series = [](const std::vector<ConvergenceRecord>& h) {
        std::vector<std::pair<double, double>> s;
        for (const ConvergenceRecord& r : h)
            s.emplace_back(static_cast<double>(r.dofs), r.residual_norm);
        return s;
    };
    const auto uniform_series = to_series(uniform_state.history);
    const auto adaptive_series = to_series(adaptive_state.history);

    double uniform_rate = 0.0, adaptive_rate = 0.0;
    if (uniform_series.size() >= 2) {
        const RateFit fit = fit_rate(uniform_series);
        uniform_rate = fit.slope;
        std::cout << "uniform rate:  " << fit.slope << "  (r^2 " << fit.r_squared << ", "
                  << uniform_series.size() << " points)\n";
    }
    if (adaptive_series.size() >= 3) {
        const auto [b, e] = tail_window(adaptive_series.size());
        const RateFit fit = fit_rate(adaptive_series, b, e);
        adaptive_rate = fit.slope;
        std::cout << "adaptive rate: " << fit.slope << "  (r^2 " << fit.r_squared
                  << ", window " << b << ".." << e << " of " << adaptive_series.size()
                  << ")\n";
    }

    if (!spec.csv_path.empty()) {
        std::ofstream out(spec.csv_path);
        if (!out) {
            std::cerr << "error: cannot write " << spec.csv_path << "\n";
            return kExitError;
        }
        write_study_csv(out, uniform_state.history, adaptive_state.history);
    }
    if (!spec.svg_path.empty()) {
        std::vector<PlotSeries> series(2);
        series[0].label = "uniform refinement";
        series[0].color = "#c0392b";
        series[0].points = uniform_series;
        series[1].label = "adaptive refinement";
        series[1].color = "#2980b9";
        series[1].points = adaptive_series;
        std::vector<GuideLine> guides;
        if (!uniform_series.empty()) {
            const double r_uni = spec.rhs_name == "point" ? (1.0 - spec.alpha) / 2.0 : 0.25;
            const double r_ada = spec.rhs_name == "point" ? (1.0 - spec.alpha) : 0.5;
            guides.push_back({r_uni, uniform_series.front().first,
                              1.3 * uniform_series.front().second,
                              "asymptotics n^-" + std::to_string(r_uni)});
            guides.push_back({r_ada, uniform_series.front().first,
                              uniform_series.front().second,
                              "asymptotics n^-" + std::to_string(r_ada)});
        }
        std::ofstream out(spec.svg_path);
        out << render_loglog_svg(spec.surface_name + " / " + spec.rhs_name + " study", series,
                                 guides);
    }
    (void)uniform_rate;
    (void)adaptive_rate;
    return kExitOk;
}

int cmd_verify(const std::string& suite, int threads) {
    std::vector<checks::CheckResult> results;
    if (suite == "quadrature")
        results = checks::quadrature_suite();
    else if (suite == "basis")
        results = checks::basis_suite();
    else if (suite == "appendix")
        results = checks::appendix_suite();
    else if (suite == "oracle")
        results = checks::oracle_suite(threads);
    else {
        std::cerr << "unknown suite: " << suite
                  << " (expected quadrature | basis | appendix | oracle)\n";
        return kExitUsage;
    }
    checks::print_table(std::cout, results);
    return checks::all_passed(results) ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive wavelet boundary element solver"};
    app.require_subcommand(1);

    RunSpec solve_spec;
    CLI::App* solve_cmd = app.add_subcommand("solve", "run one adaptive or uniform solve");
    add_common_flags(solve_cmd, solve_spec);
    solve_cmd->add_option("--mode", solve_spec.mode, "adaptive | uniform")
        ->check(CLI::IsMember({"adaptive", "uniform"}));

    RunSpec study_spec;
    CLI::App* study_cmd =
        app.add_subcommand("study", "run uniform and adaptive solves and fit rates");
    add_common_flags(study_cmd, study_spec);

    std::string verify_suite;
    int verify_threads = 1;
    CLI::App* verify_cmd = app.add_subcommand("verify", "run a verification suite");
    verify_cmd->add_option("suite", verify_suite, "quadrature | basis | appendix | oracle")
        ->required();
    verify_cmd->add_option("--threads", verify_threads, "worker threads");

    std::string dump_name;
    CLI::App* dump_cmd = app.add_subcommand("dump-surface", "print the patch list");
    dump_cmd->add_option("--surface", dump_name, "surface name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (solve_cmd->parsed()) return cmd_solve(solve_spec);
        if (study_cmd->parsed()) return cmd_study(study_spec);
        if (verify_cmd->parsed()) return cmd_verify(verify_suite, verify_threads);
        if (dump_cmd->parsed()) {
            dump_surface(std::cout, make_surface(dump_name));
            return kExitOk;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitUsage;
}
