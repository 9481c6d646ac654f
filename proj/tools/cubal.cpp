// Command-line front end: rule analysis, flow verification, time-series
// evolution, matrix exponentials, and finite-difference PDE checks, all
// driven by JSON config documents.
//
// Exit codes: 0 = pass, 1 = a verification ran and failed, 2 = bad
// configuration or refused construction.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cubal/cubal.hpp"

namespace {

using namespace cubal;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

TimeGrid parse_grid_spec(const std::string& spec) {
    TimeGrid grid;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &grid.start, &grid.end, &grid.step) != 3)
        throw ValidationError("grid spec must be start:end:step, got '" + spec + "'");
    grid.times(); // validates
    return grid;
}

// Verification triples from a grid: consecutive windows (t[i], t[i+1], t[i+2]).
std::vector<std::array<double, 3>> triples_from_grid(const TimeGrid& grid) {
    const std::vector<double> ts = grid.times();
    if (ts.size() < 3)
        throw ValidationError("grid needs at least 3 points to form (s, tau, t) triples");
    std::vector<std::array<double, 3>> out;
    for (std::size_t i = 0; i + 2 < ts.size(); ++i) out.push_back({ts[i], ts[i + 1], ts[i + 2]});
    return out;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write output file: " + path);
    out << j.dump(2) << "\n";
}

void print_matrix(const CubicMatrix& a) {
    const int m = a.dim();
    for (int p = 1; p <= m * m * m; ++p) {
        const double v = a.flat(p);
        if (v == 0.0) continue;
        const FlatIndex f = FlatIndex::from_value(m, p);
        std::cout << "  (" << f.i << "," << f.j << "," << f.k << ") = " << fmt17(v) << "\n";
    }
}

int cmd_algebra_check(const std::string& config_path, double tol,
                      const std::optional<std::string>& out_path) {
    const MulRule rule = load_rule(config_path);
    AnalyzeOptions opts;
    opts.tol = tol;
    const AlgebraReport report = analyze(rule, opts);
    std::cout << "rule: " << rule.describe() << "\n"
              << "commutative:   " << (report.commutative ? "yes" : "no") << "\n"
              << "associative:   " << (report.associative ? "yes" : "no") << "\n"
              << "unital:        " << (report.unital ? "yes" : "no") << "\n"
              << "norm constant: " << fmt17(report.norm_constant) << "\n"
              << "power-associative (sampled, " << report.power_assoc.samples
              << " samples): " << (report.power_assoc.pass ? "pass" : "FAIL") << "\n"
              << "idempotents found: " << report.idempotents.size() << "\n";
    if (rule.is_maksimov_type())
        std::cout << "uniformly distributed op: "
                  << (is_uniformly_distributed(rule.maksimov_op()) ? "yes" : "no") << "\n";
    if (report.unital) {
        std::cout << "unit:\n";
        print_matrix(*report.unit);
    }
    if (out_path) write_json(*out_path, algebra_report_to_json(report, rule));
    return 0;
}

int cmd_flow_verify(const std::string& config_path, double tol,
                    const std::optional<std::string>& grid_spec,
                    const std::optional<std::string>& out_path) {
    const LoadedFlow loaded = load_flow(config_path);
    std::vector<std::array<double, 3>> triples;
    if (grid_spec)
        triples = triples_from_grid(parse_grid_spec(*grid_spec));
    else if (loaded.flow.discrete)
        triples = standard_grid_discrete();
    else
        triples = standard_grid();
    const KceReport report = check_kce(loaded.flow, triples, tol);
    std::cout << "family: " << loaded.flow.label << " over " << loaded.flow.rule.describe()
              << "\n";
    for (const KceSample& s : report.samples)
        std::cout << "  (s,tau,t) = (" << s.s << ", " << s.tau << ", " << s.t
                  << "): l1 = " << fmt17(s.residual_l1) << ", max = " << fmt17(s.residual_max)
                  << "\n";
    std::cout << "max residual " << fmt17(report.max_residual) << " vs tol " << fmt17(tol) << ": "
              << (report.pass ? "PASS" : "FAIL") << "\n";
    if (out_path) write_json(*out_path, kce_report_to_json(report, loaded.flow.label));
    return report.pass ? 0 : 1;
}

int cmd_flow_evolve(const std::string& config_path, std::optional<double> s_opt,
                    const std::optional<std::string>& grid_spec,
                    const std::optional<std::string>& out_path) {
    const LoadedFlow loaded = load_flow(config_path);
    const TimeGrid grid = grid_spec ? parse_grid_spec(*grid_spec) : loaded.time_grid;
    const double s = s_opt.value_or(grid.start);
    const int m = loaded.flow.rule.dim();
    std::string csv = "t,i,j,k,value\n";
    bool emitted = false;
    for (double t : grid.times()) {
        if (!(t > s)) continue;
        const CubicMatrix mt = loaded.flow(s, t);
        for (int p = 1; p <= m * m * m; ++p) {
            const FlatIndex f = FlatIndex::from_value(m, p);
            csv += fmt17(t);
            csv += ',';
            csv += std::to_string(f.i);
            csv += ',';
            csv += std::to_string(f.j);
            csv += ',';
            csv += std::to_string(f.k);
            csv += ',';
            csv += fmt17(mt.flat(p));
            csv += '\n';
        }
        emitted = true;
    }
    if (!emitted)
        throw ValidationError("evolution grid has no times t > s = " + std::to_string(s));
    if (out_path) {
        std::ofstream out(*out_path, std::ios::binary);
        if (!out) throw ValidationError("cannot write output file: " + *out_path);
        out << csv;
        std::cout << "wrote " << *out_path << "\n";
    } else {
        std::cout << csv;
    }
    return 0;
}

int cmd_exp(const std::string& config_path, double t, double tol, bool with_oracle,
            const std::optional<std::string>& out_path) {
    const nlohmann::json config = cubal::detail::load_json_file(config_path);
    const MulRule rule =
        rule_from_ref(cubal::detail::field(config, "rule"),
                      std::filesystem::path(config_path).parent_path());
    const CubicMatrix q = cubic_from_json(cubal::detail::field(config, "Q"), rule.dim());
    const CubicMatrix result = exp_mu(rule, q, t, tol);
    std::cout << "exp(tQ) over " << rule.describe() << " at t = " << t << " (series tol "
              << fmt17(tol) << "):\n";
    print_matrix(result);
    int status = 0;
    if (with_oracle) {
        const CubicMatrix reference = ode_oracle(rule, q, t, 1000);
        const double disagreement = max_abs(result - reference);
        const bool ok = disagreement <= 1e-8;
        std::cout << "integration oracle (1000 steps) disagreement: " << fmt17(disagreement)
                  << " vs 1e-08: " << (ok ? "PASS" : "FAIL") << "\n";
        if (!ok) status = 1;
    }
    if (out_path) write_json(*out_path, cubic_to_json(result));
    return status;
}

int cmd_pde_check(const std::string& config_path, double h, double tol,
                  const std::optional<std::string>& grid_spec,
                  const std::optional<std::string>& out_path) {
    const LoadedFlow loaded = load_flow(config_path);
    const std::vector<std::array<double, 3>> samples =
        grid_spec ? triples_from_grid(parse_grid_spec(*grid_spec)) : standard_pde_samples();
    const PdeReport report = check_pde(loaded.flow, samples, h, tol);
    std::cout << "family: " << loaded.flow.label << ", h = " << fmt17(h) << "\n";
    for (const PdeSample& s : report.samples)
        std::cout << "  (s,tau,t) = (" << s.s << ", " << s.tau << ", " << s.t
                  << "): forward = " << fmt17(s.forward_residual)
                  << ", backward = " << fmt17(s.backward_residual) << "\n";
    std::cout << "max forward " << fmt17(report.max_forward) << ", max backward "
              << fmt17(report.max_backward) << " vs tol " << fmt17(tol) << ": "
              << (report.pass ? "PASS" : "FAIL") << "\n";
    if (out_path) write_json(*out_path, pde_report_to_json(report, loaded.flow.label));
    return report.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"algebras of cubic matrices: rules, flows, verification"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_path, grid_spec;
    std::optional<double> s_flag;
    double tol_algebra = 1e-9, tol_kce = 1e-8, tol_pde = 1e-6, tol_series = 1e-12;
    double t_flag = 1.0, h_flag = 1e-4;
    bool with_oracle = false;

    CLI::App* algebra = app.add_subcommand("algebra", "rule-level analysis");
    algebra->require_subcommand(1);
    CLI::App* algebra_check =
        algebra->add_subcommand("check", "analyze a multiplication rule document");
    algebra_check->add_option("--config", config_path, "rule document (JSON)")->required();
    algebra_check->add_option("--tol", tol_algebra, "verdict tolerance (default 1e-9)");
    algebra_check->add_option("--out", out_path, "write the report as JSON");

    CLI::App* flow = app.add_subcommand("flow", "flow families");
    flow->require_subcommand(1);
    CLI::App* flow_verify =
        flow->add_subcommand("verify", "factorization-identity residuals on a grid");
    flow_verify->add_option("--config", config_path, "flow document (JSON)")->required();
    flow_verify->add_option("--tol", tol_kce, "residual tolerance (default 1e-8)");
    flow_verify->add_option("--grid", grid_spec,
                            "start:end:step; triples are consecutive grid windows "
                            "(default: published standard grid)");
    flow_verify->add_option("--out", out_path, "write the report as JSON");

    CLI::App* flow_evolve = flow->add_subcommand("evolve", "emit M^{[s,t]} over a grid as CSV");
    flow_evolve->add_option("--config", config_path, "flow document (JSON)")->required();
    flow_evolve->add_option("--s", s_flag, "start time (default: grid start)");
    flow_evolve->add_option("--grid", grid_spec, "start:end:step (default: config time_grid)");
    flow_evolve->add_option("--out", out_path, "CSV path (default: stdout)");

    CLI::App* exp_cmd = app.add_subcommand("exp", "matrix exponential of a generator");
    exp_cmd->add_option("--config", config_path, "document with rule and Q fields")->required();
    exp_cmd->add_option("--t", t_flag, "time argument (default 1)");
    exp_cmd->add_option("--tol", tol_series, "series tail tolerance (default 1e-12)");
    exp_cmd->add_flag("--oracle", with_oracle, "cross-check against Runge-Kutta integration");
    exp_cmd->add_option("--out", out_path, "write the matrix as JSON");

    CLI::App* pde = app.add_subcommand("pde", "differential checks");
    pde->require_subcommand(1);
    CLI::App* pde_check = pde->add_subcommand("check", "finite-difference residuals of a flow");
    pde_check->set_help_flag("--help", "print help"); // frees -h for the step size
    pde_check->add_option("--config", config_path, "flow document (JSON)")->required();
    pde_check->add_option("--h", h_flag, "central-difference step (default 1e-4)");
    pde_check->add_option("--tol", tol_pde, "residual tolerance (default 1e-6)");
    pde_check->add_option("--grid", grid_spec, "start:end:step sample triples (default built-in)");
    pde_check->add_option("--out", out_path, "write the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (algebra_check->parsed()) return cmd_algebra_check(config_path, tol_algebra, out_path);
        if (flow_verify->parsed()) return cmd_flow_verify(config_path, tol_kce, grid_spec, out_path);
        if (flow_evolve->parsed()) return cmd_flow_evolve(config_path, s_flag, grid_spec, out_path);
        if (exp_cmd->parsed()) return cmd_exp(config_path, t_flag, tol_series, with_oracle, out_path);
        if (pde_check->parsed())
            return cmd_pde_check(config_path, h_flag, tol_pde, grid_spec, out_path);
        std::cerr << "error: no subcommand given\n";
        return 2;
    } catch (const NotInvertibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ConstraintViolation& e) {
        std::cerr << "constraint violated: " << e.what() << "\n";
        return 2;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition failed: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
