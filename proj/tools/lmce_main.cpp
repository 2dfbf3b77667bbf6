#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "lmce/dirichlet.hpp"
#include "lmce/rotation.hpp"
#include "lmce/counterexample.hpp"
#include "lmce/verification.hpp"
#include "lmce/field_io.hpp"
#include "lmce/stencil.hpp"

namespace {

using namespace lmce;

const char* error_name(const Error& e) {
    if (dynamic_cast<const SubcriticalPhase*>(&e)) return "SubcriticalPhase";
    if (dynamic_cast<const DegenerateSpectrum*>(&e)) return "DegenerateSpectrum";
    if (dynamic_cast<const SingularJacobian*>(&e)) return "SingularJacobian";
    if (dynamic_cast<const SingularHessian*>(&e)) return "SingularHessian";
    if (dynamic_cast<const EigGapTooSmall*>(&e)) return "EigGapTooSmall";
    if (dynamic_cast<const ConstraintViolated*>(&e)) return "ConstraintViolated";
    if (dynamic_cast<const LineSearchFailed*>(&e)) return "LineSearchFailed";
    if (dynamic_cast<const LinearSolveStalled*>(&e)) return "LinearSolveStalled";
    if (dynamic_cast<const ContinuationStalled*>(&e)) return "ContinuationStalled";
    if (dynamic_cast<const FrameHypothesisUnmet*>(&e)) return "FrameHypothesisUnmet";
    if (dynamic_cast<const JacobianBoundViolated*>(&e)) return "JacobianBoundViolated";
    if (dynamic_cast<const TargetOutsideImage*>(&e)) return "TargetOutsideImage";
    if (dynamic_cast<const PhiNotDiverging*>(&e)) return "PhiNotDiverging";
    if (dynamic_cast<const PhiNonpositive*>(&e)) return "PhiNonpositive";
    if (dynamic_cast<const IoError*>(&e)) return "IoError";
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    return "Error";
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (double v : parse_list(s)) out.push_back(static_cast<int>(v));
    return out;
}

void write_plain_csv(const std::string& path, const std::vector<std::string>& cols,
                     const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    out << "# columns=";
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_full(row[c]);
        out << "\n";
    }
}

DirichletProblem problem_from_config(const std::string& path, SolveOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::json cfg;
    try {
        in >> cfg;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    if (!cfg.contains("domain") || !cfg.contains("resolution") || !cfg.contains("phase") ||
        !cfg.contains("boundary"))
        throw ConfigError("config must define domain, resolution, phase, boundary");

    const auto& dom = cfg["domain"];
    const auto lov = dom.at("lo").get<std::vector<double>>();
    const auto hiv = dom.at("hi").get<std::vector<double>>();
    if (lov.size() != hiv.size() || lov.size() < 2 || lov.size() > 3)
        throw ConfigError("domain lo/hi must have matching length 2 or 3");
    std::array<double, 3> lo{}, hi{};
    for (std::size_t a = 0; a < lov.size(); ++a) { lo[a] = lov[a]; hi[a] = hiv[a]; }
    const Grid g(static_cast<int>(lov.size()), lo, hi, cfg.at("resolution").get<int>());

    const auto& ph = cfg["phase"];
    const std::string kind = ph.at("kind").get<std::string>();
    PhaseSpec phase = PhaseSpec::constant(0.0);
    if (kind == "constant") phase = PhaseSpec::constant(ph.at("value").get<double>());
    else if (kind == "expr") phase = PhaseSpec::expression(ph.at("expr").get<std::string>());
    else if (kind == "csv") phase = PhaseSpec::from_field(read_field(ph.at("path").get<std::string>()));
    else throw ConfigError("phase kind must be constant|expr|csv");

    const auto& bd = cfg["boundary"];
    const std::string bkind = bd.at("kind").get<std::string>();
    DirichletProblem prob;
    if (bkind == "expr") {
        const Expression be = Expression::parse(bd.at("expr").get<std::string>());
        prob = DirichletProblem::make(g, phase, [&](const double* x) { return be.eval(x, g.n); });
    } else if (bkind == "csv") {
        const ScalarField psi = read_field(bd.at("path").get<std::string>());
        if (!psi.grid.same_layout(g)) throw ConfigError("boundary csv grid does not match domain");
        prob = DirichletProblem::make(g, phase, [&](const double* x) {
            // nearest-node lookup is exact here because layouts match
            std::array<int, 3> idx{};
            for (int a = 0; a < g.n; ++a)
                idx[static_cast<std::size_t>(a)] = static_cast<int>(
                    std::lround((x[a] - g.lo[static_cast<std::size_t>(a)]) / g.h[static_cast<std::size_t>(a)]));
            return psi.at(idx);
        });
    } else {
        throw ConfigError("boundary kind must be expr|csv");
    }

    if (cfg.contains("solver")) {
        const auto& so = cfg["solver"];
        if (so.contains("tol")) opts.tol = so.at("tol").get<double>();
        if (so.contains("max_newton")) opts.max_newton = so.at("max_newton").get<int>();
        if (so.contains("pcg_tol")) opts.pcg_tol = so.at("pcg_tol").get<double>();
    }
    return prob;
}

int cmd_solve(const std::string& config, const std::string& out, const std::string& log,
              int verbosity) {
    SolveOptions opts;
    opts.verbosity = verbosity;
    const DirichletProblem prob = problem_from_config(config, opts);
    const SolveResult res = solve(prob, opts);
    if (!out.empty()) write_field(out, res.u);
    if (!log.empty()) {
        nlohmann::ordered_json j;
        j["residual_sup"] = res.residual_sup;
        j["newton_iters"] = res.newton_iters;
        j["continuation_steps"] = res.continuation_steps;
        j["hessian_sup_half"] = res.hessian_sup_half;
        j["gradient_sup"] = res.gradient_sup;
        std::ofstream o(log);
        o << j.dump(2) << "\n";
    }
    std::printf("solve: residual_sup=%.3e newton_iters=%d continuation_steps=%d hessian_sup_half=%.6g\n",
                res.residual_sup, res.newton_iters, res.continuation_steps, res.hessian_sup_half);
    return 0;
}

int cmd_scan(int n, const std::string& lambdas, double kappa, const std::string& resolutions,
             std::uint64_t seed, const std::string& out) {
    const auto rows = hessian_scan(n, parse_list(lambdas), kappa, parse_int_list(resolutions), seed);
    std::vector<std::vector<double>> data;
    for (const auto& r : rows) {
        std::printf("scan: Lambda=%.3g res=%d hessian_sup_half=%.6g gradient_sup=%.6g status=%s\n",
                    r.Lambda, r.resolution, r.hessian_sup_half, r.gradient_sup, r.status.c_str());
        data.push_back({r.Lambda, static_cast<double>(r.resolution), r.hessian_sup_half,
                        r.hessian_holder_half, r.gradient_sup, r.residual_sup,
                        static_cast<double>(r.newton_iters),
                        static_cast<double>(r.continuation_steps),
                        r.status == "ok" ? 1.0 : 0.0});
    }
    if (!out.empty())
        write_plain_csv(out, {"Lambda", "resolution", "hessian_sup_half", "hessian_holder_half",
                              "gradient_sup", "residual_sup", "newton_iters",
                              "continuation_steps", "ok"}, data);
    return 0;
}

int cmd_rotate(const std::string& in, const std::string& beta_arg, bool use_beta_star,
               bool auto_delta, int target_res, const std::string& out, const std::string& log) {
    const ScalarField u = read_field(in);
    const int n = u.grid.n;
    RotationSpec spec;
    LewyYuanSigma ls;
    if (use_beta_star) {
        spec = beta_star(n);
    } else if (auto_delta) {
        // delta from the sampled phase of u itself
        const MatrixField h = hessian(u, Exec::Parallel);
        double inf_theta = 1e300;
        for (std::size_t i = 0; i < u.grid.num_nodes(); ++i) {
            if (h.boundary_flag[i]) continue;
            inf_theta = std::fmin(inf_theta, phase_of(h.get(i)));
        }
        ls = lewy_yuan_sigma(inf_theta, n);
        const double beta = ls.sigma_infinite ? 0.0 : (ls.convex_regime ? 3.14159265358979323846 / (2.0 * n)
                                                                        : ls.delta / n);
        spec = RotationSpec::uniform(n, beta);
    } else {
        const auto vals = parse_list(beta_arg);
        if (static_cast<int>(vals.size()) != n)
            throw ConfigError("rotate: --beta needs exactly n components");
        std::array<double, kMaxDim> b{};
        for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] = vals[static_cast<std::size_t>(i)];
        spec = RotationSpec(n, b);
    }
    const Box target_box = rotated_image_box(u, spec);
    const Grid tg(n, target_box.lo, target_box.hi, target_res > 0 ? target_res : u.grid.resolution);
    const RotatedGraph rg = rotate_graph(u, spec, tg);

    std::vector<std::string> cols;
    std::vector<std::vector<double>> data;
    for (int a = 0; a < n; ++a) {
        cols.push_back("dubar" + std::to_string(a + 1));
        std::vector<double> col(tg.num_nodes());
        for (std::size_t i = 0; i < tg.num_nodes(); ++i) col[i] = rg.ubar_gradient.comp(i, a);
        data.push_back(col);
    }
    write_columns(out, tg, cols, data);
    if (!log.empty()) {
        nlohmann::ordered_json j;
        j["jacobian_min"] = rg.jacobian_min;
        j["beta"] = std::vector<double>(spec.beta.begin(), spec.beta.begin() + n);
        if (auto_delta) {
            j["delta"] = ls.delta;
            j["sigma"] = ls.sigma_infinite ? -1.0 : ls.sigma;
            j["convex_regime"] = ls.convex_regime;
        }
        std::ofstream o(log);
        o << j.dump(2) << "\n";
    }
    std::printf("rotate: jacobian_min=%.6g target=%s\n", rg.jacobian_min, out.c_str());
    return 0;
}

int cmd_geometry(const std::string& in, const std::string& out) {
    const ScalarField u = read_field(in);
    const Grid& g = u.grid;
    const int n = g.n;
    const VectorField du = gradient(u);
    const MatrixField d2u = hessian(u);
    const Tensor3Field d3u = third_derivatives(u);

    std::vector<std::string> cols;
    for (int i = 0; i < n; ++i) cols.push_back("lambda" + std::to_string(i + 1));
    for (int i = 0; i < n; ++i) cols.push_back("jordan" + std::to_string(i + 1));
    cols.push_back("v");
    cols.push_back("H_norm");
    cols.push_back("h_max");

    const std::size_t count = g.num_nodes();
    std::vector<std::vector<double>> data(cols.size(), std::vector<double>(count, 0.0));
    for (std::size_t node = 0; node < count; ++node) {
        const auto idx = g.unindex(node);
        if (!g.is_interior(idx, 2)) continue;
        std::array<double, kMaxDim> duv{};
        for (int a = 0; a < n; ++a) duv[static_cast<std::size_t>(a)] = du.comp(node, a);
        SymTensor3 t3(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                for (int k = j; k < n; ++k) t3.set(i, j, k, d3u.get(node, i, j, k));
        const GraphGeometry gg = geometry_at(n, duv, d2u.get(node), t3);
        for (int i = 0; i < n; ++i) {
            data[static_cast<std::size_t>(i)][node] = gg.spectrum.lambda[static_cast<std::size_t>(i)];
            data[static_cast<std::size_t>(n + i)][node] = gg.jordan[static_cast<std::size_t>(i)];
        }
        data[static_cast<std::size_t>(2 * n)][node] = gg.v;
        double hn = 0.0;
        for (int r = 0; r < 2 * n; ++r) hn += gg.H[static_cast<std::size_t>(r)] * gg.H[static_cast<std::size_t>(r)];
        data[static_cast<std::size_t>(2 * n + 1)][node] = std::sqrt(hn);
        data[static_cast<std::size_t>(2 * n + 2)][node] = gg.h.max_abs();
    }
    write_columns(out, g, cols, data);
    std::printf("geometry: wrote %s\n", out.c_str());
    return 0;
}

int cmd_counterexample(const std::string& phi_name, int n, const std::string& eps_arg, int grid,
                       const std::string& out_table, const std::string& out_profile) {
    if (phi_name != "default" && phi_name != "log2")
        throw ConfigError("counterexample: --phi must be default|log2");
    auto eps_list = parse_list(eps_arg);
    if (eps_list.empty()) eps_list = {0.2, 0.1, 0.05, 0.01};
    const CounterexampleFamily fam = build_family(phi_log2, n, eps_list.front());

    const auto rows = blowup_table(fam, eps_list);
    std::vector<std::vector<double>> tdata;
    for (const auto& r : rows) {
        std::printf("counterexample: eps=%.4g min_eig_origin=%.6g sup_dtheta=%.6g inf_phase_margin=%.6g\n",
                    r.eps, r.min_eigenvalue_origin, r.sup_dtheta, r.inf_phase_above_critical);
        tdata.push_back({r.eps, r.min_eigenvalue_origin, r.sup_dtheta, r.inf_phase_above_critical});
    }
    if (!out_table.empty())
        write_plain_csv(out_table, {"eps", "min_eig_origin", "sup_dtheta", "inf_phase_above_critical"},
                        tdata);

    if (!out_profile.empty()) {
        const CounterexampleFamily fe = fam.with_eps(eps_list.back());
        std::vector<std::vector<double>> pdata;
        for (int q = 0; q < grid; ++q) {
            const double r = q / (grid - 1.0);
            std::array<double, kMaxDim> x{};
            x[0] = r;
            const UEvaluation ue = eval_u_eps(fe, x.data());
            const ThetaEvaluation te = eval_theta_eps(fe, r);
            pdata.push_back({r, ue.lambda_radial, ue.lambda_tangential, te.theta, te.dtheta_norm,
                             fe.phi(std::fmin(r + fe.eps, 2.0))});
        }
        write_plain_csv(out_profile,
                        {"r", "lambda_min", "lambda_tangential", "theta", "dtheta", "phi_shifted"},
                        pdata);
    }
    return 0;
}

int cmd_verify(const std::string& suite, int n, long samples, int trials, std::uint64_t seed,
               const std::string& report, const std::string& outdir) {
    std::vector<SuiteReport> reports;
    if (suite == "lambda") {
        reports.push_back(run_lambda_suite(n, samples, seed));
    } else if (suite == "identities") {
        IdentityBudgets b;
        b.quartic_trials = trials;
        reports.push_back(run_identity_suite({2, 3}, b, seed));
    } else if (suite == "jacobi") {
        reports.push_back(run_jacobi_suite(n >= 3 ? n : 3, trials, seed));
    } else if (suite == "wnn") {
        WnnProbeOptions w;
        reports.push_back(run_wnn_probe(n >= 2 && n <= 3 ? n : 2, seed, w));
    } else if (suite == "volume") {
        reports.push_back(run_volume_suite(n >= 2 && n <= 3 ? n : 2, seed));
    } else if (suite == "all") {
        RunAllOptions opts;
        opts.lambda_samples = samples;
        opts.identity_trials = trials;
        opts.outdir = outdir;
        reports = run_all(seed, opts);
    } else {
        throw ConfigError("verify: unknown suite " + suite);
    }
    bool all = true;
    for (const auto& r : reports) {
        std::printf("%-18s %s worst_margin=%.3e\n", r.suite.c_str(),
                    r.passed ? "PASS" : "FAIL", r.worst_margin);
        for (const auto& f : r.failures) std::printf("    witness: %s\n", f.c_str());
        all = all && r.passed;
    }
    if (!report.empty()) {
        std::ofstream o(report);
        o << summary_json(reports, seed) << "\n";
    }
    return all ? 0 : 1;
}

int cmd_plot(const std::string& in, const std::string& out) {
    std::ifstream f(in);
    if (!f) throw IoError("cannot open: " + in);
    std::string header;
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("# columns=", 0) == 0) { header = line.substr(10); break; }
        if (!line.empty() && line[0] != '#') break;
    }
    if (header.empty()) throw ConfigError("plot: no column header in " + in);

    std::ofstream o(out);
    if (!o) throw IoError("cannot open for write: " + out);
    o << "set datafile separator ','\n";
    if (header.rfind("r,lambda_min", 0) == 0) {
        o << "set xlabel 'r'\nset y2tics\n";
        o << "plot '" << in << "' using 1:2 with lines title 'lambda_min', \\\n";
        o << "     '" << in << "' using 1:4 axes x1y2 with lines title 'theta'\n";
    } else if (header.rfind("Lambda,resolution", 0) == 0) {
        o << "set xlabel 'Lambda'\nset ylabel 'sup |D2u| (half domain)'\n";
        o << "plot '" << in << "' using 1:3 with linespoints title 'hessian_sup_half'\n";
    } else if (header.rfind("eps,min_eig_origin", 0) == 0) {
        o << "set logscale x\nset xlabel 'eps'\n";
        o << "plot '" << in << "' using 1:(-$2) with linespoints title '|min eigenvalue| at origin'\n";
    } else {
        throw ConfigError("plot: unrecognized csv schema: " + header);
    }
    std::printf("plot: wrote %s\n", out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lagrangian mean curvature equation toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "thread count (1 = fully serial)");

    std::string config, out, log, in;
    int verbosity = 0;
    auto* solve_cmd = app.add_subcommand("solve", "solve the Dirichlet problem from a JSON config");
    solve_cmd->add_option("--config", config)->required();
    solve_cmd->add_option("--out", out);
    solve_cmd->add_option("--log", log);
    solve_cmd->add_flag("-v", verbosity);

    int scan_n = 2;
    std::string lambdas = "0,0.5,1,2", resolutions = "33,65,129";
    double kappa = 1.0;
    std::uint64_t seed = 42;
    auto* scan_cmd = app.add_subcommand("scan", "Hessian-bound scan over phase Lipschitz norms");
    scan_cmd->add_option("--n", scan_n);
    scan_cmd->add_option("--lambdas", lambdas);
    scan_cmd->add_option("--kappa", kappa);
    scan_cmd->add_option("--resolutions", resolutions);
    scan_cmd->add_option("--seed", seed);
    scan_cmd->add_option("--out", out);

    std::string beta;
    bool use_beta_star = false, auto_delta = false;
    int target_res = 0;
    auto* rot_cmd = app.add_subcommand("rotate", "Lewy-Yuan rotation of a potential field");
    rot_cmd->add_option("--in", in)->required();
    rot_cmd->add_option("--beta", beta);
    rot_cmd->add_flag("--beta-star", use_beta_star);
    rot_cmd->add_flag("--auto-delta", auto_delta);
    rot_cmd->add_option("--res", target_res);
    rot_cmd->add_option("--out", out)->required();
    rot_cmd->add_option("--log", log);

    auto* geo_cmd = app.add_subcommand("geometry", "per-point graph quantities of a potential field");
    geo_cmd->add_option("--in", in)->required();
    geo_cmd->add_option("--out", out)->required();

    std::string phi_name = "log2", eps_arg = "0.2,0.1,0.05,0.01", out_table, out_profile;
    int ce_n = 2, ce_grid = 512;
    auto* ce_cmd = app.add_subcommand("counterexample", "Hessian blow-up family with Lipschitz phases");
    ce_cmd->add_option("--phi", phi_name);
    ce_cmd->add_option("--n", ce_n);
    ce_cmd->add_option("--eps", eps_arg);
    ce_cmd->add_option("--grid", ce_grid);
    ce_cmd->add_option("--out-table", out_table);
    ce_cmd->add_option("--out-profile", out_profile);

    std::string suite = "all", report, outdir;
    int ver_n = 3, trials = 60;
    long samples = 100000;
    auto* ver_cmd = app.add_subcommand("verify", "property suites");
    ver_cmd->add_option("--suite", suite);
    ver_cmd->add_option("--n", ver_n);
    ver_cmd->add_option("--samples", samples);
    ver_cmd->add_option("--trials", trials);
    ver_cmd->add_option("--seed", seed);
    ver_cmd->add_option("--report", report);
    ver_cmd->add_option("--outdir", outdir);

    auto* plot_cmd = app.add_subcommand("plot", "emit a gnuplot script for a csv");
    plot_cmd->add_option("--in", in)->required();
    plot_cmd->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (threads > 0) lmce::set_threads(threads);

    try {
        if (solve_cmd->parsed()) return cmd_solve(config, out, log, verbosity);
        if (scan_cmd->parsed()) return cmd_scan(scan_n, lambdas, kappa, resolutions, seed, out);
        if (rot_cmd->parsed()) {
            if (!use_beta_star && !auto_delta && beta.empty())
                throw ConfigError("rotate: one of --beta, --beta-star, --auto-delta is required");
            return cmd_rotate(in, beta, use_beta_star, auto_delta, target_res, out, log);
        }
        if (geo_cmd->parsed()) return cmd_geometry(in, out);
        if (ce_cmd->parsed())
            return cmd_counterexample(phi_name, ce_n, eps_arg, ce_grid, out_table, out_profile);
        if (ver_cmd->parsed()) return cmd_verify(suite, ver_n, samples, trials, seed, report, outdir);
        if (plot_cmd->parsed()) return cmd_plot(in, out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: ConfigError: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: IoError: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", error_name(e), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
