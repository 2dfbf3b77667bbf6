// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Budgets, tolerances and seeds are pinned here; the suites themselves live
// in the library so the CLI exposes the same checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "lmce/verification.hpp"
#include "lmce/dirichlet.hpp"
#include "lmce/counterexample.hpp"
#include "lmce/graph_geometry.hpp"

using namespace lmce;
using clock_type = std::chrono::steady_clock;

namespace {

constexpr double kPi = 3.14159265358979323846;

int failures = 0;

struct Timer {
    clock_type::time_point t0 = clock_type::now();
    double seconds() const { return std::chrono::duration<double>(clock_type::now() - t0).count(); }
};

void report(int id, const char* name, bool pass, const std::string& detail, double secs) {
    std::printf("criterion %2d %-34s %s  (%s) [%.1fs]\n", id, name, pass ? "PASS" : "FAIL",
                detail.c_str(), secs);
    if (!pass) ++failures;
    std::fflush(stdout);
}

std::string fmt(const char* k, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.3e", k, v);
    return buf;
}

} // namespace

int main() {
    const std::uint64_t seed = 42;

    // criteria 1, 2, 4, 5, 6 share the identity sweep
    SuiteReport identity;
    {
        Timer t;
        IdentityBudgets b;
        b.quartic_trials = 200;
        b.rotation_samples = 10000;
        b.vlai_samples = 100000;
        identity = run_identity_suite({2, 3}, b, seed);
        const double rot = identity.metrics.at("rotation_identity_max");
        report(1, "rotation arctan-shift identity", rot <= 1e-9, fmt("max", rot), t.seconds());
    }
    {
        const double b = identity.metrics.at("beta_star_inversion_max");
        report(2, "beta* eigenvalue inversion", b <= 1e-10, fmt("max", b), 0.0);
    }
    {
        Timer t;
        bool pass = true;
        double worst = 0.0;
        long violations = 0;
        for (int n = 3; n <= 6; ++n) {
            const SuiteReport rep = run_lambda_suite(n, 1000000, seed);
            pass = pass && rep.passed;
            violations += static_cast<long>(rep.metrics.at("violations"));
            worst = std::fmin(worst, rep.worst_margin);
        }
        report(3, "lambda inequality suite 4x10^6", pass && violations == 0,
               fmt("worst", worst) + " violations=" + std::to_string(violations), t.seconds());
    }
    {
        const double j = identity.metrics.at("jacobi_identity_max_residual");
        const double j2 = identity.metrics.at("jacobi_n2_specialization_max");
        report(4, "Delta_L log v_m identity", j <= 1e-6 && j2 <= 1e-10,
               fmt("max", j) + " " + fmt("n2spec", j2), 0.0);
    }
    {
        const double d = identity.metrics.at("divergence_identity_max_residual");
        const double h = identity.metrics.at("mean_curvature_max_residual");
        report(5, "divergence + mean-curvature ids", d <= 1e-7 && h <= 1e-7,
               fmt("div", d) + " " + fmt("H", h), 0.0);
    }
    {
        const double v = identity.metrics.at("vlai_max_relative_residual");
        report(6, "sum v/(1+lambda^2) identity", v <= 1e-9, fmt("max_rel", v), 0.0);
    }

    // 7: manufactured-solution convergence and exact quadratic recovery
    {
        Timer t;
        bool pass = true;
        std::string detail;
        const double A = 1.0, c4 = 0.05;
        auto u_exact = [&](const double* x) {
            double s = 0.0;
            for (int a = 0; a < 2; ++a)
                s += 0.5 * A * x[a] * x[a] + c4 * x[a] * x[a] * x[a] * x[a];
            return s;
        };
        const PhaseSpec phase = PhaseSpec::callable([&](const double* x, int) {
            double s = 0.0;
            for (int a = 0; a < 2; ++a) s += std::atan(A + 12.0 * c4 * x[a] * x[a]);
            return s;
        });
        std::vector<double> errs;
        for (int res : {33, 65, 129}) {
            const Grid g = Grid::cube(2, -1.0, 1.0, res);
            const SolveResult sr = solve(DirichletProblem::make(g, phase, u_exact));
            double err = 0.0;
            for (std::size_t i = 0; i < g.num_nodes(); ++i) {
                const auto x = g.coord(g.unindex(i));
                err = std::fmax(err, std::fabs(sr.u[i] - u_exact(x.data())));
            }
            errs.push_back(err);
        }
        for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
            const double ratio = errs[i] / errs[i + 1];
            detail += fmt(("r" + std::to_string(i)).c_str(), ratio) + " ";
            if (ratio < 3.2 || ratio > 4.8) pass = false;
        }
        // stencil-exact class: constant phase, quadratic boundary
        const Grid g = Grid::cube(2, -1.0, 1.0, 65);
        const SolveResult qr = solve(DirichletProblem::make(
            g, PhaseSpec::constant(2.0 * kPi / 4.0),
            [](const double* x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); }));
        double qerr = 0.0;
        for (std::size_t i = 0; i < g.num_nodes(); ++i) {
            const auto x = g.coord(g.unindex(i));
            qerr = std::fmax(qerr, std::fabs(qr.u[i] - 0.5 * (x[0] * x[0] + x[1] * x[1])));
        }
        if (qerr > 1e-9) pass = false;
        report(7, "manufactured solver convergence", pass, detail + fmt("quad", qerr), t.seconds());
    }

    // 8: comparison bracketing at resolution 65
    {
        Timer t;
        const Grid g = Grid::cube(2, -1.0, 1.0, 65);
        const PhaseSpec phase = PhaseSpec::callable([](const double* x, int) {
            return kPi / 2.0 + 0.35 + 0.3 * std::sin(kPi * x[0]) * std::cos(kPi * x[1]);
        });
        auto psi = [](const double* x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); };
        const SolveResult mid = solve(DirichletProblem::make(g, phase, psi));
        const ScalarField th = phase.sample(g);
        double lo = 1e300, hi = -1e300;
        for (double v : th.values) {
            lo = std::fmin(lo, v);
            hi = std::fmax(hi, v);
        }
        const SolveResult upper = solve(DirichletProblem::make(g, PhaseSpec::constant(hi), psi));
        const SolveResult lower = solve(DirichletProblem::make(g, PhaseSpec::constant(lo), psi));
        double worst = 0.0;  // most negative slack
        for (std::size_t i = 0; i < g.num_nodes(); ++i) {
            worst = std::fmin(worst, mid.u[i] - upper.u[i]);
            worst = std::fmin(worst, lower.u[i] - mid.u[i]);
        }
        report(8, "comparison-principle bracketing", worst >= -1e-7, fmt("slack", worst), t.seconds());
    }

    // 9: counterexample family
    {
        Timer t;
        bool pass = true;
        std::string detail;
        for (int n : {2, 3}) {
            const CounterexampleFamily base = build_family(phi_log2, n, 0.2);
            double prev = 0.0;
            bool first = true;
            for (double eps : {0.2, 0.1, 0.05, 0.01}) {
                const CounterexampleFamily fam = base.with_eps(eps);
                for (int q = 0; q < 20000; ++q) {
                    const double r = q / 19999.0;
                    const ThetaEvaluation te = eval_theta_eps(fam, r);
                    if (te.theta < (n - 2) * kPi / 2.0 - 1e-12 || te.theta >= n * kPi / 2.0)
                        pass = false;
                    if (te.dtheta_norm > fam.phi(std::fmin(r + eps, 2.0)) + 1e-12) pass = false;
                }
                const double lam0 = -1.0 / fam.Phi(eps);
                const double oracle = -1.0 / fam.Phi_direct(eps);
                if (std::fabs(lam0 - oracle) > 1e-6 * std::fabs(oracle)) pass = false;
                if (!first && !(lam0 < prev)) pass = false;
                prev = lam0;
                first = false;
                if (n == 2 && eps == 0.01) detail = fmt("lam_min(0.01)", lam0);
            }
        }
        report(9, "Appendix-II blow-up family", pass, detail, t.seconds());
    }

    // 10: rotated-graph w_nn probe
    {
        Timer t;
        bool pass = true;
        std::string detail;
        {
            WnnProbeOptions opts;
            opts.resolutions = {17, 33, 65};
            const SuiteReport rep = run_wnn_probe(2, seed, opts);
            pass = pass && rep.passed;
            detail += fmt("r0", rep.metrics.at("residual_ratio_0")) + " " +
                      fmt("margin", rep.metrics.at("halfmax_margin_min")) + " ";
        }
        {
            WnnProbeOptions opts;
            opts.resolutions = {17, 33, 65};
            opts.validate_with_solver = true;
            const SuiteReport rep = run_wnn_probe(3, seed, opts);
            pass = pass && rep.passed;
            detail += fmt("h_drift", rep.metrics.at("harnack_drift_1"));
        }
        report(10, "w_nn equation + Harnack probe", pass, detail, t.seconds());
    }

    // 11: Hessian scan stability across the two finest grids
    {
        Timer t;
        bool pass = true;
        std::string detail;
        const auto rows = hessian_scan(2, {0.0, 0.5, 1.0, 2.0}, 1.0, {33, 65, 129}, seed);
        for (std::size_t i = 0; i + 2 < rows.size(); i += 3) {
            const ScanRow& mid = rows[i + 1];
            const ScanRow& fine = rows[i + 2];
            if (mid.status != "ok" || fine.status != "ok") {
                pass = false;
                continue;
            }
            const double drift = std::fabs(mid.hessian_sup_half / fine.hessian_sup_half - 1.0);
            detail += fmt(("L" + std::to_string(static_cast<int>(rows[i].Lambda * 10))).c_str(), drift) + " ";
            if (drift > 0.05) pass = false;
        }
        report(11, "Hessian-scan resolution stability", pass, detail, t.seconds());
    }

    // 12: volume growth of the kappa family
    {
        Timer t;
        bool pass = true;
        std::string detail;
        for (int n : {2, 3}) {
            const SuiteReport rep = run_volume_suite(n, seed);
            pass = pass && rep.passed;
            detail += fmt(("slope" + std::to_string(n)).c_str(),
                          rep.metrics.at("slope_vs_graph_scale")) + " ";
        }
        report(12, "volume bound kappa^n sharpness", pass, detail, t.seconds());
    }

    std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                failures);
    return failures == 0 ? 0 : 1;
}
