#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lmce/parallel.hpp"
#include "lmce/polynomial.hpp"
#include "lmce/grid.hpp"

namespace lmce {

// Deterministic suite outcome: a pure function of (suite, seed, budget).
struct SuiteReport {
    std::string suite;
    std::uint64_t seed = 0;
    long samples = 0;
    bool passed = true;
    double worst_margin = 0.0;  // most adverse margin/residual across the suite
    std::map<std::string, double> metrics;
    std::vector<std::string> failures;  // dumped witnesses (inputs and values)

    std::string to_json() const;
};

// sigma_k implementation hook; the mutation-fixture self-test injects a
// broken one to prove the suite catches it.
using SigmaFn = double (*)(const double*, int, int);

// Eigenvalue inequality families on supercritical samples: sigma_k >= 0,
// d sigma_k >= 0, 2 lambda_n + lambda_{n-2} >= 0, pairwise-triple products,
// and the semiconvexity bound lambda_n > -cot(delta).
SuiteReport run_lambda_suite(int n, long samples, std::uint64_t seed, Exec exec = Exec::Parallel,
                             SigmaFn sigma_override = nullptr);

// Pointwise identity residual sweeps on random quartic potentials plus the
// rotation algebra and the sum-v/(1+lambda^2) identity.
struct IdentityBudgets {
    int quartic_trials = 200;       // log v_m identity / divergence / mean curvature
    long rotation_samples = 10000;  // arctan shift + beta* inversion, n in 2..6
    long vlai_samples = 100000;     // algebraic identity, n <= 6
};
SuiteReport run_identity_suite(const std::vector<int>& dims, const IdentityBudgets& budgets,
                               std::uint64_t seed, Exec exec = Exec::Parallel);

// Constrained Jacobi inequality margins (lambda_m/2 >= lambda_{m+1} >= 1 and
// the lambda_{n-1} >= 2n^2/tau variant); records the largest empirically
// valid delta.
SuiteReport run_jacobi_suite(int n, int points, std::uint64_t seed, Exec exec = Exec::Parallel);

// Rotated-graph probe: the w_nn equation residual under refinement, the
// w_nn >= lambda_hat_1/2 margin, and the Harnack ratio across refinements.
struct WnnProbeOptions {
    std::vector<int> resolutions{33, 65, 129};
    bool validate_with_solver = false;
    double strength = 0.0;  // 0 = dimension default Hessian scale
};
SuiteReport run_wnn_probe(int n, std::uint64_t seed, const WnnProbeOptions& opts = {},
                          Exec exec = Exec::Parallel);

// The kappa-family volume check: growth order of the graph area, bound
// ratios, rotated-graph consistency, parabolic-rescaling invariance.
SuiteReport run_volume_suite(int n, std::uint64_t seed, Exec exec = Exec::Parallel);

// Sharpness exhibit: Dirichlet solves driven by the blow-up family's phases
// theta_eps. As eps shrinks, the Hessian at the origin grows while the phase
// stays critical/supercritical -- possible only because Lip(theta_eps) is
// not uniformly bounded. Asserts both monotone growths.
SuiteReport run_sharpness_exhibit(const std::vector<double>& eps_list, int resolution,
                                  Exec exec = Exec::Parallel);

struct RunAllOptions {
    long lambda_samples = 200000;
    int identity_trials = 60;
    int jacobi_points = 200;
    std::string outdir;  // when nonempty, one JSON per suite + summary.json
};
std::vector<SuiteReport> run_all(std::uint64_t seed, const RunAllOptions& opts = {},
                                 Exec exec = Exec::Parallel);
std::string summary_json(const std::vector<SuiteReport>& reports, std::uint64_t seed);

// Probe-instance construction, exposed for tests: a polynomial whose Hessian
// at the center has n-1 large positive eigenvalues and one strongly negative
// eigenvalue, with the phase kept supercritical on the box.
struct WnnInstance {
    PolynomialTestFunction u;
    double box_halfwidth = 0.0;
    int n = 0;
};
WnnInstance wnn_probe_instance(int n, std::uint64_t seed, double strength = 0.0);

} // namespace lmce
