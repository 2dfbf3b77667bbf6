#pragma once

#include <vector>
#include <string>

#include "lmce/phase_spec.hpp"
#include "lmce/graph_geometry.hpp"

namespace lmce {

// tr(arctan D^2 u) = theta on a rectangle, u = psi on the boundary.
struct DirichletProblem {
    Grid grid;
    PhaseSpec theta;
    std::vector<double> psi;  // boundary values, stored on all nodes
    double Lambda = 0.0;      // Lipschitz estimate for theta

    static DirichletProblem make(const Grid& g, const PhaseSpec& theta,
                                 const std::function<double(const double*)>& psi_fn);
};

struct SolveOptions {
    double tol = 1e-9;
    int max_newton = 50;
    double pcg_tol = 1e-10;
    Exec exec = Exec::Parallel;
    int verbosity = 0;
    double initial_dt = 0.25;
};

struct SolveResult {
    ScalarField u;
    double residual_sup = 0.0;
    int newton_iters = 0;
    int continuation_steps = 0;
    double hessian_sup_half = 0.0;  // sup |D^2u| (spectral norm) on the concentric half-domain
    double gradient_sup = 0.0;
};

// phase(eig(D^2u)) - theta per interior node; zero on the boundary ring.
ScalarField residual_field(const ScalarField& u, const ScalarField& theta_nodes,
                           Exec exec = Exec::Parallel);
double residual_sup_norm(const ScalarField& r, Exec exec = Exec::Parallel);

// Experimental: phase composed with the gradient, tr(arctan D^2u) =
// thetahat(Du). Supported by the residual evaluator only; the Newton
// linearization gains the first-order drift sum thetahat_i d_i w, exposed
// below for callers that assemble their own scheme. Not wired into the
// continuation driver.
ScalarField residual_field_composed(const ScalarField& u,
                                    const std::function<double(const double*, int)>& thetahat,
                                    Exec exec = Exec::Parallel);
VectorField composed_linear_drift(
    const ScalarField& u,
    const std::function<std::array<double, kMaxDim>(const double*, int)>& thetahat_grad,
    Exec exec = Exec::Parallel);

// coefficient field a = (I + (D^2u)^2)^{-1}, SPD with spectrum in (0, 1]
MatrixField linearize(const ScalarField& u, Exec exec = Exec::Parallel);

// One damped Newton step: solves sum a^{ij} d_ij w = -residual with w = 0 on
// the boundary (PCG on the symmetrized stencil matrix, relative tolerance
// pcg_tol), then Armijo backtracking on ||residual||_inf with
// s in {1, 1/2, ..., 2^-10}.
struct NewtonStepResult {
    ScalarField u_next;
    double linear_residual = 0.0;
    double step_scale = 1.0;
    double new_residual_sup = 0.0;
    double step_norm = 0.0;
};
NewtonStepResult newton_step(const ScalarField& u, const ScalarField& theta_nodes,
                             const SolveOptions& opts);

// Damped Newton with phase continuation theta_t = (1-t) sup(theta) + t theta,
// initial guess (tan(sup theta / n)/2)|x|^2 plus the harmonic extension of the
// boundary mismatch. Converged when residual_sup <= opts.tol.
SolveResult solve(const DirichletProblem& problem, const SolveOptions& opts = {});

// Laplace solve with Dirichlet data (coefficients = identity).
ScalarField harmonic_extension(const Grid& g, const std::vector<double>& boundary_values,
                               const SolveOptions& opts = {});

// max over interior nodes in the concentric half-domain of |D^2u| (largest
// absolute Hessian eigenvalue)
double hessian_sup_half_domain(const ScalarField& u, Exec exec = Exec::Parallel);
double gradient_sup_norm(const ScalarField& u, Exec exec = Exec::Parallel);

struct ScanRow {
    double Lambda;
    int resolution;
    double hessian_sup_half;
    double hessian_holder_half;  // sampled C^{0,1/2} seminorm of D^2u (diagnostic)
    double gradient_sup;
    double residual_sup;
    int newton_iters;
    int continuation_steps;
    std::string status;  // "ok" or the error name
};

// sampled sup |D^2u(x) - D^2u(x')| / |x - x'|^(1/2) over the half-domain
double hessian_holder_half_domain(const ScalarField& u, std::uint64_t seed, int pairs = 2000);

// For each Lambda: seeded oscillatory Lipschitz phase (ramp/cosine profile,
// clipped at the critical value), fixed boundary data from a kappa-scaled
// quadratic; solved across resolutions.
std::vector<ScanRow> hessian_scan(int n, const std::vector<double>& Lambda_list,
                                  double kappa_target, const std::vector<int>& resolutions,
                                  std::uint64_t seed, const SolveOptions& opts = {});

PhaseSpec scan_phase(int n, double Lambda, std::uint64_t seed);

} // namespace lmce
