#include "doctest.h"

#include <cmath>

#include "lmce/dirichlet.hpp"

using namespace lmce;

namespace {

constexpr double kPi = 3.14159265358979323846;

// manufactured potential u* = (A/2)|x|^2 + 0.05 sum x_i^4 with its exact phase
struct Manufactured {
    int n;
    double A;
    double quartic = 0.05;

    double u(const double* x) const {
        double s = 0.0;
        for (int a = 0; a < n; ++a)
            s += 0.5 * A * x[a] * x[a] + quartic * x[a] * x[a] * x[a] * x[a];
        return s;
    }
    double theta(const double* x) const {
        double t = 0.0;
        for (int a = 0; a < n; ++a) t += std::atan(A + 12.0 * quartic * x[a] * x[a]);
        return t;
    }
};

} // namespace

TEST_SUITE("solver") {

TEST_CASE("residual: constant-phase quadratic and zero cases are stencil-exact") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 17);
    const double theta0 = kPi / 2.0;
    const ScalarField u = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
        return 0.5 * std::tan(theta0 / 2.0) * (x[0] * x[0] + x[1] * x[1]);
    });
    const ScalarField th(g, theta0);
    const ScalarField r = residual_field(u, th);
    CHECK(residual_sup_norm(r) <= 1e-12);

    const ScalarField zero(g, 0.0);
    const ScalarField th0(g, 0.0);
    CHECK(residual_sup_norm(residual_field(zero, th0)) <= 1e-15);
}

TEST_CASE("residual of the manufactured solution is O(h^2)") {
    const Manufactured mf{2, 1.0, 0.05};
    auto sup_at = [&](int res) {
        const Grid g = Grid::cube(2, -1.0, 1.0, res);
        const ScalarField u = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
            return mf.u(x.data());
        });
        const ScalarField th = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
            return mf.theta(x.data());
        });
        return residual_sup_norm(residual_field(u, th));
    };
    const double r1 = sup_at(33), r2 = sup_at(65);
    const double ratio = r1 / r2;
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
}

TEST_CASE("linearize: flat and unit-quadratic coefficients, SPD range") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 17);
    const ScalarField zero(g, 0.0);
    const MatrixField a0 = linearize(zero);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        CHECK(a0.get(i)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(a0.get(i)(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    }
    const ScalarField quad = ScalarField::sample(g, [](const std::array<double, 3>& x) {
        return 0.5 * (x[0] * x[0] + x[1] * x[1]);
    });
    const MatrixField ah = linearize(quad);
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
        CHECK(ah.get(i)(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
    // spectrum of a stays in (0, 1]
    const Manufactured mf{2, 1.0, 0.05};
    const ScalarField um = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
        return mf.u(x.data());
    });
    const MatrixField am = linearize(um);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        const Spectrum s = eig_sym(am.get(i));
        CHECK(s.lambda[0] <= 1.0 + 1e-12);
        CHECK(s.lambda[1] > 0.0);
    }
}

TEST_CASE("linearize matches the Gateaux derivative of the residual") {
    const Manufactured mf{2, 1.0, 0.05};
    const Grid g = Grid::cube(2, -1.0, 1.0, 33);
    const ScalarField u = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
        return mf.u(x.data());
    });
    const ScalarField th = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
        return mf.theta(x.data());
    });
    const ScalarField w = ScalarField::sample(g, [](const std::array<double, 3>& x) {
        return std::sin(x[0]) * std::cos(1.3 * x[1]);
    });
    const MatrixField a = linearize(u);
    const double t = 1e-6;
    ScalarField ut = u;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) ut.values[i] += t * w.values[i];
    const ScalarField r0 = residual_field(u, th);
    const ScalarField rt = residual_field(ut, th);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        const auto idx = g.unindex(i);
        if (!g.is_interior(idx, 1)) continue;
        const double gateaux = (rt.values[i] - r0.values[i]) / t;
        double predicted = 0.0;
        const SymMatrix ai = a.get(i);
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) predicted += ai(p, q) * deriv2(w, idx, p, q);
        worst = std::fmax(worst, std::fabs(gateaux - predicted));
    }
    CHECK(worst <= 1e-4);  // O(t) + O(h^2)
}

TEST_CASE("newton_step: already converged input is a fixed point") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 17);
    const double theta0 = kPi / 2.0;
    const ScalarField u = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
        return 0.5 * std::tan(theta0 / 2.0) * (x[0] * x[0] + x[1] * x[1]);
    });
    const ScalarField th(g, theta0);
    SolveOptions opts;
    const NewtonStepResult st = newton_step(u, th, opts);
    CHECK(st.step_norm <= 1e-10);
    CHECK(st.step_scale == doctest::Approx(1.0));
}

TEST_CASE("newton converges quadratically near the root") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 33);
    const double theta0 = kPi / 2.0;
    ScalarField u = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
        return 0.5 * std::tan(theta0 / 2.0) * (x[0] * x[0] + x[1] * x[1]) +
               0.05 * std::sin(2.0 * x[0]) * std::sin(2.0 * x[1]) * (1.0 - x[0] * x[0]) *
                   (1.0 - x[1] * x[1]);
    });
    const ScalarField th(g, theta0);
    SolveOptions opts;
    double prev = residual_sup_norm(residual_field(u, th));
    for (int it = 0; it < 6 && prev > 1e-12; ++it) {
        const NewtonStepResult st = newton_step(u, th, opts);
        u = st.u_next;
        if (prev < 1e-2) CHECK(st.new_residual_sup <= 0.1 * prev);
        prev = st.new_residual_sup;
    }
    CHECK(prev <= 1e-10);
}

TEST_CASE("solve: constant-phase quadratic recovered to 1e-9") {
    for (int res : {17, 33}) {
        const Grid g = Grid::cube(2, -1.0, 1.0, res);
        const double theta0 = 2.0 * kPi / 4.0;
        const DirichletProblem prob = DirichletProblem::make(
            g, PhaseSpec::constant(theta0), [&](const double* x) {
                return 0.5 * (x[0] * x[0] + x[1] * x[1]);
            });
        const SolveResult sr = solve(prob);
        CHECK(sr.residual_sup <= 1e-9);
        double worst = 0.0;
        for (std::size_t i = 0; i < g.num_nodes(); ++i) {
            const auto x = g.coord(g.unindex(i));
            worst = std::fmax(worst, std::fabs(sr.u[i] - 0.5 * (x[0] * x[0] + x[1] * x[1])));
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("solve: subcritical phase rejected before any work") {
    const Grid g = Grid::cube(3, -1.0, 1.0, 17);
    const DirichletProblem prob = DirichletProblem::make(
        g, PhaseSpec::constant(kPi / 2.0 - 0.2), [](const double*) { return 0.0; });
    CHECK_THROWS_AS(solve(prob), SubcriticalPhase);
}

TEST_CASE("solve: manufactured convergence at small resolutions") {
    const Manufactured mf{2, 1.0, 0.05};
    auto err_at = [&](int res) {
        const Grid g = Grid::cube(2, -1.0, 1.0, res);
        const DirichletProblem prob = DirichletProblem::make(
            g, PhaseSpec::callable([&](const double* x, int) { return mf.theta(x); }),
            [&](const double* x) { return mf.u(x); });
        const SolveResult sr = solve(prob);
        double worst = 0.0;
        for (std::size_t i = 0; i < g.num_nodes(); ++i) {
            const auto x = g.coord(g.unindex(i));
            worst = std::fmax(worst, std::fabs(sr.u[i] - mf.u(x.data())));
        }
        return worst;
    };
    const double ratio = err_at(17) / err_at(33);
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
}

TEST_CASE("harmonic extension reproduces harmonic boundary data") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 33);
    std::vector<double> bv(g.num_nodes(), 0.0);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        const auto idx = g.unindex(i);
        if (g.is_interior(idx, 1)) continue;
        const auto x = g.coord(idx);
        bv[i] = x[0] * x[0] - x[1] * x[1] + 0.3 * x[0];
    }
    const ScalarField h = harmonic_extension(g, bv);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        const auto x = g.coord(g.unindex(i));
        worst = std::fmax(worst, std::fabs(h[i] - (x[0] * x[0] - x[1] * x[1] + 0.3 * x[0])));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("comparison bracketing at a small resolution") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 33);
    const PhaseSpec phase = PhaseSpec::callable([](const double* x, int) {
        return kPi / 2.0 + 0.35 + 0.3 * std::sin(kPi * x[0]) * std::cos(kPi * x[1]);
    });
    auto psi = [](const double* x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); };
    const DirichletProblem prob = DirichletProblem::make(g, phase, psi);
    const SolveResult mid = solve(prob);
    const ScalarField th = phase.sample(g);
    double lo = 1e300, hi = -1e300;
    for (double v : th.values) {
        lo = std::fmin(lo, v);
        hi = std::fmax(hi, v);
    }
    const SolveResult upper = solve(DirichletProblem::make(g, PhaseSpec::constant(hi), psi));
    const SolveResult lower = solve(DirichletProblem::make(g, PhaseSpec::constant(lo), psi));
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        CHECK(mid.u[i] >= upper.u[i] - 1e-7);
        CHECK(mid.u[i] <= lower.u[i] + 1e-7);
    }
    // semiconvexity of the solved Hessian for the strictly supercritical phase
    const double delta = lo - 0.0;
    const MatrixField h = hessian(mid.u, Exec::Serial);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        if (h.boundary_flag[i]) continue;
        const Spectrum s = eig_sym(h.get(i));
        CHECK(s.lambda[1] > -1.0 / std::tan(delta) - 1e-8);
    }
}

TEST_CASE("composed-phase residual and drift match the Gateaux derivative") {
    // tr(arctan D^2u) = thetahat(Du): the linearization picks up the
    // first-order term sum thetahat_i d_i w
    const Grid g = Grid::cube(2, -1.0, 1.0, 33);
    const ScalarField u = ScalarField::sample(g, [](const std::array<double, 3>& x) {
        return 0.6 * x[0] * x[0] + 0.4 * x[1] * x[1] + 0.1 * x[0] * x[1];
    });
    auto thetahat = [](const double* y, int) { return 1.2 + 0.2 * std::sin(y[0]) + 0.1 * y[1]; };
    auto thetahat_grad = [](const double* y, int) {
        std::array<double, kMaxDim> gr{};
        gr[0] = 0.2 * std::cos(y[0]);
        gr[1] = 0.1;
        return gr;
    };
    const ScalarField w = ScalarField::sample(g, [](const std::array<double, 3>& x) {
        return std::cos(x[0] + 0.5 * x[1]);
    });
    const MatrixField a = linearize(u);
    const VectorField drift = composed_linear_drift(u, thetahat_grad);
    const double t = 1e-6;
    ScalarField ut = u;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) ut.values[i] += t * w.values[i];
    const ScalarField r0 = residual_field_composed(u, thetahat);
    const ScalarField rt = residual_field_composed(ut, thetahat);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        const auto idx = g.unindex(i);
        if (!g.is_interior(idx, 1)) continue;
        const double gateaux = (rt.values[i] - r0.values[i]) / t;
        double predicted = 0.0;
        const SymMatrix ai = a.get(i);
        for (int p = 0; p < 2; ++p) {
            for (int q = 0; q < 2; ++q) predicted += ai(p, q) * deriv2(w, idx, p, q);
            predicted -= drift.comp(i, p) * deriv1(w, idx, p);
        }
        worst = std::fmax(worst, std::fabs(gateaux - predicted));
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("solve: exhausted Newton budget raises LineSearchFailed") {
    const Manufactured mf{2, 1.0, 0.05};
    const Grid g = Grid::cube(2, -1.0, 1.0, 17);
    const DirichletProblem prob = DirichletProblem::make(
        g, PhaseSpec::callable([&](const double* x, int) { return mf.theta(x); }),
        [&](const double* x) { return mf.u(x); });
    SolveOptions opts;
    opts.max_newton = 0;
    CHECK_THROWS_AS(solve(prob, opts), LineSearchFailed);
}

TEST_CASE("mean curvature of the solved graph matches J grad theta to discretization error") {
    const Manufactured mf{2, 1.0, 0.05};
    auto worst_at = [&](int res) {
        const Grid g = Grid::cube(2, -1.0, 1.0, res);
        const DirichletProblem prob = DirichletProblem::make(
            g, PhaseSpec::callable([&](const double* x, int) { return mf.theta(x); }),
            [&](const double* x) { return mf.u(x); });
        const SolveResult sr = solve(prob);
        const VectorField du = gradient(sr.u, Exec::Serial);
        const MatrixField d2u = hessian(sr.u, Exec::Serial);
        const Tensor3Field d3u = third_derivatives(sr.u, Exec::Serial);
        double worst = 0.0;
        for (std::size_t node = 0; node < g.num_nodes(); ++node) {
            const auto idx = g.unindex(node);
            if (!g.is_interior(idx, 3)) continue;
            const auto x = g.coord(idx);
            std::array<double, kMaxDim> duv{};
            for (int a = 0; a < 2; ++a) duv[static_cast<std::size_t>(a)] = du.comp(node, a);
            SymTensor3 t3(2);
            for (int i = 0; i < 2; ++i)
                for (int j = i; j < 2; ++j)
                    for (int k = j; k < 2; ++k) t3.set(i, j, k, d3u.get(node, i, j, k));
            // exact phase gradient of the manufactured instance
            std::array<double, kMaxDim> tg{};
            for (int a = 0; a < 2; ++a) {
                const double la = 1.0 + 12.0 * 0.05 * x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
                tg[static_cast<std::size_t>(a)] =
                    24.0 * 0.05 * x[static_cast<std::size_t>(a)] / (1.0 + la * la);
            }
            worst = std::fmax(worst, mean_curvature_residual(2, duv, d2u.get(node), t3, tg));
        }
        return worst;
    };
    const double e1 = worst_at(17);
    const double e2 = worst_at(33);
    CHECK(e2 < e1);
}

TEST_CASE("scan phases are Lipschitz-bounded, clipped at critical") {
    for (double Lambda : {0.0, 0.5, 2.0}) {
        const PhaseSpec phase = scan_phase(2, Lambda, 42);
        const Grid g = Grid::cube(2, -1.0, 1.0, 65);
        const ScalarField th = phase.sample(g);
        for (double v : th.values) {
            CHECK(v >= 0.0);
            CHECK(v < kPi - 1e-9);
        }
        const double lip = phase.lipschitz_estimate(g);
        CHECK(lip <= Lambda * 1.05 + 1e-9);
        if (Lambda == 0.0) CHECK(lip <= 1e-13);  // boundary-stencil round-off only
    }
}

} // TEST_SUITE
