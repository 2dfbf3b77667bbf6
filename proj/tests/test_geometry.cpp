#include "doctest.h"

#include <cmath>

#include "lmce/graph_geometry.hpp"

using namespace lmce;

namespace {

constexpr double kPi = 3.14159265358979323846;

PolynomialTestFunction cubic_symmetric_n2() {
    // u = (x1^3 + x2^3)/6
    PolynomialTestFunction p(2);
    std::array<int, kMaxDim> e{};
    e[0] = 3;
    p.add_term(1.0 / 6.0, e);
    e.fill(0);
    e[1] = 3;
    p.add_term(1.0 / 6.0, e);
    return p;
}

// graph area of (x, Du(x)) in R^4 by triangulating each cell (test oracle)
double triangulated_area_n2(const ScalarField& u, const Box& region) {
    const Grid& g = u.grid;
    const VectorField du = gradient(u, Exec::Serial);
    auto lift = [&](const std::array<int, 3>& idx, double* out) {
        const auto x = g.coord(idx);
        out[0] = x[0];
        out[1] = x[1];
        out[2] = du.comp(g.index(idx), 0);
        out[3] = du.comp(g.index(idx), 1);
    };
    auto tri_area = [](const double* a, const double* b, const double* c) {
        double u1[4], u2[4];
        for (int q = 0; q < 4; ++q) { u1[q] = b[q] - a[q]; u2[q] = c[q] - a[q]; }
        double n1 = 0.0, n2 = 0.0, dd = 0.0;
        for (int q = 0; q < 4; ++q) { n1 += u1[q] * u1[q]; n2 += u2[q] * u2[q]; dd += u1[q] * u2[q]; }
        return 0.5 * std::sqrt(std::fmax(n1 * n2 - dd * dd, 0.0));
    };
    double acc = 0.0;
    for (int i = 0; i + 1 < g.resolution; ++i)
        for (int j = 0; j + 1 < g.resolution; ++j) {
            const auto x = g.coord({i, j, 0});
            if (x[0] < region.lo[0] - 1e-12 || x[1] < region.lo[1] - 1e-12) continue;
            const auto xh = g.coord({i + 1, j + 1, 0});
            if (xh[0] > region.hi[0] + 1e-12 || xh[1] > region.hi[1] + 1e-12) continue;
            double p00[4], p10[4], p01[4], p11[4];
            lift({i, j, 0}, p00);
            lift({i + 1, j, 0}, p10);
            lift({i, j + 1, 0}, p01);
            lift({i + 1, j + 1, 0}, p11);
            acc += tri_area(p00, p10, p11) + tri_area(p00, p11, p01);
        }
    return acc;
}

} // namespace

TEST_SUITE("geometry") {

TEST_CASE("geometry_at: flat second fundamental form for quadratics") {
    // u = x1^2 - 0.3 x1 x2: D^3 u = 0
    PolynomialTestFunction p(2);
    std::array<int, kMaxDim> e{};
    e[0] = 2;
    p.add_term(1.0, e);
    e.fill(0);
    e[0] = 1;
    e[1] = 1;
    p.add_term(-0.3, e);
    const Potential u = potential_of(p);
    const double x[2] = {0.4, -0.1};
    const GraphGeometry gg = geometry_at(2, grad_of(u, x), hess_of(u, x), tensor3_of(u, x));
    CHECK(gg.h.max_abs() <= 1e-14);
    for (int r = 0; r < 4; ++r) CHECK(std::fabs(gg.H[static_cast<std::size_t>(r)]) <= 1e-14);
    CHECK(gg.v >= 1.0);
    // v = prod sqrt(1+lambda^2)
    double vv = 1.0;
    for (int i = 0; i < 2; ++i) {
        const double l = gg.spectrum.lambda[static_cast<std::size_t>(i)];
        vv *= std::sqrt(1.0 + l * l);
    }
    CHECK(gg.v == doctest::Approx(vv).epsilon(1e-12));
}

TEST_CASE("geometry_at: cubic example h_111 = h_222 = 1 at the origin") {
    const PolynomialTestFunction p = cubic_symmetric_n2();
    const Potential u = potential_of(p);
    const double x[2] = {0.0, 0.0};
    const GraphGeometry gg = geometry_at(2, grad_of(u, x), hess_of(u, x), tensor3_of(u, x));
    // lambda = (0, 0): degenerate pair is tie-broken and flagged
    CHECK(gg.degenerate_flagged);
    CHECK(std::fabs(gg.h(0, 0, 0)) + std::fabs(gg.h(1, 1, 1)) +
          std::fabs(gg.h(0, 0, 1)) + std::fabs(gg.h(0, 1, 1)) == doctest::Approx(2.0).epsilon(1e-10));
    // frames orthonormal and mutually orthogonal
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double ee = 0.0, en = 0.0;
            for (int r = 0; r < 4; ++r) {
                ee += gg.e[i][static_cast<std::size_t>(r)] * gg.e[j][static_cast<std::size_t>(r)];
                en += gg.e[i][static_cast<std::size_t>(r)] * gg.nu[j][static_cast<std::size_t>(r)];
            }
            CHECK(std::fabs(ee - (i == j ? 1.0 : 0.0)) <= 1e-10);
            CHECK(std::fabs(en) <= 1e-10);
        }
}

TEST_CASE("sum_i h_iik equals the finite-difference phase gradient oracle") {
    Rng rng(57);
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 2 + trial % 2;
        const PolynomialTestFunction p = PolynomialTestFunction::random(n, 4, rng, 1.0);
        const Potential u = potential_of(p);
        std::array<double, kMaxDim> x{};
        for (int a = 0; a < n; ++a) x[static_cast<std::size_t>(a)] = rng.uniform(-0.4, 0.4);
        const Spectrum s = eig_sym(p.hessian(x.data()));
        if (s.gap <= 0.05) continue;
        const GraphGeometry gg =
            geometry_at(n, grad_of(u, x.data()), hess_of(u, x.data()), tensor3_of(u, x.data()));
        for (int k = 0; k < n; ++k) {
            // FD of theta along gamma_k
            const auto gk = gg.spectrum.column(k);
            const double t = 1e-5;
            std::array<double, kMaxDim> xp = x, xm = x;
            for (int a = 0; a < n; ++a) {
                xp[static_cast<std::size_t>(a)] += t * gk[static_cast<std::size_t>(a)];
                xm[static_cast<std::size_t>(a)] -= t * gk[static_cast<std::size_t>(a)];
            }
            const double th_fd =
                (phase_of(p.hessian(xp.data())) - phase_of(p.hessian(xm.data()))) / (2.0 * t);
            double tr = 0.0;
            for (int i = 0; i < n; ++i) tr += gg.h(i, i, k);
            const double lk = gg.spectrum.lambda[static_cast<std::size_t>(k)];
            CHECK(std::fabs(tr - th_fd / std::sqrt(1.0 + lk * lk)) <= 1e-8);
        }
    }
}

TEST_CASE("mean curvature is normal and matches J grad theta") {
    const PolynomialTestFunction p = cubic_symmetric_n2();
    const Potential u = potential_of(p);
    const double x0[2] = {0.0, 0.0};
    {
        const SymMatrix h = hess_of(u, x0);
        const SymTensor3 d3 = tensor3_of(u, x0);
        CHECK(mean_curvature_residual(2, grad_of(u, x0), h, d3, theta_gradient(2, h, d3)) <= 1e-10);
    }
    Rng rng(61);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + trial % 2;
        const PolynomialTestFunction q = PolynomialTestFunction::random(n, 4, rng, 1.0);
        const Potential uu = potential_of(q);
        std::array<double, kMaxDim> x{};
        for (int a = 0; a < n; ++a) x[static_cast<std::size_t>(a)] = rng.uniform(-0.5, 0.5);
        const SymMatrix h = hess_of(uu, x.data());
        if (eig_sym(h).gap <= 1e-4) continue;
        const SymTensor3 d3 = tensor3_of(uu, x.data());
        const GraphGeometry gg = geometry_at(n, grad_of(uu, x.data()), h, d3);
        // <H, e_i> = 0
        for (int i = 0; i < n; ++i) {
            double dot = 0.0;
            for (int r = 0; r < 2 * n; ++r)
                dot += gg.H[static_cast<std::size_t>(r)] * gg.e[i][static_cast<std::size_t>(r)];
            CHECK(std::fabs(dot) <= 1e-8);
        }
        worst = std::fmax(worst, mean_curvature_residual(n, grad_of(uu, x.data()), h, d3,
                                                         theta_gradient(n, h, d3)));
    }
    CHECK(worst <= 1e-7);
}

TEST_CASE("laplace_beltrami: flat graph, constants, coordinate functions") {
    // u == 0: Euclidean Laplacian
    PolynomialTestFunction zero(2);
    const Potential u0 = potential_of(zero);
    ScalarOnBase f;
    f.value = [](const double* x) { return x[0] * x[0] + 3.0 * x[1] * x[1]; };
    f.gradient = [](const double* x) {
        std::array<double, kMaxDim> g{};
        g[0] = 2.0 * x[0];
        g[1] = 6.0 * x[1];
        return g;
    };
    const double x[2] = {0.3, 0.2};
    CHECK(laplace_beltrami(u0, f, x) == doctest::Approx(8.0).epsilon(1e-8));

    ScalarOnBase cst;
    cst.value = [](const double*) { return 7.0; };
    cst.gradient = [](const double*) { return std::array<double, kMaxDim>{}; };
    Rng rng(63);
    const PolynomialTestFunction q = PolynomialTestFunction::random(2, 4, rng, 1.0);
    const Potential uq = potential_of(q);
    CHECK(std::fabs(laplace_beltrami(uq, cst, x)) <= 1e-10);

    // Delta_L x_j against the normal-projection route: Delta_L x = (0, Dtheta)^N
    for (int j = 0; j < 2; ++j) {
        ScalarOnBase coord;
        coord.value = [j](const double* y) { return y[j]; };
        coord.gradient = [j](const double*) {
            std::array<double, kMaxDim> g{};
            g[static_cast<std::size_t>(j)] = 1.0;
            return g;
        };
        const double got = laplace_beltrami(uq, coord, x);
        // normal projection of (0, Dtheta): component j is
        // sum_i g^{ij}... evaluate via geometry: Y^N = Y - sum_i <Y, e_i> e_i
        const SymMatrix h = hess_of(uq, x);
        const SymTensor3 d3 = tensor3_of(uq, x);
        const GraphGeometry gg = geometry_at(2, grad_of(uq, x), h, d3);
        const auto th = theta_gradient(2, h, d3);
        std::array<double, 4> Y{};
        Y[2] = th[0];
        Y[3] = th[1];
        std::array<double, 4> yn = Y;
        for (int i = 0; i < 2; ++i) {
            double dot = 0.0;
            for (int r = 0; r < 4; ++r) dot += Y[static_cast<std::size_t>(r)] * gg.e[i][static_cast<std::size_t>(r)];
            for (int r = 0; r < 4; ++r) yn[static_cast<std::size_t>(r)] -= dot * gg.e[i][static_cast<std::size_t>(r)];
        }
        CHECK(std::fabs(got - yn[static_cast<std::size_t>(j)]) <= 1e-7);
    }
}

TEST_CASE("laplace_beltrami grid path converges to the analytic value") {
    Rng rng(67);
    const PolynomialTestFunction p = PolynomialTestFunction::random(2, 4, rng, 0.8);
    const Potential u = potential_of(p);
    ScalarOnBase f;
    f.value = [](const double* x) { return std::sin(x[0]) * std::cos(x[1]); };
    f.gradient = [](const double* x) {
        std::array<double, kMaxDim> g{};
        g[0] = std::cos(x[0]) * std::cos(x[1]);
        g[1] = -std::sin(x[0]) * std::sin(x[1]);
        return g;
    };
    const double want = laplace_beltrami(u, f, std::array<double, 2>{0.0, 0.0}.data());
    auto grid_value = [&](int res) {
        const Grid g = Grid::cube(2, -1.0, 1.0, res);
        const ScalarField uf = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
            return p.eval(x.data());
        });
        return laplace_beltrami_grid(uf, f, {(res - 1) / 2, (res - 1) / 2, 0});
    };
    const double e1 = std::fabs(grid_value(33) - want);
    const double e2 = std::fabs(grid_value(65) - want);
    CHECK(e2 < e1);
    CHECK(e1 / e2 >= 2.5);
}

TEST_CASE("Jacobi identity: quadratic trivial case") {
    PolynomialTestFunction p(2);
    std::array<int, kMaxDim> e{};
    e[0] = 2;
    p.add_term(1.0, e);
    e.fill(0);
    e[1] = 2;
    p.add_term(-0.25, e);
    const Potential u = potential_of(p);
    const double x[2] = {0.1, 0.2};
    const JacobiReport r = jacobi_identity_report(u, 1, x);
    CHECK(std::fabs(r.lhs) <= 1e-9);
    CHECK(std::fabs(r.rhs_identity) <= 1e-14);
    CHECK(r.gradient_term == doctest::Approx(0.0));
}

TEST_CASE("Jacobi identity: constant-phase cubic (theta terms vanish)") {
    // u = x1 x2 (x1 - x2)/... pick the harmonic-phase cubic u = (x1^3 - 3 x1 x2^2)/6:
    // D2u = [[x1, -x2], [-x2, -x1]], theta = arctan l1 + arctan l2 with
    // l1 = -l2 -> theta == 0 (a linear theta with zero gradient everywhere).
    PolynomialTestFunction p(2);
    std::array<int, kMaxDim> e{};
    e[0] = 3;
    p.add_term(1.0 / 6.0, e);
    e.fill(0);
    e[0] = 1;
    e[1] = 2;
    p.add_term(-0.5, e);
    const Potential u = potential_of(p);
    const double x[2] = {0.35, 0.15};
    const ThetaJets tj = theta_jets(u, x);
    CHECK(std::fabs(tj.theta) <= 1e-12);
    CHECK(std::fabs(tj.grad[0]) + std::fabs(tj.grad[1]) <= 1e-12);
    const JacobiReport r = jacobi_identity_report(u, 1, x);
    CHECK(r.residual <= 1e-6);
}

TEST_CASE("Jacobi identity on random quartics, n = 2 and 3, all m") {
    Rng rng(71);
    double worst = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + trial % 2;
        const PolynomialTestFunction p = PolynomialTestFunction::random(n, 4, rng, 1.2);
        std::array<double, kMaxDim> x{};
        for (int a = 0; a < n; ++a) x[static_cast<std::size_t>(a)] = rng.uniform(-0.5, 0.5);
        if (eig_sym(p.hessian(x.data())).gap <= 0.05) continue;
        const Potential u = potential_of(p);
        for (int m = 1; m <= n - 1; ++m) {
            const JacobiReport r = jacobi_identity_report(u, m, x.data());
            worst = std::fmax(worst, r.residual);
        }
        if (n == 2) {
            const GraphGeometry gg =
                geometry_at(n, grad_of(u, x.data()), hess_of(u, x.data()), tensor3_of(u, x.data()));
            const ThetaJets tj = theta_jets(u, x.data());
            CHECK(std::fabs(delta_log_vm_rhs(gg, tj, 1) - delta_log_v1_rhs_n2(gg, tj)) <= 1e-10);
        }
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("Jacobi identity pins the i<j<k<=m block at n = 4, m = 3") {
    // triples with all three indices in the top block only appear for m >= 3
    Rng rng(73);
    double worst = 0.0;
    int done = 0;
    for (int trial = 0; trial < 40 && done < 6; ++trial) {
        const PolynomialTestFunction p = PolynomialTestFunction::random(4, 4, rng, 1.0);
        std::array<double, kMaxDim> x{};
        for (int a = 0; a < 4; ++a) x[static_cast<std::size_t>(a)] = rng.uniform(-0.35, 0.35);
        if (eig_sym(p.hessian(x.data())).gap <= 0.08) continue;
        const Potential u = potential_of(p);
        const JacobiReport r = jacobi_identity_report(u, 3, x.data());
        worst = std::fmax(worst, r.residual);
        ++done;
    }
    CHECK(done >= 3);
    CHECK(worst <= 1e-6);
}

TEST_CASE("Jacobi inequality margin: quadratic and guard cases") {
    PolynomialTestFunction p(3);
    std::array<int, kMaxDim> e{};
    for (int a = 0; a < 3; ++a) {
        e.fill(0);
        e[static_cast<std::size_t>(a)] = 2;
        p.add_term(0.5 * (a == 0 ? 4.0 : (a == 1 ? 1.5 : 1.2)), e);
    }
    const Potential u = potential_of(p);
    const double x[3] = {0.0, 0.0, 0.0};
    // lambda = (4, 1.5, 1.2): m = 1 satisfies lambda_1/2 >= lambda_2 >= 1
    const double Lambda = 0.7;
    for (double delta : {1e-3, 0.1, 1.0}) {
        const double margin = jacobi_inequality_margin(u, 1, x, delta, Lambda);
        CHECK(margin == doctest::Approx(Lambda * Lambda / delta).epsilon(1e-10));
    }
    // constraint violations
    CHECK_THROWS_AS(jacobi_inequality_margin(u, 2, x, 1e-3, Lambda), ConstraintViolated);
    PolynomialTestFunction small(3);
    for (int a = 0; a < 3; ++a) {
        e.fill(0);
        e[static_cast<std::size_t>(a)] = 2;
        small.add_term(0.5 * (a == 0 ? 1.0 : (a == 1 ? 0.5 : 0.2)), e);
    }
    CHECK_THROWS_AS(jacobi_inequality_margin(potential_of(small), 1, x, 1e-3, Lambda),
                    ConstraintViolated);
}

TEST_CASE("divergence identity: quadratic zero, quartic residual, degenerate guard") {
    {
        PolynomialTestFunction p(3);
        std::array<int, kMaxDim> e{};
        for (int a = 0; a < 3; ++a) {
            e.fill(0);
            e[static_cast<std::size_t>(a)] = 2;
            p.add_term(0.5 * (3.0 - a), e);
        }
        const Potential u = potential_of(p);
        const double x[3] = {0.2, -0.1, 0.3};
        for (int l = 0; l < 3; ++l)
            for (int k = 0; k < 3; ++k) CHECK(divergence_identity_residual(u, l, k, x) <= 1e-13);
    }
    Rng rng(79);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const PolynomialTestFunction p = PolynomialTestFunction::random(3, 4, rng, 1.0);
        std::array<double, kMaxDim> x{};
        for (int a = 0; a < 3; ++a) x[static_cast<std::size_t>(a)] = rng.uniform(-0.4, 0.4);
        if (eig_sym(p.hessian(x.data())).gap <= 0.05) continue;
        const Potential u = potential_of(p);
        for (int l = 0; l < 3; ++l)
            for (int k = 0; k < 3; ++k)
                worst = std::fmax(worst, divergence_identity_residual(u, l, k, x.data()));
    }
    CHECK(worst <= 1e-7);
    {
        PolynomialTestFunction p(2);
        std::array<int, kMaxDim> e{};
        e[0] = 2;
        p.add_term(0.5, e);
        e.fill(0);
        e[1] = 2;
        p.add_term(0.5, e);
        const double x[2] = {0.0, 0.0};
        CHECK_THROWS_AS(divergence_identity_residual(potential_of(p), 0, 0, x), DegenerateSpectrum);
    }
}

TEST_CASE("full-divergence assembly matches a finite-difference route") {
    // (1/v) sum_ijk d_j(v g^{ij} u_ik theta_k) assembled through the frame
    // quantities vs central differences of the smooth vector field
    // F_j = sum_ik v g^{ij} u_ik theta_k (no eigen branches involved)
    Rng rng(211);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3;
        const PolynomialTestFunction p = PolynomialTestFunction::random(n, 4, rng, 1.0);
        std::array<double, kMaxDim> x{};
        for (int a = 0; a < n; ++a) x[static_cast<std::size_t>(a)] = rng.uniform(-0.4, 0.4);
        if (eig_sym(p.hessian(x.data())).gap <= 0.08) continue;
        const Potential u = potential_of(p);

        auto field_F = [&](const double* y, int j) {
            const SymMatrix hess = p.hessian(y);
            const SymTensor3 d3 = tensor3_of(u, y);
            const auto th = theta_gradient(n, hess, d3);
            const Spectrum s = eig_sym(hess);
            double v = 1.0;
            for (int q = 0; q < n; ++q) {
                const double lq = s.lambda[static_cast<std::size_t>(q)];
                v *= std::sqrt(1.0 + lq * lq);
            }
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                double gij = 0.0;
                for (int q = 0; q < n; ++q) {
                    const double lq = s.lambda[static_cast<std::size_t>(q)];
                    gij += s.gamma(i, q) * s.gamma(j, q) / (1.0 + lq * lq);
                }
                for (int k = 0; k < n; ++k) acc += v * gij * hess(i, k) * th[static_cast<std::size_t>(k)];
            }
            return acc;
        };
        double div_fd = 0.0;
        const double h = 2e-5;
        for (int j = 0; j < n; ++j) {
            auto xp = x, xm = x;
            xp[static_cast<std::size_t>(j)] += h;
            xm[static_cast<std::size_t>(j)] -= h;
            div_fd += (field_F(xp.data(), j) - field_F(xm.data(), j)) / (2.0 * h);
        }
        const SymMatrix hess = p.hessian(x.data());
        const SymTensor3 d3 = tensor3_of(u, x.data());
        const GraphGeometry gg = geometry_at(n, grad_of(u, x.data()), hess, d3);
        const ThetaJets tj = theta_jets(u, x.data());
        div_fd /= gg.v;
        // algebraic route: sum_ij h_iij theta_gj / sqrt(1+l_j^2)
        //                + sum_i lambda_i theta_gigi / (1+lambda_i^2)
        double alg = 0.0;
        for (int j = 0; j < n; ++j) {
            const auto gj = gg.spectrum.column(j);
            double th_gj = 0.0;
            for (int r = 0; r < n; ++r) th_gj += gj[static_cast<std::size_t>(r)] * tj.grad[static_cast<std::size_t>(r)];
            double tr = 0.0;
            for (int i = 0; i < n; ++i) tr += gg.h(i, i, j);
            const double lj = gg.spectrum.lambda[static_cast<std::size_t>(j)];
            alg += tr * th_gj / std::sqrt(1.0 + lj * lj);
            alg += lj / (1.0 + lj * lj) * tj.hess.quad(gj, gj);
        }
        CHECK(std::fabs(div_fd - alg) <= 1e-5);
    }
}

TEST_CASE("top-block divergence with theta matches a finite-difference route") {
    // (1/v) sum_{i<=m} sum_{jk} d_j(lambda_i theta_k v g_ji g_ki/(1+lambda_i^2)):
    // the assembly used inside the constrained inequality margins, checked
    // against central differences of the eigen-dependent vector field
    Rng rng(223);
    int done = 0;
    for (int trial = 0; trial < 30 && done < 8; ++trial) {
        const int n = 3;
        const int m = 1 + trial % 2;
        const PolynomialTestFunction p = PolynomialTestFunction::random(n, 4, rng, 1.0);
        std::array<double, kMaxDim> x{};
        for (int a = 0; a < n; ++a) x[static_cast<std::size_t>(a)] = rng.uniform(-0.35, 0.35);
        if (eig_sym(p.hessian(x.data())).gap <= 0.15) continue;
        ++done;
        const Potential u = potential_of(p);

        auto field_G = [&](const double* y, int j) {
            const SymMatrix hess = p.hessian(y);
            const SymTensor3 d3 = tensor3_of(u, y);
            const auto th = theta_gradient(n, hess, d3);
            const Spectrum s = eig_sym(hess);
            double v = 1.0;
            for (int q = 0; q < n; ++q) {
                const double lq = s.lambda[static_cast<std::size_t>(q)];
                v *= std::sqrt(1.0 + lq * lq);
            }
            double acc = 0.0;
            for (int i = 0; i < m; ++i) {
                const double li = s.lambda[static_cast<std::size_t>(i)];
                for (int k = 0; k < n; ++k)
                    acc += li * th[static_cast<std::size_t>(k)] * v * s.gamma(j, i) * s.gamma(k, i) /
                           (1.0 + li * li);
            }
            return acc;
        };
        double div_fd = 0.0;
        const double h = 2e-6;
        for (int j = 0; j < n; ++j) {
            auto xp = x, xm = x;
            xp[static_cast<std::size_t>(j)] += h;
            xm[static_cast<std::size_t>(j)] -= h;
            div_fd += (field_G(xp.data(), j) - field_G(xm.data(), j)) / (2.0 * h);
        }
        const SymMatrix hess = p.hessian(x.data());
        const SymTensor3 d3 = tensor3_of(u, x.data());
        const GraphGeometry gg = geometry_at(n, grad_of(u, x.data()), hess, d3);
        const ThetaJets tj = theta_jets(u, x.data());
        div_fd /= gg.v;
        const JacobiReport rep = jacobi_identity_report(u, m, x.data());
        CHECK(std::fabs(div_fd - rep.divergence_term) <= 1e-4 * (1.0 + std::fabs(div_fd)));
    }
    CHECK(done >= 4);
}

TEST_CASE("vlai identity: zero case, (1,1) case, random spectra") {
    const double z[3] = {0.0, 0.0, 0.0};
    CHECK(vlai_residual(z, 3) <= 1e-15);
    const double ones[2] = {1.0, 1.0};
    CHECK(vlai_residual(ones, 2) <= 1e-15);
    Rng rng(83);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const int n = 2 + static_cast<int>(i % 5);
        std::array<double, kMaxDim> lam{};
        for (int q = 0; q < n; ++q) lam[static_cast<std::size_t>(q)] = std::tan(rng.uniform(-1.45, 1.45));
        worst = std::fmax(worst, vlai_residual(lam.data(), n));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("graph_area: flat, quadratic, quartic against the triangulation oracle") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 65);
    Box full;
    full.lo = {-1.0, -1.0, 0.0};
    full.hi = {1.0, 1.0, 0.0};
    const ScalarField zero(g, 0.0);
    CHECK(graph_area(zero, full) == doctest::Approx(4.0).epsilon(1e-12));

    const ScalarField quad = ScalarField::sample(g, [](const std::array<double, 3>& x) {
        return 0.5 * (x[0] * x[0] + x[1] * x[1]);
    });
    CHECK(graph_area(quad, full) == doctest::Approx(4.0 * 2.0).epsilon(1e-10));  // v = 2^{n/2} = 2

    Rng rng(87);
    const PolynomialTestFunction p = PolynomialTestFunction::random(2, 4, rng, 0.7);
    const ScalarField qf = ScalarField::sample(g, [&](const std::array<double, 3>& x) {
        return p.eval(x.data());
    });
    Box inner;
    inner.lo = {-0.75, -0.75, 0.0};
    inner.hi = {0.75, 0.75, 0.0};
    const double got = graph_area(qf, inner);
    const double oracle = triangulated_area_n2(qf, inner);
    CHECK(std::fabs(got - oracle) / oracle <= 0.01);

    Box outside;
    outside.lo = {-2.0, -2.0, 0.0};
    outside.hi = {2.0, 2.0, 0.0};
    CHECK_THROWS_AS(graph_area(zero, outside), ConfigError);
}

} // TEST_SUITE
