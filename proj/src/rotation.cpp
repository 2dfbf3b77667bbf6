#include "lmce/rotation.hpp"
#include "lmce/stencil.hpp"

#include <cmath>
#include <limits>

namespace lmce {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = 1.5707963267948966;
}

RotationSpec beta_star(int n) {
    if (n < 2) throw Error("beta_star: n >= 2 required");
    std::array<double, kMaxDim> b{};
    for (int i = 0; i < n - 1; ++i) b[static_cast<std::size_t>(i)] = kHalfPi;
    b[static_cast<std::size_t>(n - 1)] = -kHalfPi;
    return RotationSpec(n, b);
}

SmallMatrix rotation_jacobian(const SymMatrix& m, const RotationSpec& spec) {
    const int n = m.dim();
    SmallMatrix j(n);
    for (int i = 0; i < n; ++i) {
        const double c = std::cos(spec.beta[static_cast<std::size_t>(i)]);
        const double s = std::sin(spec.beta[static_cast<std::size_t>(i)]);
        for (int col = 0; col < n; ++col) j(i, col) = s * m(i, col) + (i == col ? c : 0.0);
    }
    return j;
}

double min_singular_value(const SmallMatrix& a) {
    const int n = a.dim();
    SymMatrix ata(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += a(k, i) * a(k, j);
            ata.set(i, j, acc);
        }
    const Spectrum s = eig_sym(ata);
    const double low = s.lambda[static_cast<std::size_t>(n - 1)];
    return low > 0.0 ? std::sqrt(low) : 0.0;
}

SymMatrix rotate_hessian(const SymMatrix& m, const RotationSpec& spec) {
    const int n = m.dim();
    const SmallMatrix j = rotation_jacobian(m, spec);
    if (min_singular_value(j) <= 1e-10)
        throw SingularJacobian("rotate_hessian: J_beta near singular; rotation too large for this Hessian");
    SmallMatrix jbar(n);  // -sin S + cos S * M
    for (int i = 0; i < n; ++i) {
        const double c = std::cos(spec.beta[static_cast<std::size_t>(i)]);
        const double s = std::sin(spec.beta[static_cast<std::size_t>(i)]);
        for (int col = 0; col < n; ++col) jbar(i, col) = c * m(i, col) - (i == col ? s : 0.0);
    }
    // Mbar = Jbar J^{-1}: solve J^T X^T = Jbar^T, i.e. X = Jbar J^{-1}
    const SmallMatrix x = j.transposed().solve(jbar.transposed()).transposed();
    return SymMatrix::from_dense_symmetrized(x);
}

bool rotation_wraps(const SymMatrix& m, const RotationSpec& spec) {
    const Spectrum s = eig_sym(m);
    // Rotated angles of the true arctan identity: eigenvalues of
    // arctan(M) - S_beta. Check via the symmetric difference matrix.
    SymMatrix a = arctan_matrix(m);
    for (int i = 0; i < m.dim(); ++i) a.add(i, i, -spec.beta[static_cast<std::size_t>(i)]);
    const Spectrum r = eig_sym(a);
    (void)s;
    for (int i = 0; i < m.dim(); ++i) {
        const double ang = r.lambda[static_cast<std::size_t>(i)];
        if (ang <= -kHalfPi || ang >= kHalfPi) return true;
    }
    return false;
}

std::array<double, kMaxDim> beta_star_eigen_inversion(const SymMatrix& m) {
    const int n = m.dim();
    const Spectrum s = eig_sym(m);
    std::array<double, kMaxDim> out{};
    for (int i = 0; i < n; ++i) {
        const double li = s.lambda[static_cast<std::size_t>(i)];
        if (std::fabs(li) <= 1e-10)
            throw SingularHessian("beta_star_eigen_inversion: |lambda_i| <= 1e-10");
        out[static_cast<std::size_t>(i)] = -1.0 / li;
    }
    std::sort(out.begin(), out.begin() + n, [](double a, double b) { return a > b; });
    return out;
}

LewyYuanSigma lewy_yuan_sigma(double inf_theta, int n) {
    LewyYuanSigma out;
    out.delta = inf_theta - (n - 2) * kPi / 2.0;
    if (out.delta < 0.0)
        throw SubcriticalPhase("lewy_yuan_sigma: inf theta below the critical phase");
    if (out.delta == 0.0) {
        out.sigma_infinite = true;
        out.sigma = std::numeric_limits<double>::infinity();
        return out;
    }
    if (out.delta >= kPi / 2.0) out.convex_regime = true;
    out.sigma = 1.0 / std::tan(out.delta / n);
    return out;
}

namespace {

struct Interpolant {
    const Grid* g;
    const VectorField* du;
    const MatrixField* d2u;

    bool inside(const double* x) const {
        for (int a = 0; a < g->n; ++a)
            if (x[a] < g->lo[static_cast<std::size_t>(a)] - 1e-12 ||
                x[a] > g->hi[static_cast<std::size_t>(a)] + 1e-12)
                return false;
        return true;
    }

    // multilinear interpolation weights over the containing cell
    template <typename F>
    void gather(const double* x, F&& accum) const {
        std::array<int, 3> base{};
        std::array<double, 3> t{};
        for (int a = 0; a < g->n; ++a) {
            double s = (x[a] - g->lo[static_cast<std::size_t>(a)]) / g->h[static_cast<std::size_t>(a)];
            s = std::fmax(0.0, std::fmin(s, static_cast<double>(g->resolution - 1)));
            int i = static_cast<int>(std::floor(s));
            if (i > g->resolution - 2) i = g->resolution - 2;
            base[static_cast<std::size_t>(a)] = i;
            t[static_cast<std::size_t>(a)] = s - i;
        }
        const int corners = 1 << g->n;
        for (int c = 0; c < corners; ++c) {
            double w = 1.0;
            std::array<int, 3> idx = base;
            for (int a = 0; a < g->n; ++a) {
                if (c & (1 << a)) {
                    idx[static_cast<std::size_t>(a)] += 1;
                    w *= t[static_cast<std::size_t>(a)];
                } else {
                    w *= 1.0 - t[static_cast<std::size_t>(a)];
                }
            }
            accum(g->index(idx), w);
        }
    }

    std::array<double, kMaxDim> du_at(const double* x) const {
        std::array<double, kMaxDim> out{};
        gather(x, [&](std::size_t node, double w) {
            for (int a = 0; a < g->n; ++a)
                out[static_cast<std::size_t>(a)] += w * du->comp(node, a);
        });
        return out;
    }

    SymMatrix d2u_at(const double* x) const {
        SymMatrix m(g->n);
        gather(x, [&](std::size_t node, double w) {
            const SymMatrix mm = d2u->get(node);
            for (int i = 0; i < g->n; ++i)
                for (int j = i; j < g->n; ++j) m.add(i, j, w * mm(i, j));
        });
        return m;
    }
};

} // namespace

RotatedGraph rotate_graph(const ScalarField& u, const RotationSpec& spec, const Grid& target_grid,
                          Exec exec, double jacobian_floor) {
    const Grid& g = u.grid;
    const int n = g.n;
    RotatedGraph out;
    out.source_grid = g;
    out.target_grid = target_grid;
    out.xbar = VectorField(g);
    out.ybar = VectorField(g);
    out.ubar_gradient = VectorField(target_grid);
    out.valid.assign(target_grid.num_nodes(), 0);

    const VectorField du = gradient(u, exec);
    const MatrixField d2u = hessian(u, exec);

    std::array<double, kMaxDim> cosb{}, sinb{};
    for (int i = 0; i < n; ++i) {
        cosb[static_cast<std::size_t>(i)] = std::cos(spec.beta[static_cast<std::size_t>(i)]);
        sinb[static_cast<std::size_t>(i)] = std::sin(spec.beta[static_cast<std::size_t>(i)]);
    }

    // forward map over all source nodes; the Jacobian bound is assessed on
    // interior nodes (boundary Hessians come from flagged one-sided stencils)
    const std::size_t count = g.num_nodes();
    const double jac_min = -ordered_max(static_cast<std::ptrdiff_t>(count), exec, [&](std::ptrdiff_t node) {
        const auto idx = g.unindex(static_cast<std::size_t>(node));
        const auto x = g.coord(idx);
        for (int i = 0; i < n; ++i) {
            const double xi = x[static_cast<std::size_t>(i)];
            const double ui = du.comp(static_cast<std::size_t>(node), i);
            out.xbar.comp(static_cast<std::size_t>(node), i) =
                cosb[static_cast<std::size_t>(i)] * xi + sinb[static_cast<std::size_t>(i)] * ui;
            out.ybar.comp(static_cast<std::size_t>(node), i) =
                -sinb[static_cast<std::size_t>(i)] * xi + cosb[static_cast<std::size_t>(i)] * ui;
        }
        if (!g.is_interior(idx, 1)) return -1e300;
        // min eigenvalue of sym(J_beta)
        const SmallMatrix j = rotation_jacobian(d2u.get(static_cast<std::size_t>(node)), spec);
        const SymMatrix js = SymMatrix::from_dense_symmetrized(j);
        const Spectrum s = eig_sym(js);
        return -s.lambda[static_cast<std::size_t>(n - 1)];
    });
    out.jacobian_min = jac_min;
    if (jac_min < jacobian_floor)
        throw JacobianBoundViolated("rotate_graph: min eigenvalue of sym(J_beta) below floor");

    Interpolant interp{&g, &du, &d2u};
    const std::array<double, 3> center{0.5 * (g.lo[0] + g.hi[0]), 0.5 * (g.lo[1] + g.hi[1]),
                                       0.5 * (g.lo[2] + g.hi[2])};

    const std::size_t tcount = target_grid.num_nodes();
    std::vector<unsigned char> failure(tcount, 0);
    parallel_for(static_cast<std::ptrdiff_t>(tcount), exec, [&](std::ptrdiff_t node) {
        const auto tidx = target_grid.unindex(static_cast<std::size_t>(node));
        const auto target = target_grid.coord(tidx);
        std::array<double, kMaxDim> x{};
        for (int a = 0; a < n; ++a) x[static_cast<std::size_t>(a)] = center[static_cast<std::size_t>(a)];
        bool ok = false;
        for (int it = 0; it < 50; ++it) {
            const auto duv = interp.du_at(x.data());
            std::array<double, kMaxDim> r{};
            double rnorm = 0.0;
            for (int a = 0; a < n; ++a) {
                r[static_cast<std::size_t>(a)] = cosb[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)] +
                                                 sinb[static_cast<std::size_t>(a)] * duv[static_cast<std::size_t>(a)] -
                                                 target[static_cast<std::size_t>(a)];
                rnorm = std::fmax(rnorm, std::fabs(r[static_cast<std::size_t>(a)]));
            }
            if (rnorm <= 1e-10) { ok = true; break; }
            const SmallMatrix j = rotation_jacobian(interp.d2u_at(x.data()), spec);
            std::array<double, kMaxDim> step{};
            try {
                step = j.solve_vec(r);
            } catch (const SingularJacobian&) {
                break;
            }
            for (int a = 0; a < n; ++a) {
                double xa = x[static_cast<std::size_t>(a)] - step[static_cast<std::size_t>(a)];
                xa = std::fmax(g.lo[static_cast<std::size_t>(a)], std::fmin(xa, g.hi[static_cast<std::size_t>(a)]));
                x[static_cast<std::size_t>(a)] = xa;
            }
        }
        if (!ok) { failure[static_cast<std::size_t>(node)] = 1; return; }
        out.valid[static_cast<std::size_t>(node)] = 1;
        const auto duv = interp.du_at(x.data());
        for (int a = 0; a < n; ++a)
            out.ubar_gradient.comp(static_cast<std::size_t>(node), a) =
                -sinb[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)] +
                cosb[static_cast<std::size_t>(a)] * duv[static_cast<std::size_t>(a)];
    });
    for (std::size_t i = 0; i < tcount; ++i)
        if (failure[i])
            throw TargetOutsideImage("rotate_graph: target node outside the image of the source domain");
    return out;
}

Box rotated_image_box(const ScalarField& u, const RotationSpec& spec, double margin) {
    const Grid& g = u.grid;
    const int n = g.n;
    const VectorField du = gradient(u, Exec::Serial);
    Box box;
    for (int a = 0; a < n; ++a) {
        box.lo[static_cast<std::size_t>(a)] = -1e300;
        box.hi[static_cast<std::size_t>(a)] = 1e300;
    }
    // For a monotone map the image of face {x_a = lo} bounds the image from
    // below in coordinate a: an inner box is [max over low face, min over
    // high face] per axis.
    const std::size_t count = g.num_nodes();
    for (std::size_t node = 0; node < count; ++node) {
        const auto idx = g.unindex(node);
        if (g.is_interior(idx, 1)) continue;
        const auto x = g.coord(idx);
        for (int a = 0; a < n; ++a) {
            const double xb = std::cos(spec.beta[static_cast<std::size_t>(a)]) * x[static_cast<std::size_t>(a)] +
                              std::sin(spec.beta[static_cast<std::size_t>(a)]) * du.comp(node, a);
            if (idx[static_cast<std::size_t>(a)] == 0)
                box.lo[static_cast<std::size_t>(a)] = std::fmax(box.lo[static_cast<std::size_t>(a)], xb);
            if (idx[static_cast<std::size_t>(a)] == g.resolution - 1)
                box.hi[static_cast<std::size_t>(a)] = std::fmin(box.hi[static_cast<std::size_t>(a)], xb);
        }
    }
    // shrink toward the center
    for (int a = 0; a < n; ++a) {
        const double lo = box.lo[static_cast<std::size_t>(a)], hi = box.hi[static_cast<std::size_t>(a)];
        const double w = hi - lo;
        box.lo[static_cast<std::size_t>(a)] = lo + margin * w;
        box.hi[static_cast<std::size_t>(a)] = hi - margin * w;
    }
    return box;
}

} // namespace lmce
