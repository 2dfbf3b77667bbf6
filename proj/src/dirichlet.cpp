#include "lmce/dirichlet.hpp"

#include <cmath>
#include <algorithm>

namespace lmce {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Matrix-explicit stencil operator over interior unknowns, CSR with the full
// 3^n-box pattern (structurally symmetric, so the transpose map is cheap).
struct StencilMatrix {
    Grid grid;
    bool built = false;
    int N = 0;
    std::vector<int> eq_of_node;
    std::vector<std::size_t> node_of_eq;
    std::vector<int> row_ptr, col;
    std::vector<int> tidx;  // index of the mirrored entry
    std::vector<double> val;      // symmetrized, (A + A^T)/2
    std::vector<double> raw;      // row-based assembly of -sum a^{ij} d_ij
    std::vector<double> diag;

    void build_pattern(const Grid& g_in) {
        grid = g_in;
        built = true;
        const std::size_t count = grid.num_nodes();
        eq_of_node.assign(count, -1);
        node_of_eq.clear();
        for (std::size_t node = 0; node < count; ++node) {
            if (grid.is_interior(grid.unindex(node), 1)) {
                eq_of_node[node] = static_cast<int>(node_of_eq.size());
                node_of_eq.push_back(node);
            }
        }
        N = static_cast<int>(node_of_eq.size());
        row_ptr.assign(static_cast<std::size_t>(N) + 1, 0);
        col.clear();

        const int box = (grid.n == 2) ? 9 : 27;
        col.reserve(static_cast<std::size_t>(N) * static_cast<std::size_t>(box));
        for (int e = 0; e < N; ++e) {
            const auto idx = grid.unindex(node_of_eq[static_cast<std::size_t>(e)]);
            for (int o = 0; o < box; ++o) {
                std::array<int, 3> j = idx;
                int rem = o;
                for (int a = 0; a < grid.n; ++a) {
                    j[static_cast<std::size_t>(a)] += (rem % 3) - 1;
                    rem /= 3;
                }
                const int je = eq_of_node[grid.index(j)];
                if (je >= 0) col.push_back(je);
            }
            row_ptr[static_cast<std::size_t>(e) + 1] = static_cast<int>(col.size());
        }
        // transpose map: entries are unique per row, find (j, i) by scan
        tidx.assign(col.size(), -1);
        for (int i = 0; i < N; ++i)
            for (int e = row_ptr[static_cast<std::size_t>(i)]; e < row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
                const int j = col[static_cast<std::size_t>(e)];
                for (int f = row_ptr[static_cast<std::size_t>(j)]; f < row_ptr[static_cast<std::size_t>(j) + 1]; ++f)
                    if (col[static_cast<std::size_t>(f)] == i) { tidx[static_cast<std::size_t>(e)] = f; break; }
            }
        val.assign(col.size(), 0.0);
        raw.assign(col.size(), 0.0);
        diag.assign(static_cast<std::size_t>(N), 0.0);
    }

    // assemble -sum_ij a^{ij} d_ij then symmetrize in place
    void assemble(const MatrixField& a, Exec exec) {
        std::fill(val.begin(), val.end(), 0.0);
        parallel_for(N, exec, [&](std::ptrdiff_t e) {
            const std::size_t node = node_of_eq[static_cast<std::size_t>(e)];
            const auto idx = grid.unindex(node);
            const SymMatrix an = a.get(node);
            auto add_entry = [&](const std::array<int, 3>& j, double v) {
                const int je = eq_of_node[grid.index(j)];
                if (je < 0) return;  // boundary: w = 0 there
                for (int f = row_ptr[static_cast<std::size_t>(e)]; f < row_ptr[static_cast<std::size_t>(e) + 1]; ++f)
                    if (col[static_cast<std::size_t>(f)] == je) {
                        val[static_cast<std::size_t>(f)] += v;
                        return;
                    }
            };
            for (int aa = 0; aa < grid.n; ++aa) {
                const double h = grid.h[static_cast<std::size_t>(aa)];
                const double c = an(aa, aa) / (h * h);
                add_entry(idx, 2.0 * c);
                std::array<int, 3> p = idx, m = idx;
                p[static_cast<std::size_t>(aa)] += 1;
                m[static_cast<std::size_t>(aa)] -= 1;
                add_entry(p, -c);
                add_entry(m, -c);
            }
            for (int aa = 0; aa < grid.n; ++aa)
                for (int bb = aa + 1; bb < grid.n; ++bb) {
                    const double w = an(aa, bb) / (2.0 * grid.h[static_cast<std::size_t>(aa)] *
                                                   grid.h[static_cast<std::size_t>(bb)]);
                    for (int sa = -1; sa <= 1; sa += 2)
                        for (int sb = -1; sb <= 1; sb += 2) {
                            std::array<int, 3> j = idx;
                            j[static_cast<std::size_t>(aa)] += sa;
                            j[static_cast<std::size_t>(bb)] += sb;
                            add_entry(j, -static_cast<double>(sa * sb) * w);
                        }
                }
        });
        // symmetrize: M = (A + A^T)/2, keeping the raw matrix for the
        // exact-Jacobian fallback direction
        raw = val;
        std::vector<double> sym(val.size());
        parallel_for(static_cast<std::ptrdiff_t>(val.size()), exec, [&](std::ptrdiff_t q) {
            sym[static_cast<std::size_t>(q)] =
                0.5 * (val[static_cast<std::size_t>(q)] + val[static_cast<std::size_t>(tidx[static_cast<std::size_t>(q)])]);
        });
        val.swap(sym);
        parallel_for(N, exec, [&](std::ptrdiff_t e) {
            for (int f = row_ptr[static_cast<std::size_t>(e)]; f < row_ptr[static_cast<std::size_t>(e) + 1]; ++f)
                if (col[static_cast<std::size_t>(f)] == static_cast<int>(e))
                    diag[static_cast<std::size_t>(e)] = val[static_cast<std::size_t>(f)];
        });
    }

    void apply(const std::vector<double>& x, std::vector<double>& y, Exec exec, double shift) const {
        parallel_for(N, exec, [&](std::ptrdiff_t i) {
            double acc = shift * diag[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
            for (int f = row_ptr[static_cast<std::size_t>(i)]; f < row_ptr[static_cast<std::size_t>(i) + 1]; ++f)
                acc += val[static_cast<std::size_t>(f)] * x[static_cast<std::size_t>(col[static_cast<std::size_t>(f)])];
            y[static_cast<std::size_t>(i)] = acc;
        });
    }

    void apply_raw(const std::vector<double>& x, std::vector<double>& y, Exec exec) const {
        parallel_for(N, exec, [&](std::ptrdiff_t i) {
            double acc = 0.0;
            for (int f = row_ptr[static_cast<std::size_t>(i)]; f < row_ptr[static_cast<std::size_t>(i) + 1]; ++f)
                acc += raw[static_cast<std::size_t>(f)] * x[static_cast<std::size_t>(col[static_cast<std::size_t>(f)])];
            y[static_cast<std::size_t>(i)] = acc;
        });
    }
};

// Jacobi-preconditioned CG; dot products use ordered block sums so the
// iteration is bitwise reproducible for any thread count.
struct PcgOutcome {
    int iters = 0;
    double rel_residual = 0.0;
};
PcgOutcome pcg(const StencilMatrix& M, const std::vector<double>& b, std::vector<double>& x,
               double rel_tol, Exec exec, double shift) {
    const int N = M.N;
    std::vector<double> r = b, z(static_cast<std::size_t>(N)), p(static_cast<std::size_t>(N)),
        q(static_cast<std::size_t>(N));
    std::fill(x.begin(), x.end(), 0.0);
    auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
        return ordered_sum(N, exec, [&](std::ptrdiff_t i) {
            return u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        });
    };
    const double bnorm = std::sqrt(std::fmax(dot(b, b), 0.0));
    if (bnorm == 0.0) return {0, 0.0};
    parallel_for(N, exec, [&](std::ptrdiff_t i) {
        const double d = M.diag[static_cast<std::size_t>(i)] * (1.0 + shift);
        z[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] / (d != 0.0 ? d : 1.0);
    });
    p = z;
    double rz = dot(r, z);
    const int max_iters = 10 * N;
    for (int it = 1; it <= max_iters; ++it) {
        M.apply(p, q, exec, shift);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) throw LinearSolveStalled("pcg: nonpositive curvature direction");
        const double alpha = rz / pq;
        parallel_for(N, exec, [&](std::ptrdiff_t i) {
            x[static_cast<std::size_t>(i)] += alpha * p[static_cast<std::size_t>(i)];
            r[static_cast<std::size_t>(i)] -= alpha * q[static_cast<std::size_t>(i)];
        });
        const double rnorm = std::sqrt(std::fmax(dot(r, r), 0.0));
        if (rnorm <= rel_tol * bnorm) return {it, rnorm / bnorm};
        parallel_for(N, exec, [&](std::ptrdiff_t i) {
            const double d = M.diag[static_cast<std::size_t>(i)] * (1.0 + shift);
            z[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] / (d != 0.0 ? d : 1.0);
        });
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        parallel_for(N, exec, [&](std::ptrdiff_t i) {
            p[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + beta * p[static_cast<std::size_t>(i)];
        });
    }
    throw LinearSolveStalled("pcg: iteration cap reached");
}

// Jacobi-preconditioned BiCGStab on the raw (row-based) matrix. Used as the
// fallback direction when the symmetrized-system step fails the line search:
// near corner-irregular iterates the symmetrization error can flip the step
// out of the descent cone of the sup-norm, while the exact stencil Jacobian
// restores quadratic convergence.
bool bicgstab_raw(const StencilMatrix& M, const std::vector<double>& b, std::vector<double>& x,
                  double rel_tol, Exec exec) {
    const int N = M.N;
    std::fill(x.begin(), x.end(), 0.0);
    auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
        return ordered_sum(N, exec, [&](std::ptrdiff_t i) {
            return u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        });
    };
    std::vector<double> r = b, r0 = b, p(static_cast<std::size_t>(N), 0.0),
        v(static_cast<std::size_t>(N), 0.0), s(static_cast<std::size_t>(N)),
        t(static_cast<std::size_t>(N)), phat(static_cast<std::size_t>(N)),
        shat(static_cast<std::size_t>(N));
    const double bnorm = std::sqrt(std::fmax(dot(b, b), 0.0));
    if (bnorm == 0.0) return true;
    double rho = 1.0, alpha = 1.0, w = 1.0;
    const int max_iters = 10 * N;
    for (int it = 0; it < max_iters; ++it) {
        const double rho1 = dot(r0, r);
        if (rho1 == 0.0 || w == 0.0) return false;
        const double beta = (rho1 / rho) * (alpha / w);
        rho = rho1;
        parallel_for(N, exec, [&](std::ptrdiff_t i) {
            p[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] +
                beta * (p[static_cast<std::size_t>(i)] - w * v[static_cast<std::size_t>(i)]);
        });
        parallel_for(N, exec, [&](std::ptrdiff_t i) {
            const double d = M.diag[static_cast<std::size_t>(i)];
            phat[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] / (d != 0.0 ? d : 1.0);
        });
        M.apply_raw(phat, v, exec);
        const double r0v = dot(r0, v);
        if (r0v == 0.0) return false;
        alpha = rho / r0v;
        parallel_for(N, exec, [&](std::ptrdiff_t i) {
            s[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] - alpha * v[static_cast<std::size_t>(i)];
        });
        parallel_for(N, exec, [&](std::ptrdiff_t i) {
            const double d = M.diag[static_cast<std::size_t>(i)];
            shat[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)] / (d != 0.0 ? d : 1.0);
        });
        M.apply_raw(shat, t, exec);
        const double tt = dot(t, t);
        w = (tt == 0.0) ? 0.0 : dot(t, s) / tt;
        parallel_for(N, exec, [&](std::ptrdiff_t i) {
            x[static_cast<std::size_t>(i)] += alpha * phat[static_cast<std::size_t>(i)] +
                                              w * shat[static_cast<std::size_t>(i)];
            r[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)] - w * t[static_cast<std::size_t>(i)];
        });
        if (std::sqrt(std::fmax(dot(r, r), 0.0)) <= rel_tol * bnorm) return true;
    }
    return false;
}

std::vector<double> solve_linear(const StencilMatrix& M, const std::vector<double>& b,
                                 double rel_tol, Exec exec, double* out_rel = nullptr) {
    std::vector<double> x(static_cast<std::size_t>(M.N), 0.0);
    // Levenberg-style diagonal damping ladder: an indefinite symmetrized
    // stencil (strong off-diagonal coefficients at a bad iterate) still
    // yields a usable damped direction for the line search.
    double shift = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        try {
            PcgOutcome oc = pcg(M, b, x, rel_tol, exec, shift);
            if (out_rel) *out_rel = oc.rel_residual;
            return x;
        } catch (const LinearSolveStalled&) {
            if (attempt == 7) throw;
            shift = (shift == 0.0) ? 1e-8 : shift * 30.0;
        }
    }
    throw LinearSolveStalled("pcg: unreachable");
}

SymMatrix hessian_at(const ScalarField& u, const std::array<int, 3>& idx) {
    SymMatrix m(u.grid.n);
    for (int a = 0; a < u.grid.n; ++a)
        for (int b = a; b < u.grid.n; ++b) m.set(a, b, deriv2(u, idx, a, b));
    return m;
}

} // namespace

DirichletProblem DirichletProblem::make(const Grid& g, const PhaseSpec& theta,
                                        const std::function<double(const double*)>& psi_fn) {
    DirichletProblem p;
    p.grid = g;
    p.theta = theta;
    p.psi.assign(g.num_nodes(), 0.0);
    const std::size_t count = g.num_nodes();
    for (std::size_t i = 0; i < count; ++i) {
        const auto idx = g.unindex(i);
        if (!g.is_interior(idx, 1)) {
            const auto x = g.coord(idx);
            p.psi[i] = psi_fn(x.data());
        }
    }
    p.Lambda = theta.lipschitz_estimate(g);
    return p;
}

ScalarField residual_field(const ScalarField& u, const ScalarField& theta_nodes, Exec exec) {
    const Grid& g = u.grid;
    ScalarField r(g, 0.0);
    parallel_for(static_cast<std::ptrdiff_t>(g.num_nodes()), exec, [&](std::ptrdiff_t node) {
        const auto idx = g.unindex(static_cast<std::size_t>(node));
        if (!g.is_interior(idx, 1)) return;
        const Spectrum s = eig_sym(hessian_at(u, idx));
        r[static_cast<std::size_t>(node)] = phase(s) - theta_nodes[static_cast<std::size_t>(node)];
    });
    return r;
}

double residual_sup_norm(const ScalarField& r, Exec exec) {
    return ordered_max(static_cast<std::ptrdiff_t>(r.values.size()), exec, [&](std::ptrdiff_t i) {
        return std::fabs(r.values[static_cast<std::size_t>(i)]);
    });
}

ScalarField residual_field_composed(const ScalarField& u,
                                    const std::function<double(const double*, int)>& thetahat,
                                    Exec exec) {
    const Grid& g = u.grid;
    ScalarField r(g, 0.0);
    parallel_for(static_cast<std::ptrdiff_t>(g.num_nodes()), exec, [&](std::ptrdiff_t node) {
        const auto idx = g.unindex(static_cast<std::size_t>(node));
        if (!g.is_interior(idx, 1)) return;
        const Spectrum s = eig_sym(hessian_at(u, idx));
        std::array<double, kMaxDim> du{};
        for (int a = 0; a < g.n; ++a) du[static_cast<std::size_t>(a)] = deriv1(u, idx, a);
        r[static_cast<std::size_t>(node)] = phase(s) - thetahat(du.data(), g.n);
    });
    return r;
}

VectorField composed_linear_drift(
    const ScalarField& u,
    const std::function<std::array<double, kMaxDim>(const double*, int)>& thetahat_grad,
    Exec exec) {
    const Grid& g = u.grid;
    VectorField b(g);
    parallel_for(static_cast<std::ptrdiff_t>(g.num_nodes()), exec, [&](std::ptrdiff_t node) {
        const auto idx = g.unindex(static_cast<std::size_t>(node));
        if (!g.is_interior(idx, 1)) return;
        std::array<double, kMaxDim> du{};
        for (int a = 0; a < g.n; ++a) du[static_cast<std::size_t>(a)] = deriv1(u, idx, a);
        const auto tg = thetahat_grad(du.data(), g.n);
        for (int a = 0; a < g.n; ++a) b.comp(static_cast<std::size_t>(node), a) = tg[static_cast<std::size_t>(a)];
    });
    return b;
}

MatrixField linearize(const ScalarField& u, Exec exec) {
    const Grid& g = u.grid;
    MatrixField a(g);
    parallel_for(static_cast<std::ptrdiff_t>(g.num_nodes()), exec, [&](std::ptrdiff_t node) {
        const auto idx = g.unindex(static_cast<std::size_t>(node));
        const SymMatrix m = hessian_at(u, idx);
        const Spectrum s = eig_sym(m);
        SymMatrix coeff(g.n);
        for (int i = 0; i < g.n; ++i)
            for (int j = i; j < g.n; ++j) {
                double acc = 0.0;
                for (int q = 0; q < g.n; ++q) {
                    const double lq = s.lambda[static_cast<std::size_t>(q)];
                    acc += s.gamma(i, q) * s.gamma(j, q) / (1.0 + lq * lq);
                }
                coeff.set(i, j, acc);
            }
        a.put(static_cast<std::size_t>(node), coeff);
        a.boundary_flag[static_cast<std::size_t>(node)] = g.is_interior(idx, 1) ? 0 : 1;
    });
    return a;
}

NewtonStepResult newton_step(const ScalarField& u, const ScalarField& theta_nodes,
                             const SolveOptions& opts) {
    const Grid& g = u.grid;
    static thread_local StencilMatrix M;
    if (!M.built || !M.grid.same_layout(g)) M.build_pattern(g);

    const MatrixField a = linearize(u, opts.exec);
    // the coefficient spectrum must sit in (0, 1] at every iterate
    const double diag_bad = ordered_max(static_cast<std::ptrdiff_t>(g.num_nodes()), opts.exec,
                                        [&](std::ptrdiff_t node) {
                                            const SymMatrix an = a.get(static_cast<std::size_t>(node));
                                            double worst = 0.0;
                                            for (int q = 0; q < g.n; ++q) {
                                                const double d = an(q, q);
                                                worst = std::fmax(worst, d - 1.0);
                                                worst = std::fmax(worst, -d);
                                            }
                                            return worst;
                                        });
    if (diag_bad > 1e-12)
        throw Error("newton_step: coefficient field left (0, 1]");
    M.assemble(a, opts.exec);

    const ScalarField r = residual_field(u, theta_nodes, opts.exec);
    const double old_sup = residual_sup_norm(r, opts.exec);

    std::vector<double> rhs(static_cast<std::size_t>(M.N));
    for (int e = 0; e < M.N; ++e)
        rhs[static_cast<std::size_t>(e)] = r[M.node_of_eq[static_cast<std::size_t>(e)]];
    // -L w = -(-residual) ... assembled matrix is -L, solve (-L) w = residual
    double rel = 0.0;
    std::vector<double> w;
    try {
        w = solve_linear(M, rhs, opts.pcg_tol, opts.exec, &rel);
    } catch (const LinearSolveStalled&) {
        w.assign(static_cast<std::size_t>(M.N), 0.0);
        if (!bicgstab_raw(M, rhs, w, opts.pcg_tol, opts.exec))
            throw;
    }

    NewtonStepResult out;
    out.linear_residual = rel;
    double wnorm = 0.0;
    for (double v : w) wnorm = std::fmax(wnorm, std::fabs(v));
    out.step_norm = wnorm;

    auto backtrack = [&](const std::vector<double>& dir, ScalarField& trial) {
        double s = 1.0;
        for (int back = 0; back <= 10; ++back) {
            trial.values = u.values;
            for (int e = 0; e < M.N; ++e)
                trial.values[M.node_of_eq[static_cast<std::size_t>(e)]] += s * dir[static_cast<std::size_t>(e)];
            const double new_sup =
                residual_sup_norm(residual_field(trial, theta_nodes, opts.exec), opts.exec);
            if (new_sup <= (1.0 - 1e-4 * s) * old_sup || new_sup <= opts.tol) {
                out.step_scale = s;
                out.new_residual_sup = new_sup;
                return true;
            }
            s *= 0.5;
        }
        return false;
    };

    ScalarField trial = u;
    if (backtrack(w, trial)) {
        out.u_next = trial;
        return out;
    }
    // exact-Jacobian fallback on the unsymmetrized stencil matrix
    std::vector<double> w2(static_cast<std::size_t>(M.N), 0.0);
    if (bicgstab_raw(M, rhs, w2, opts.pcg_tol, opts.exec) && backtrack(w2, trial)) {
        double n2 = 0.0;
        for (double v : w2) n2 = std::fmax(n2, std::fabs(v));
        out.step_norm = n2;
        out.u_next = trial;
        return out;
    }
    throw LineSearchFailed("newton_step: backtracking exhausted at s = 2^-10");
}

ScalarField harmonic_extension(const Grid& g, const std::vector<double>& boundary_values,
                               const SolveOptions& opts) {
    ScalarField u0(g, 0.0);
    const std::size_t count = g.num_nodes();
    for (std::size_t i = 0; i < count; ++i)
        if (!g.is_interior(g.unindex(i), 1)) u0[i] = boundary_values[i];

    StencilMatrix M;
    M.build_pattern(g);
    MatrixField eye(g);
    for (std::size_t i = 0; i < count; ++i) eye.put(i, SymMatrix::identity(g.n));
    M.assemble(eye, opts.exec);

    std::vector<double> rhs(static_cast<std::size_t>(M.N));
    for (int e = 0; e < M.N; ++e) {
        const std::size_t node = M.node_of_eq[static_cast<std::size_t>(e)];
        const auto idx = g.unindex(node);
        double lap = 0.0;
        for (int a = 0; a < g.n; ++a) lap += deriv2(u0, idx, a, a);
        rhs[static_cast<std::size_t>(e)] = lap;
    }
    const std::vector<double> w = solve_linear(M, rhs, opts.pcg_tol, opts.exec);
    ScalarField out = u0;
    for (int e = 0; e < M.N; ++e) out.values[M.node_of_eq[static_cast<std::size_t>(e)]] += w[static_cast<std::size_t>(e)];
    return out;
}

namespace {

// Newton loop at fixed phase samples; returns iterations used or throws.
int newton_to_tolerance(ScalarField& u, const ScalarField& theta_nodes, const SolveOptions& opts) {
    int iters = 0;
    double sup = residual_sup_norm(residual_field(u, theta_nodes, opts.exec), opts.exec);
    while (sup > opts.tol) {
        if (iters >= opts.max_newton)
            throw LineSearchFailed("newton: iteration budget exhausted");
        NewtonStepResult st = newton_step(u, theta_nodes, opts);
        u = st.u_next;
        sup = st.new_residual_sup;
        ++iters;
    }
    return iters;
}

} // namespace

SolveResult solve(const DirichletProblem& problem, const SolveOptions& opts) {
    const Grid& g = problem.grid;
    const int n = g.n;
    const double crit = (n - 2) * kPi / 2.0;

    const ScalarField theta_target = problem.theta.sample(g);
    double inf_th = 1e300, sup_th = -1e300;
    for (double v : theta_target.values) {
        inf_th = std::fmin(inf_th, v);
        sup_th = std::fmax(sup_th, v);
    }
    if (inf_th < crit - 1e-12)
        throw SubcriticalPhase("solve: phase dips below the critical value (n-2)pi/2");
    if (sup_th >= n * kPi / 2.0)
        throw Error("solve: phase must stay below n*pi/2");

    // initial guess: supercritical quadratic plus harmonic boundary correction
    const double qcoef = 0.5 * std::tan(sup_th / n);
    std::array<double, 3> center{};
    for (int a = 0; a < n; ++a)
        center[static_cast<std::size_t>(a)] =
            0.5 * (g.lo[static_cast<std::size_t>(a)] + g.hi[static_cast<std::size_t>(a)]);
    auto quad = [&](const double* x) {
        double s = 0.0;
        for (int a = 0; a < n; ++a) {
            const double d = x[a] - center[static_cast<std::size_t>(a)];
            s += d * d;
        }
        return qcoef * s;
    };
    std::vector<double> bmismatch(g.num_nodes(), 0.0);
    const std::size_t count = g.num_nodes();
    for (std::size_t i = 0; i < count; ++i) {
        const auto idx = g.unindex(i);
        if (!g.is_interior(idx, 1)) {
            const auto x = g.coord(idx);
            bmismatch[i] = problem.psi[i] - quad(x.data());
        }
    }
    ScalarField u = harmonic_extension(g, bmismatch, opts);
    for (std::size_t i = 0; i < count; ++i) {
        const auto x = g.coord(g.unindex(i));
        u[i] += quad(x.data());
    }

    SolveResult result;
    result.continuation_steps = 0;
    result.newton_iters = 0;

    // stage 0: constant phase sup(theta)
    ScalarField theta_t(g, sup_th);
    result.newton_iters += newton_to_tolerance(u, theta_t, opts);

    double t = 0.0, dt = opts.initial_dt;
    while (t < 1.0 - 1e-14) {
        const double t_try = std::fmin(1.0, t + dt);
        for (std::size_t i = 0; i < count; ++i)
            theta_t[i] = (1.0 - t_try) * sup_th + t_try * theta_target[i];
        ScalarField u_try = u;
        try {
            result.newton_iters += newton_to_tolerance(u_try, theta_t, opts);
        } catch (const LineSearchFailed&) {
            dt *= 0.5;
            if (dt < 1e-4)
                throw ContinuationStalled("solve: continuation step below 1e-4");
            continue;
        } catch (const LinearSolveStalled&) {
            dt *= 0.5;
            if (dt < 1e-4)
                throw ContinuationStalled("solve: continuation step below 1e-4");
            continue;
        }
        u = u_try;
        t = t_try;
        ++result.continuation_steps;
        if (opts.verbosity > 0)
            std::fprintf(stderr, "continuation t=%.4f newton_total=%d\n", t, result.newton_iters);
    }

    result.u = u;
    result.residual_sup = residual_sup_norm(residual_field(u, theta_target, opts.exec), opts.exec);
    result.hessian_sup_half = hessian_sup_half_domain(u, opts.exec);
    result.gradient_sup = gradient_sup_norm(u, opts.exec);
    return result;
}

double hessian_sup_half_domain(const ScalarField& u, Exec exec) {
    const Grid& g = u.grid;
    return ordered_max(static_cast<std::ptrdiff_t>(g.num_nodes()), exec, [&](std::ptrdiff_t node) {
        const auto idx = g.unindex(static_cast<std::size_t>(node));
        const auto x = g.coord(idx);
        for (int a = 0; a < g.n; ++a) {
            const double c = 0.5 * (g.lo[static_cast<std::size_t>(a)] + g.hi[static_cast<std::size_t>(a)]);
            const double quarter = 0.25 * (g.hi[static_cast<std::size_t>(a)] - g.lo[static_cast<std::size_t>(a)]);
            if (std::fabs(x[static_cast<std::size_t>(a)] - c) > quarter + 1e-12) return 0.0;
        }
        if (!g.is_interior(idx, 1)) return 0.0;
        const Spectrum s = eig_sym(hessian_at(u, idx));
        return std::fmax(std::fabs(s.lambda[0]), std::fabs(s.lambda[static_cast<std::size_t>(g.n - 1)]));
    });
}

double hessian_holder_half_domain(const ScalarField& u, std::uint64_t seed, int pairs) {
    const Grid& g = u.grid;
    Rng rng(derive_seed(seed, 0x401de7));
    // gather interior half-domain node indices once
    std::vector<std::size_t> nodes;
    for (std::size_t node = 0; node < g.num_nodes(); ++node) {
        const auto idx = g.unindex(node);
        if (!g.is_interior(idx, 1)) continue;
        const auto x = g.coord(idx);
        bool in = true;
        for (int a = 0; a < g.n; ++a) {
            const double c = 0.5 * (g.lo[static_cast<std::size_t>(a)] + g.hi[static_cast<std::size_t>(a)]);
            const double quarter = 0.25 * (g.hi[static_cast<std::size_t>(a)] - g.lo[static_cast<std::size_t>(a)]);
            if (std::fabs(x[static_cast<std::size_t>(a)] - c) > quarter + 1e-12) { in = false; break; }
        }
        if (in) nodes.push_back(node);
    }
    if (nodes.size() < 2) return 0.0;
    double worst = 0.0;
    for (int p = 0; p < pairs; ++p) {
        const std::size_t i = nodes[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(nodes.size())))];
        const std::size_t j = nodes[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(nodes.size())))];
        if (i == j) continue;
        const auto xi = g.coord(g.unindex(i));
        const auto xj = g.coord(g.unindex(j));
        double dist = 0.0;
        for (int a = 0; a < g.n; ++a) {
            const double d = xi[static_cast<std::size_t>(a)] - xj[static_cast<std::size_t>(a)];
            dist += d * d;
        }
        dist = std::sqrt(dist);
        const SymMatrix hi2 = hessian_at(u, g.unindex(i));
        const SymMatrix hj2 = hessian_at(u, g.unindex(j));
        worst = std::fmax(worst, (hi2 - hj2).frob_norm() / std::sqrt(dist));
    }
    return worst;
}

double gradient_sup_norm(const ScalarField& u, Exec exec) {
    const Grid& g = u.grid;
    return ordered_max(static_cast<std::ptrdiff_t>(g.num_nodes()), exec, [&](std::ptrdiff_t node) {
        const auto idx = g.unindex(static_cast<std::size_t>(node));
        double s = 0.0;
        for (int a = 0; a < g.n; ++a) {
            const double d = deriv1(u, idx, a);
            s += d * d;
        }
        return std::sqrt(s);
    });
}

PhaseSpec scan_phase(int n, double Lambda, std::uint64_t seed) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(Lambda * 1e6) + 17));
    std::array<double, 3> phase_shift{};
    for (int a = 0; a < n; ++a) phase_shift[static_cast<std::size_t>(a)] = rng.uniform(0.0, 2.0 * kPi);
    const double ramp_anchor = rng.uniform(-0.5, 0.5);
    const double crit = (n - 2) * kPi / 2.0;
    const double cap = n * kPi / 2.0 - 0.05;
    return PhaseSpec::callable([=](const double* x, int dim) {
        double osc = 0.0;
        for (int a = 0; a < dim; ++a)
            osc += std::cos(kPi * x[a] + phase_shift[static_cast<std::size_t>(a)]);
        osc /= kPi * std::sqrt(static_cast<double>(dim));  // Lip <= 1
        const double ramp = std::fabs(x[0] - ramp_anchor);  // Lip = 1
        const double profile = 0.75 * osc + 0.25 * ramp;    // Lip <= 1
        double th = crit + 0.3 + Lambda * profile;
        th = std::fmax(crit, std::fmin(th, cap));
        return th;
    });
}

std::vector<ScanRow> hessian_scan(int n, const std::vector<double>& Lambda_list,
                                  double kappa_target, const std::vector<int>& resolutions,
                                  std::uint64_t seed, const SolveOptions& opts) {
    std::vector<ScanRow> rows;
    for (double Lambda : Lambda_list) {
        const PhaseSpec phase = scan_phase(n, Lambda, seed);
        for (int res : resolutions) {
            ScanRow row;
            row.Lambda = Lambda;
            row.resolution = res;
            row.hessian_sup_half = 0.0;
            row.hessian_holder_half = 0.0;
            row.gradient_sup = 0.0;
            row.residual_sup = 0.0;
            row.newton_iters = 0;
            row.continuation_steps = 0;
            try {
                const Grid g = Grid::cube(n, -1.0, 1.0, res);
                const DirichletProblem prob = DirichletProblem::make(g, phase, [&](const double* x) {
                    double s = 0.0;
                    for (int a = 0; a < n; ++a) s += x[a] * x[a];
                    return 0.5 * kappa_target * s;
                });
                const SolveResult sr = solve(prob, opts);
                row.hessian_sup_half = sr.hessian_sup_half;
                row.hessian_holder_half = hessian_holder_half_domain(sr.u, seed);
                row.gradient_sup = sr.gradient_sup;
                row.residual_sup = sr.residual_sup;
                row.newton_iters = sr.newton_iters;
                row.continuation_steps = sr.continuation_steps;
                row.status = "ok";
            } catch (const Error& e) {
                row.status = e.what();
            }
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace lmce
