#include "lmce/graph_geometry.hpp"

#include <cmath>

namespace lmce {

namespace {
constexpr double kPi = 3.14159265358979323846;

// D^3u contracted with three eigenvectors
double d3_in_frame(int n, const SymTensor3& d3, const SmallMatrix& gamma, int i, int j, int k) {
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
        const double ga = gamma(a, i);
        if (ga == 0.0) continue;
        for (int b = 0; b < n; ++b) {
            const double gb = gamma(b, j);
            if (gb == 0.0) continue;
            double inner = 0.0;
            for (int c = 0; c < n; ++c) inner += d3(a, b, c) * gamma(c, k);
            acc += ga * gb * inner;
        }
    }
    return acc;
}

SymMatrix deriv_of_hessian(int n, const SymTensor3& d3, int l) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) m.set(i, j, d3(i, j, l));
    return m;
}

} // namespace

Potential potential_of(const PolynomialTestFunction& p) {
    Potential u;
    u.n = p.dim();
    u.deriv = [p](const double* x, const std::array<int, kMaxDim>& alpha) {
        return p.eval_deriv(x, alpha);
    };
    return u;
}

std::array<double, kMaxDim> grad_of(const Potential& u, const double* x) {
    std::array<double, kMaxDim> g{};
    std::array<int, kMaxDim> a{};
    for (int i = 0; i < u.n; ++i) {
        a[static_cast<std::size_t>(i)] = 1;
        g[static_cast<std::size_t>(i)] = u.deriv(x, a);
        a[static_cast<std::size_t>(i)] = 0;
    }
    return g;
}

SymMatrix hess_of(const Potential& u, const double* x) {
    SymMatrix m(u.n);
    std::array<int, kMaxDim> a{};
    for (int i = 0; i < u.n; ++i)
        for (int j = i; j < u.n; ++j) {
            a[static_cast<std::size_t>(i)] += 1;
            a[static_cast<std::size_t>(j)] += 1;
            m.set(i, j, u.deriv(x, a));
            a[static_cast<std::size_t>(i)] = 0;
            a[static_cast<std::size_t>(j)] = 0;
        }
    return m;
}

SymTensor3 tensor3_of(const Potential& u, const double* x) {
    SymTensor3 t(u.n);
    std::array<int, kMaxDim> a{};
    for (int i = 0; i < u.n; ++i)
        for (int j = i; j < u.n; ++j)
            for (int k = j; k < u.n; ++k) {
                a[static_cast<std::size_t>(i)] += 1;
                a[static_cast<std::size_t>(j)] += 1;
                a[static_cast<std::size_t>(k)] += 1;
                t.set(i, j, k, u.deriv(x, a));
                a[static_cast<std::size_t>(i)] = 0;
                a[static_cast<std::size_t>(j)] = 0;
                a[static_cast<std::size_t>(k)] = 0;
            }
    return t;
}

std::array<double, kMaxDim> theta_gradient(int n, const SymMatrix& hess, const SymTensor3& d3) {
    const Spectrum s = eig_sym(hess);
    // a = (I + M^2)^{-1} through the spectrum
    SymMatrix a(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            for (int q = 0; q < n; ++q)
                acc += s.gamma(i, q) * s.gamma(j, q) /
                       (1.0 + s.lambda[static_cast<std::size_t>(q)] * s.lambda[static_cast<std::size_t>(q)]);
            a.set(i, j, acc);
        }
    std::array<double, kMaxDim> th{};
    for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) acc += a(i, j) * d3(i, j, k);
        th[static_cast<std::size_t>(k)] = acc;
    }
    return th;
}

ThetaJets theta_jets(const Potential& u, const double* x) {
    const int n = u.n;
    const SymMatrix m = hess_of(u, x);
    const SymTensor3 d3 = tensor3_of(u, x);
    const Spectrum s = eig_sym(m);

    ThetaJets tj;
    tj.theta = phase(s);
    tj.grad = theta_gradient(n, m, d3);

    // a = (I + M^2)^{-1}
    SmallMatrix a(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int q = 0; q < n; ++q)
                acc += s.gamma(i, q) * s.gamma(j, q) /
                       (1.0 + s.lambda[static_cast<std::size_t>(q)] * s.lambda[static_cast<std::size_t>(q)]);
            a(i, j) = acc;
        }

    const SmallMatrix md = m.dense();
    tj.hess = SymMatrix(n);
    SmallMatrix full(n);
    std::array<int, kMaxDim> alpha{};
    for (int l = 0; l < n; ++l) {
        const SmallMatrix ml = deriv_of_hessian(n, d3, l).dense();
        const SmallMatrix da = a * (ml * md + md * ml) * a;
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    // fourth derivative u_ijkl
                    alpha[static_cast<std::size_t>(i)] += 1;
                    alpha[static_cast<std::size_t>(j)] += 1;
                    alpha[static_cast<std::size_t>(k)] += 1;
                    alpha[static_cast<std::size_t>(l)] += 1;
                    const double u4 = u.deriv(x, alpha);
                    alpha.fill(0);
                    acc += -da(i, j) * d3(i, j, k) + a(i, j) * u4;
                }
            full(k, l) = acc;
        }
    }
    tj.hess = SymMatrix::from_dense_symmetrized(full);
    return tj;
}

GraphGeometry geometry_at(int n, const std::array<double, kMaxDim>& du, const SymMatrix& d2u,
                          const SymTensor3& d3u) {
    (void)du;
    GraphGeometry gg;
    gg.n = n;
    gg.spectrum = eig_sym(d2u);
    gg.degenerate_flagged = gg.spectrum.gap <= 1e-8;

    const SmallMatrix md = d2u.dense();
    const SmallMatrix m2 = md * md;
    gg.g = SymMatrix(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) gg.g.set(i, j, (i == j ? 1.0 : 0.0) + m2(i, j));

    gg.ginv = SymMatrix(n);
    gg.v = 1.0;
    for (int i = 0; i < n; ++i) {
        const double li = gg.spectrum.lambda[static_cast<std::size_t>(i)];
        gg.v *= std::sqrt(1.0 + li * li);
        gg.jordan[static_cast<std::size_t>(i)] = std::atan(li);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            for (int q = 0; q < n; ++q) {
                const double lq = gg.spectrum.lambda[static_cast<std::size_t>(q)];
                acc += gg.spectrum.gamma(i, q) * gg.spectrum.gamma(j, q) / (1.0 + lq * lq);
            }
            gg.ginv.set(i, j, acc);
        }

    for (int i = 0; i < n; ++i) {
        const double li = gg.spectrum.lambda[static_cast<std::size_t>(i)];
        const double w = 1.0 / std::sqrt(1.0 + li * li);
        for (int r = 0; r < 2 * kMaxDim; ++r) { gg.e[i][static_cast<std::size_t>(r)] = 0.0; gg.nu[i][static_cast<std::size_t>(r)] = 0.0; }
        for (int r = 0; r < n; ++r) {
            const double gr = gg.spectrum.gamma(r, i);
            gg.e[i][static_cast<std::size_t>(r)] = w * gr;
            gg.e[i][static_cast<std::size_t>(n + r)] = w * li * gr;
            gg.nu[i][static_cast<std::size_t>(r)] = -w * li * gr;
            gg.nu[i][static_cast<std::size_t>(n + r)] = w * gr;
        }
    }

    gg.h = SymTensor3(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int k = j; k < n; ++k) {
                const double li = gg.spectrum.lambda[static_cast<std::size_t>(i)];
                const double lj = gg.spectrum.lambda[static_cast<std::size_t>(j)];
                const double lk = gg.spectrum.lambda[static_cast<std::size_t>(k)];
                const double w = 1.0 / std::sqrt((1.0 + li * li) * (1.0 + lj * lj) * (1.0 + lk * lk));
                gg.h.set(i, j, k, w * d3_in_frame(n, d3u, gg.spectrum.gamma, i, j, k));
            }

    gg.H.fill(0.0);
    for (int k = 0; k < n; ++k) {
        double trk = 0.0;
        for (int i = 0; i < n; ++i) trk += gg.h(i, i, k);
        for (int r = 0; r < 2 * n; ++r) gg.H[static_cast<std::size_t>(r)] += trk * gg.nu[k][static_cast<std::size_t>(r)];
    }
    return gg;
}

double mean_curvature_residual(int n, const std::array<double, kMaxDim>& du, const SymMatrix& d2u,
                               const SymTensor3& d3u, const std::array<double, kMaxDim>& theta_grad) {
    const GraphGeometry gg = geometry_at(n, du, d2u, d3u);
    // J grad^L theta = sum_ij g^{ij} theta_j (E_{n+i} - sum_k u_ik E_k)
    std::array<double, 2 * kMaxDim> jgrad{};
    for (int i = 0; i < n; ++i) {
        double ci = 0.0;
        for (int j = 0; j < n; ++j) ci += gg.ginv(i, j) * theta_grad[static_cast<std::size_t>(j)];
        jgrad[static_cast<std::size_t>(n + i)] += ci;
        for (int k = 0; k < n; ++k) jgrad[static_cast<std::size_t>(k)] -= ci * d2u(i, k);
    }
    double s = 0.0;
    for (int r = 0; r < 2 * n; ++r) {
        const double d = gg.H[static_cast<std::size_t>(r)] - jgrad[static_cast<std::size_t>(r)];
        s += d * d;
    }
    return std::sqrt(s);
}

namespace {

// inner vector field W_i = v sum_j g^{ij} d_j f of the divergence form
std::array<double, kMaxDim> inner_field(const Potential& u, const ScalarOnBase& f, const double* x) {
    const int n = u.n;
    const SymMatrix m = hess_of(u, x);
    const Spectrum s = eig_sym(m);
    double v = 1.0;
    for (int i = 0; i < n; ++i) {
        const double li = s.lambda[static_cast<std::size_t>(i)];
        v *= std::sqrt(1.0 + li * li);
    }
    const std::array<double, kMaxDim> df = f.gradient(x);
    std::array<double, kMaxDim> w{};
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            double gij = 0.0;
            for (int q = 0; q < n; ++q) {
                const double lq = s.lambda[static_cast<std::size_t>(q)];
                gij += s.gamma(i, q) * s.gamma(j, q) / (1.0 + lq * lq);
            }
            acc += gij * df[static_cast<std::size_t>(j)];
        }
        w[static_cast<std::size_t>(i)] = v * acc;
    }
    return w;
}

double outer_deriv(const std::function<double(const double*)>& w, const double* x, int n, int axis,
                   double step) {
    std::array<double, kMaxDim> y{};
    for (int a = 0; a < n; ++a) y[static_cast<std::size_t>(a)] = x[a];
    auto at = [&](double s) {
        y[static_cast<std::size_t>(axis)] = x[axis] + s;
        const double val = w(y.data());
        y[static_cast<std::size_t>(axis)] = x[axis];
        return val;
    };
    auto central4 = [&](double s) {
        return (-at(2.0 * s) + 8.0 * at(s) - 8.0 * at(-s) + at(-2.0 * s)) / (12.0 * s);
    };
    const double d1 = central4(step);
    const double d2 = central4(0.5 * step);
    return (16.0 * d2 - d1) / 15.0;  // one Richardson step
}

} // namespace

double laplace_beltrami(const Potential& u, const ScalarOnBase& f, const double* x) {
    const int n = u.n;
    double norm = 0.0;
    for (int a = 0; a < n; ++a) norm += x[a] * x[a];
    const double step = 1e-3 * (1.0 + std::sqrt(norm));

    double div = 0.0;
    for (int i = 0; i < n; ++i) {
        auto wi = [&](const double* y) { return inner_field(u, f, y)[static_cast<std::size_t>(i)]; };
        div += outer_deriv(wi, x, n, i, step);
    }
    const SymMatrix m = hess_of(u, x);
    const Spectrum s = eig_sym(m);
    double v = 1.0;
    for (int i = 0; i < n; ++i) {
        const double li = s.lambda[static_cast<std::size_t>(i)];
        v *= std::sqrt(1.0 + li * li);
    }
    return div / v;
}

double laplace_beltrami_grid(const ScalarField& u, const ScalarOnBase& f,
                             const std::array<int, 3>& idx) {
    const Grid& g = u.grid;
    if (!g.is_interior(idx, 2)) throw ConfigError("laplace_beltrami_grid: margin violation");
    const int n = g.n;

    auto w_at = [&](const std::array<int, 3>& node, int i) {
        SymMatrix m(n);
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) m.set(a, b, deriv2(u, node, a, b));
        const Spectrum s = eig_sym(m);
        double v = 1.0;
        for (int q = 0; q < n; ++q) {
            const double lq = s.lambda[static_cast<std::size_t>(q)];
            v *= std::sqrt(1.0 + lq * lq);
        }
        const auto x = g.coord(node);
        const auto df = f.gradient(x.data());
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            double gij = 0.0;
            for (int q = 0; q < n; ++q) {
                const double lq = s.lambda[static_cast<std::size_t>(q)];
                gij += s.gamma(i, q) * s.gamma(j, q) / (1.0 + lq * lq);
            }
            acc += gij * df[static_cast<std::size_t>(j)];
        }
        return v * acc;
    };

    double div = 0.0;
    for (int i = 0; i < n; ++i) {
        std::array<int, 3> p = idx, q = idx;
        p[static_cast<std::size_t>(i)] += 1;
        q[static_cast<std::size_t>(i)] -= 1;
        div += (w_at(p, i) - w_at(q, i)) / (2.0 * g.h[static_cast<std::size_t>(i)]);
    }

    SymMatrix m(n);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) m.set(a, b, deriv2(u, idx, a, b));
    const Spectrum s = eig_sym(m);
    double v = 1.0;
    for (int q = 0; q < n; ++q) {
        const double lq = s.lambda[static_cast<std::size_t>(q)];
        v *= std::sqrt(1.0 + lq * lq);
    }
    return div / v;
}

double log_vm(const Spectrum& s, int m) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        const double li = s.lambda[static_cast<std::size_t>(i)];
        acc += 0.5 * std::log(1.0 + li * li);
    }
    return acc;
}

std::array<double, kMaxDim> log_vm_gradient(const Potential& u, const double* x, int m) {
    const int n = u.n;
    const SymMatrix hess = hess_of(u, x);
    const SymTensor3 d3 = tensor3_of(u, x);
    const Spectrum s = eig_sym(hess);
    std::array<double, kMaxDim> grad{};
    for (int j = 0; j < n; ++j) {
        const SymMatrix mj = deriv_of_hessian(n, d3, j);
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
            const auto gi = s.column(i);
            const double dli = mj.quad(gi, gi);
            const double li = s.lambda[static_cast<std::size_t>(i)];
            acc += li * dli / (1.0 + li * li);
        }
        grad[static_cast<std::size_t>(j)] = acc;
    }
    return grad;
}

double delta_log_vm_rhs(const GraphGeometry& gg, const ThetaJets& tj, int m) {
    const int n = gg.n;
    const auto& l = gg.spectrum.lambda;
    const auto& h = gg.h;
    auto L = [&](int i) { return l[static_cast<std::size_t>(i)]; };

    double rhs = 0.0;
    // pure and paired terms within the top block
    for (int k = 0; k < m; ++k) rhs += (1.0 + L(k) * L(k)) * h(k, k, k) * h(k, k, k);
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k) {
            if (i == k) continue;
            rhs += (3.0 + L(i) * L(i) + 2.0 * L(i) * L(k)) * h(i, i, k) * h(i, i, k);
        }
    // mixed blocks
    for (int k = 0; k < m; ++k)
        for (int ll = m; ll < n; ++ll)
            rhs += 2.0 * L(k) * (1.0 + L(k) * L(ll)) / (L(k) - L(ll)) * h(ll, ll, k) * h(ll, ll, k);
    for (int ll = 0; ll < m; ++ll)
        for (int k = m; k < n; ++k)
            rhs += (3.0 * L(ll) - L(k) + L(ll) * L(ll) * (L(ll) + L(k))) / (L(ll) - L(k)) *
                   h(ll, ll, k) * h(ll, ll, k);
    // distinct triples
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                const double hij2 = h(i, j, k) * h(i, j, k);
                if (k < m) {
                    rhs += 2.0 * (3.0 + L(i) * L(j) + L(j) * L(k) + L(k) * L(i)) * hij2;
                } else if (j < m) {  // i < j <= m < k
                    rhs += 2.0 *
                           (1.0 + L(i) * L(j) + L(i) * L(k) + L(j) * L(k) +
                            L(i) * (1.0 + L(k) * L(k)) / (L(i) - L(k)) +
                            L(j) * (1.0 + L(k) * L(k)) / (L(j) - L(k))) *
                           hij2;
                } else if (i < m) {  // i <= m < j < k
                    rhs += 2.0 * L(i) *
                           (L(j) + L(k) + (1.0 + L(j) * L(j)) / (L(i) - L(j)) +
                            (1.0 + L(k) * L(k)) / (L(i) - L(k))) *
                           hij2;
                }
            }
    // phase terms: the Hessian term runs over the top block, the gradient
    // term over every direction (the derivation forces the full range; with
    // it the two independent evaluation routes agree to round-off)
    for (int i = 0; i < m; ++i) {
        const auto gi = gg.spectrum.column(i);
        rhs += L(i) / (1.0 + L(i) * L(i)) * tj.hess.quad(gi, gi);
    }
    for (int i = 0; i < n; ++i) {
        const auto gi = gg.spectrum.column(i);
        double th_g = 0.0;
        for (int r = 0; r < n; ++r) th_g += gi[static_cast<std::size_t>(r)] * tj.grad[static_cast<std::size_t>(r)];
        double d_logvm = 0.0;  // D_{gamma_i} log v_m = sqrt(1+l_i^2) sum_{j<m} l_j h_jji
        for (int j = 0; j < m; ++j) d_logvm += L(j) * h(j, j, i);
        d_logvm *= std::sqrt(1.0 + L(i) * L(i));
        rhs -= L(i) / (1.0 + L(i) * L(i)) * th_g * d_logvm;
    }
    return rhs;
}

double delta_log_v1_rhs_n2(const GraphGeometry& gg, const ThetaJets& tj) {
    const double l1 = gg.spectrum.lambda[0];
    const double l2 = gg.spectrum.lambda[1];
    const auto& h = gg.h;
    const auto g1 = gg.spectrum.column(0);
    const auto g2 = gg.spectrum.column(1);
    const double th_gg = tj.hess.quad(g1, g1);
    double th_g1 = 0.0, th_g2 = 0.0;
    for (int r = 0; r < 2; ++r) {
        th_g1 += g1[static_cast<std::size_t>(r)] * tj.grad[static_cast<std::size_t>(r)];
        th_g2 += g2[static_cast<std::size_t>(r)] * tj.grad[static_cast<std::size_t>(r)];
    }
    const double d1_logv1 = std::sqrt(1.0 + l1 * l1) * (l1 * h(0, 0, 0));
    const double d2_logv1 = std::sqrt(1.0 + l2 * l2) * (l1 * h(0, 0, 1));
    return (1.0 + l1 * l1) * h(0, 0, 0) * h(0, 0, 0) +
           2.0 * l1 * (1.0 + l1 * l2) / (l1 - l2) * h(0, 1, 1) * h(0, 1, 1) +
           (3.0 * l1 - l2 + l1 * l1 * (l1 + l2)) / (l1 - l2) * h(0, 0, 1) * h(0, 0, 1) +
           l1 / (1.0 + l1 * l1) * th_gg - l1 / (1.0 + l1 * l1) * th_g1 * d1_logv1 -
           l2 / (1.0 + l2 * l2) * th_g2 * d2_logv1;
}

std::array<double, kMaxDim> jacobi_Tk(const GraphGeometry& gg, int m) {
    const int n = gg.n;
    const auto& h = gg.h;
    auto L = [&](int i) { return gg.spectrum.lambda[static_cast<std::size_t>(i)]; };
    std::array<double, kMaxDim> tk{};
    for (int k = 0; k < n; ++k) {
        double t = 0.0;
        if (k < m) {
            t += (1.0 + L(k) * L(k)) * h(k, k, k) * h(k, k, k);
            for (int i = 0; i < m; ++i) {
                if (i == k) continue;
                t += (3.0 + L(i) * L(i) + 2.0 * L(i) * L(k)) * h(i, i, k) * h(i, i, k);
            }
            for (int ll = m; ll < n; ++ll)
                t += 2.0 * L(k) * (1.0 + L(k) * L(ll)) / (L(k) - L(ll)) * h(ll, ll, k) * h(ll, ll, k);
        } else {
            for (int i = 0; i < m; ++i)
                t += (3.0 * L(i) - L(k) + L(i) * L(i) * (L(i) + L(k))) / (L(i) - L(k)) *
                     h(i, i, k) * h(i, i, k);
        }
        tk[static_cast<std::size_t>(k)] = t;
    }
    return tk;
}

namespace {

// RHS of the single-(l,k) divergence identity
double pjlalvggl_rhs(const GraphGeometry& gg, int l, int k) {
    const int n = gg.n;
    const auto& h = gg.h;
    auto L = [&](int i) { return gg.spectrum.lambda[static_cast<std::size_t>(i)]; };
    const double ll = L(l);
    const double sq = std::sqrt(1.0 + ll * ll);
    const double gkl = gg.spectrum.gamma(k, l);
    double term1 = (1.0 - ll * ll) / sq * gg.v * gkl * h(l, l, l);
    double s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i != l) {
            s2 += (1.0 + L(i) * L(i)) / (ll - L(i)) * h(i, i, l);
            s4 += ll / (ll - L(i)) * std::sqrt(1.0 + L(i) * L(i)) * h(l, l, i) * gg.spectrum.gamma(k, i);
        }
        s3 += L(i) * h(i, i, l);
    }
    return term1 + ll * gg.v * gkl / sq * s2 + ll * gg.v * gkl / sq * s3 + gg.v * s4;
}

// (1/v) sum_{i<m} sum_{j,k} d_j(lambda_i theta_k v g_ji g_ki/(1+lambda_i^2))
double divergence_with_theta(const GraphGeometry& gg, const ThetaJets& tj, int m) {
    const int n = gg.n;
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < n; ++k)
            acc += tj.grad[static_cast<std::size_t>(k)] * pjlalvggl_rhs(gg, i, k) / gg.v;
        const auto gi = gg.spectrum.column(i);
        const double li = gg.spectrum.lambda[static_cast<std::size_t>(i)];
        acc += li / (1.0 + li * li) * tj.hess.quad(gi, gi);
    }
    return acc;
}

double grad_log_vm_sq(const GraphGeometry& gg, int m) {
    // |grad^L log v_m|^2 = sum_j ( sum_{i<m} lambda_i h_iij )^2
    double acc = 0.0;
    for (int j = 0; j < gg.n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += gg.spectrum.lambda[static_cast<std::size_t>(i)] * gg.h(i, i, j);
        acc += s * s;
    }
    return acc;
}

} // namespace

JacobiReport jacobi_identity_report(const Potential& u, int m, const double* x) {
    const int n = u.n;
    if (m < 1 || m > n) throw Error("jacobi_identity_report: m out of range");
    const SymMatrix hess = hess_of(u, x);
    const SymTensor3 d3 = tensor3_of(u, x);
    const Spectrum s = eig_sym(hess);
    if (s.gap <= 1e-6) throw EigGapTooSmall("jacobi_identity_report: eigen gap <= 1e-6");
    const GraphGeometry gg = geometry_at(n, grad_of(u, x), hess, d3);
    const ThetaJets tj = theta_jets(u, x);

    JacobiReport rep;
    for (int a = 0; a < n; ++a) rep.point[static_cast<std::size_t>(a)] = x[a];
    rep.m = m;

    ScalarOnBase f;
    const Potential uc = u;  // capture by value
    f.value = [uc, m](const double* y) { return log_vm(eig_sym(hess_of(uc, y)), m); };
    f.gradient = [uc, m](const double* y) { return log_vm_gradient(uc, y, m); };
    rep.lhs = laplace_beltrami(u, f, x);
    rep.rhs_identity = delta_log_vm_rhs(gg, tj, m);
    rep.Tk = jacobi_Tk(gg, m);
    rep.gradient_term = grad_log_vm_sq(gg, m);
    rep.divergence_term = divergence_with_theta(gg, tj, m);
    rep.residual = std::fabs(rep.lhs - rep.rhs_identity);
    return rep;
}

double jacobi_inequality_margin(const Potential& u, int m, const double* x, double delta,
                                double Lambda) {
    const int n = u.n;
    if (m < 1 || m > n - 1) throw Error("jacobi_inequality_margin: m out of range");
    const SymMatrix hess = hess_of(u, x);
    const SymTensor3 d3 = tensor3_of(u, x);
    const Spectrum s = eig_sym(hess);
    if (s.gap <= 1e-8) throw DegenerateSpectrum("jacobi_inequality_margin: degenerate spectrum");
    const double lm = s.lambda[static_cast<std::size_t>(m - 1)];
    const double lm1 = s.lambda[static_cast<std::size_t>(m)];
    if (!(lm / 2.0 >= lm1) || !(lm1 >= 1.0))
        throw ConstraintViolated("jacobi_inequality_margin: lambda_m/2 >= lambda_{m+1} >= 1 fails");
    const ThetaJets tj = theta_jets(u, x);
    double dnorm = 0.0;
    for (int a = 0; a < n; ++a) dnorm += tj.grad[static_cast<std::size_t>(a)] * tj.grad[static_cast<std::size_t>(a)];
    if (Lambda * Lambda < dnorm)
        throw ConstraintViolated("jacobi_inequality_margin: Lambda < |Dtheta| at point");
    const GraphGeometry gg = geometry_at(n, grad_of(u, x), hess, d3);

    const double lhs = delta_log_vm_rhs(gg, tj, m) - delta * grad_log_vm_sq(gg, m);
    const double rhs = divergence_with_theta(gg, tj, m) - Lambda * Lambda / delta;
    return lhs - rhs;
}

double jacobi_inequality_margin_full(const Potential& u, const double* x, double delta_star,
                                     double Lambda, double tau) {
    const int n = u.n;
    const SymMatrix hess = hess_of(u, x);
    const SymTensor3 d3 = tensor3_of(u, x);
    const Spectrum s = eig_sym(hess);
    if (s.gap <= 1e-8) throw DegenerateSpectrum("jacobi_inequality_margin_full: degenerate spectrum");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConstraintViolated("jacobi_inequality_margin_full: tau outside (0,1]");
    if (!(s.lambda[static_cast<std::size_t>(n - 2)] >= 2.0 * n * n / tau) ||
        !(s.lambda[static_cast<std::size_t>(n - 1)] >= -1.0 / tau))
        throw ConstraintViolated("jacobi_inequality_margin_full: eigenvalue hypothesis fails");
    const ThetaJets tj = theta_jets(u, x);
    const GraphGeometry gg = geometry_at(n, grad_of(u, x), hess, d3);

    const double lhs = delta_log_vm_rhs(gg, tj, n) - delta_star * grad_log_vm_sq(gg, n);
    // (1/v) sum_ijk d_j(v g^{ij} u_ik theta_k)
    double div = 0.0;
    for (int j = 0; j < n; ++j) {
        const auto gj = gg.spectrum.column(j);
        double th_gj = 0.0;
        for (int r = 0; r < n; ++r) th_gj += gj[static_cast<std::size_t>(r)] * tj.grad[static_cast<std::size_t>(r)];
        double trj = 0.0;
        for (int i = 0; i < n; ++i) trj += gg.h(i, i, j);
        const double lj = gg.spectrum.lambda[static_cast<std::size_t>(j)];
        div += trj * th_gj / std::sqrt(1.0 + lj * lj);
        div += lj / (1.0 + lj * lj) * tj.hess.quad(gj, gj);
    }
    const double rhs = div - Lambda * Lambda / delta_star;
    return lhs - rhs;
}

double divergence_identity_residual(const Potential& u, int l, int k, const double* x) {
    const int n = u.n;
    const SymMatrix hess = hess_of(u, x);
    const SymTensor3 d3 = tensor3_of(u, x);
    const Spectrum s = eig_sym(hess);
    if (s.gap <= 1e-8) throw DegenerateSpectrum("divergence_identity_residual: degenerate spectrum");
    const GraphGeometry gg = geometry_at(n, grad_of(u, x), hess, d3);

    // LHS via the eigen-derivative chain rule
    double lhs = 0.0;
    const double ll = s.lambda[static_cast<std::size_t>(l)];
    for (int j = 0; j < n; ++j) {
        const SymMatrix mj = deriv_of_hessian(n, d3, j);
        const EigenDerivative ed = eigen_derivative(s, mj);
        double dv = 0.0;
        for (int i = 0; i < n; ++i) {
            const double li = s.lambda[static_cast<std::size_t>(i)];
            dv += li * ed.dlambda[static_cast<std::size_t>(i)] / (1.0 + li * li);
        }
        dv *= gg.v;
        const double dll = ed.dlambda[static_cast<std::size_t>(l)];
        const double gjl = s.gamma(j, l), gkl = s.gamma(k, l);
        const double dgjl = ed.dgamma(j, l), dgkl = ed.dgamma(k, l);
        const double c = 1.0 + ll * ll;
        lhs += (1.0 - ll * ll) / (c * c) * dll * gg.v * gjl * gkl +
               ll / c * (dv * gjl * gkl + gg.v * dgjl * gkl + gg.v * gjl * dgkl);
    }
    return std::fabs(lhs - pjlalvggl_rhs(gg, l, k));
}

double vlai_residual(const double* lambda, int n) {
    double v = 1.0, theta = 0.0;
    for (int i = 0; i < n; ++i) {
        v *= std::sqrt(1.0 + lambda[i] * lambda[i]);
        theta += std::atan(lambda[i]);
    }
    double lhs = 0.0;
    for (int i = 0; i < n; ++i) lhs += v / (1.0 + lambda[i] * lambda[i]);
    const auto sig = sigma_all(lambda, n);
    double even = 0.0;  // sum over 2k+1 <= n of (-1)^k (n-2k) sigma_{2k}
    for (int k = 0; 2 * k + 1 <= n; ++k)
        even += ((k % 2) ? -1.0 : 1.0) * (n - 2 * k) * sig[static_cast<std::size_t>(2 * k)];
    double odd = 0.0;  // sum over 1 <= 2k <= n of (-1)^k (n-2k+1) sigma_{2k-1}
    for (int k = 1; 2 * k <= n; ++k)
        odd += ((k % 2) ? -1.0 : 1.0) * (n - 2 * k + 1) * sig[static_cast<std::size_t>(2 * k - 1)];
    const double rhs = std::cos(theta) * even - std::sin(theta) * odd;
    return std::fabs(lhs - rhs) / std::fmax(1.0, std::fabs(lhs));
}

double graph_area(const ScalarField& u, const Box& region, Exec exec) {
    const Grid& g = u.grid;
    std::array<int, 3> imin{}, imax{};
    for (int a = 0; a < g.n; ++a) {
        const double h = g.h[static_cast<std::size_t>(a)];
        const double t0 = (region.lo[static_cast<std::size_t>(a)] - g.lo[static_cast<std::size_t>(a)]) / h;
        const double t1 = (region.hi[static_cast<std::size_t>(a)] - g.lo[static_cast<std::size_t>(a)]) / h;
        imin[static_cast<std::size_t>(a)] = static_cast<int>(std::ceil(t0 - 1e-9));
        imax[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(t1 + 1e-9));
        if (imin[static_cast<std::size_t>(a)] < 0 || imax[static_cast<std::size_t>(a)] > g.resolution - 1)
            throw ConfigError("graph_area: region out of grid bounds");
        if (imax[static_cast<std::size_t>(a)] <= imin[static_cast<std::size_t>(a)])
            throw ConfigError("graph_area: empty region");
    }
    const MatrixField hess_f = hessian(u, exec);
    const std::size_t count = g.num_nodes();
    double cell = 1.0;
    for (int a = 0; a < g.n; ++a) cell *= g.h[static_cast<std::size_t>(a)];
    const double sum = ordered_sum(static_cast<std::ptrdiff_t>(count), exec, [&](std::ptrdiff_t node) {
        const auto idx = g.unindex(static_cast<std::size_t>(node));
        double w = 1.0;
        for (int a = 0; a < g.n; ++a) {
            const int i = idx[static_cast<std::size_t>(a)];
            if (i < imin[static_cast<std::size_t>(a)] || i > imax[static_cast<std::size_t>(a)]) return 0.0;
            if (i == imin[static_cast<std::size_t>(a)] || i == imax[static_cast<std::size_t>(a)]) w *= 0.5;
        }
        const Spectrum s = eig_sym(hess_f.get(static_cast<std::size_t>(node)));
        double v = 1.0;
        for (int q = 0; q < g.n; ++q) {
            const double lq = s.lambda[static_cast<std::size_t>(q)];
            v *= std::sqrt(1.0 + lq * lq);
        }
        return w * v;
    });
    return sum * cell;
}

} // namespace lmce
