#include "lmce/stencil.hpp"

namespace lmce {

namespace {

inline std::size_t shift(const Grid& g, const std::array<int, 3>& idx, int axis, int by) {
    std::array<int, 3> j = idx;
    j[static_cast<std::size_t>(axis)] += by;
    return g.index(j);
}

} // namespace

double deriv1(const ScalarField& f, const std::array<int, 3>& idx, int axis) {
    const Grid& g = f.grid;
    const double h = g.h[static_cast<std::size_t>(axis)];
    const int i = idx[static_cast<std::size_t>(axis)];
    if (i == 0)
        return (-3.0 * f[g.index(idx)] + 4.0 * f[shift(g, idx, axis, 1)] - f[shift(g, idx, axis, 2)]) / (2.0 * h);
    if (i == g.resolution - 1)
        return (3.0 * f[g.index(idx)] - 4.0 * f[shift(g, idx, axis, -1)] + f[shift(g, idx, axis, -2)]) / (2.0 * h);
    return (f[shift(g, idx, axis, 1)] - f[shift(g, idx, axis, -1)]) / (2.0 * h);
}

double deriv2(const ScalarField& f, const std::array<int, 3>& idx, int a, int b) {
    const Grid& g = f.grid;
    if (a == b) {
        const double h = g.h[static_cast<std::size_t>(a)];
        const int i = idx[static_cast<std::size_t>(a)];
        if (i == 0)
            return (2.0 * f[g.index(idx)] - 5.0 * f[shift(g, idx, a, 1)] + 4.0 * f[shift(g, idx, a, 2)] -
                    f[shift(g, idx, a, 3)]) / (h * h);
        if (i == g.resolution - 1)
            return (2.0 * f[g.index(idx)] - 5.0 * f[shift(g, idx, a, -1)] + 4.0 * f[shift(g, idx, a, -2)] -
                    f[shift(g, idx, a, -3)]) / (h * h);
        return (f[shift(g, idx, a, 1)] - 2.0 * f[g.index(idx)] + f[shift(g, idx, a, -1)]) / (h * h);
    }
    const double ha = g.h[static_cast<std::size_t>(a)];
    const double hb = g.h[static_cast<std::size_t>(b)];
    // cross derivative; use one-sided first-derivative rows near the boundary
    const int ia = idx[static_cast<std::size_t>(a)];
    if (ia > 0 && ia < g.resolution - 1) {
        std::array<int, 3> p = idx, m = idx;
        p[static_cast<std::size_t>(a)] += 1;
        m[static_cast<std::size_t>(a)] -= 1;
        return (deriv1(f, p, b) - deriv1(f, m, b)) / (2.0 * ha);
    }
    const int dir = (ia == 0) ? 1 : -1;
    std::array<int, 3> p1 = idx, p2 = idx;
    p1[static_cast<std::size_t>(a)] += dir;
    p2[static_cast<std::size_t>(a)] += 2 * dir;
    (void)hb;
    return dir * (-3.0 * deriv1(f, idx, b) + 4.0 * deriv1(f, p1, b) - deriv1(f, p2, b)) / (2.0 * ha);
}

VectorField gradient(const ScalarField& f, Exec exec) {
    if (f.grid.resolution < 5) throw ConfigError("gradient: resolution too small");
    VectorField out(f.grid);
    const std::size_t count = f.grid.num_nodes();
    parallel_for(static_cast<std::ptrdiff_t>(count), exec, [&](std::ptrdiff_t node) {
        const auto idx = f.grid.unindex(static_cast<std::size_t>(node));
        for (int a = 0; a < f.grid.n; ++a)
            out.comp(static_cast<std::size_t>(node), a) = deriv1(f, idx, a);
    });
    return out;
}

MatrixField hessian(const ScalarField& f, Exec exec) {
    if (f.grid.resolution < 5) throw ConfigError("hessian: resolution too small");
    MatrixField out(f.grid);
    const std::size_t count = f.grid.num_nodes();
    parallel_for(static_cast<std::ptrdiff_t>(count), exec, [&](std::ptrdiff_t node) {
        const auto idx = f.grid.unindex(static_cast<std::size_t>(node));
        SymMatrix m(f.grid.n);
        for (int a = 0; a < f.grid.n; ++a)
            for (int b = a; b < f.grid.n; ++b) m.set(a, b, deriv2(f, idx, a, b));
        out.put(static_cast<std::size_t>(node), m);
        out.boundary_flag[static_cast<std::size_t>(node)] = f.grid.is_interior(idx, 1) ? 0 : 1;
    });
    return out;
}

int Tensor3Field::pack_index(int n, int i, int j, int k) {
    // sort (i, j, k) ascending
    if (i > j) std::swap(i, j);
    if (j > k) std::swap(j, k);
    if (i > j) std::swap(i, j);
    // position within the list of multisets {i<=j<=k}
    int idx = 0;
    for (int a = 0; a < i; ++a) idx += (n - a) * (n - a + 1) / 2;
    for (int b = i; b < j; ++b) idx += n - b;
    return idx + (k - j);
}

Tensor3Field third_derivatives(const ScalarField& f, Exec exec) {
    const Grid& g = f.grid;
    if (g.resolution < 7) throw ConfigError("third_derivatives: interior margin >= 2 requires resolution >= 7");
    Tensor3Field out(g);
    const std::size_t count = g.num_nodes();
    parallel_for(static_cast<std::ptrdiff_t>(count), exec, [&](std::ptrdiff_t node) {
        const auto idx = g.unindex(static_cast<std::size_t>(node));
        if (!g.is_interior(idx, 2)) return;
        out.valid[static_cast<std::size_t>(node)] = 1;
        for (int i = 0; i < g.n; ++i)
            for (int j = i; j < g.n; ++j)
                for (int k = j; k < g.n; ++k) {
                    double v;
                    if (i == j && j == k) {
                        const double h = g.h[static_cast<std::size_t>(i)];
                        v = (f[shift(g, idx, i, 2)] - 2.0 * f[shift(g, idx, i, 1)] +
                             2.0 * f[shift(g, idx, i, -1)] - f[shift(g, idx, i, -2)]) / (2.0 * h * h * h);
                    } else if (i == j) {  // d_ii d_k, k distinct
                        const double hk = g.h[static_cast<std::size_t>(k)];
                        std::array<int, 3> p = idx, m = idx;
                        p[static_cast<std::size_t>(k)] += 1;
                        m[static_cast<std::size_t>(k)] -= 1;
                        v = (deriv2(f, p, i, i) - deriv2(f, m, i, i)) / (2.0 * hk);
                    } else if (j == k) {  // d_jj d_i
                        const double hi = g.h[static_cast<std::size_t>(i)];
                        std::array<int, 3> p = idx, m = idx;
                        p[static_cast<std::size_t>(i)] += 1;
                        m[static_cast<std::size_t>(i)] -= 1;
                        v = (deriv2(f, p, j, j) - deriv2(f, m, j, j)) / (2.0 * hi);
                    } else {  // all distinct (n = 3)
                        const double hi = g.h[0], hj = g.h[1], hk = g.h[2];
                        double acc = 0.0;
                        for (int si = -1; si <= 1; si += 2)
                            for (int sj = -1; sj <= 1; sj += 2)
                                for (int sk = -1; sk <= 1; sk += 2) {
                                    std::array<int, 3> q = idx;
                                    q[0] += si; q[1] += sj; q[2] += sk;
                                    acc += si * sj * sk * f[g.index(q)];
                                }
                        v = acc / (8.0 * hi * hj * hk);
                    }
                    out.set(static_cast<std::size_t>(node), i, j, k, v);
                }
    });
    return out;
}

} // namespace lmce
