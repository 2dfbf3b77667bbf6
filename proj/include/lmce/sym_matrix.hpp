#pragma once

#include <array>
#include <cmath>
#include <cassert>
#include <initializer_list>

#include "lmce/errors.hpp"

namespace lmce {

inline constexpr int kMaxDim = 8;

// Dense n x n matrix, n <= 8, row-major. Working type for products whose
// intermediates are not symmetric.
class SmallMatrix {
public:
    SmallMatrix() : n_(0), a_{} {}
    explicit SmallMatrix(int n) : n_(n), a_{} { assert(n >= 1 && n <= kMaxDim); }

    static SmallMatrix identity(int n) {
        SmallMatrix m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int dim() const { return n_; }
    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * n_ + j)]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * n_ + j)]; }

    SmallMatrix operator*(const SmallMatrix& o) const {
        assert(n_ == o.n_);
        SmallMatrix r(n_);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k) {
                const double aik = (*this)(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < n_; ++j) r(i, j) += aik * o(k, j);
            }
        return r;
    }

    SmallMatrix operator+(const SmallMatrix& o) const {
        SmallMatrix r(n_);
        for (int i = 0; i < n_ * n_; ++i) r.a_[static_cast<std::size_t>(i)] =
            a_[static_cast<std::size_t>(i)] + o.a_[static_cast<std::size_t>(i)];
        return r;
    }
    SmallMatrix operator-(const SmallMatrix& o) const {
        SmallMatrix r(n_);
        for (int i = 0; i < n_ * n_; ++i) r.a_[static_cast<std::size_t>(i)] =
            a_[static_cast<std::size_t>(i)] - o.a_[static_cast<std::size_t>(i)];
        return r;
    }

    SmallMatrix transposed() const {
        SmallMatrix r(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

    double max_abs() const {
        double m = 0.0;
        for (int i = 0; i < n_ * n_; ++i) m = std::fmax(m, std::fabs(a_[static_cast<std::size_t>(i)]));
        return m;
    }

    // Solves (*this) X = B in place via Gaussian elimination with partial
    // pivoting. Throws SingularJacobian when a pivot collapses.
    SmallMatrix solve(const SmallMatrix& b) const;
    std::array<double, kMaxDim> solve_vec(const std::array<double, kMaxDim>& rhs) const;

private:
    int n_;
    std::array<double, kMaxDim * kMaxDim> a_;
};

// Symmetric n x n matrix, n in [2, 8]; only the upper triangle is stored, so
// symmetry is exact by construction.
class SymMatrix {
public:
    SymMatrix() : n_(0), a_{} {}
    explicit SymMatrix(int n) : n_(n), a_{} { assert(n >= 1 && n <= kMaxDim); }

    static SymMatrix identity(int n) {
        SymMatrix m(n);
        for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
        return m;
    }
    static SymMatrix diag(std::initializer_list<double> d) {
        SymMatrix m(static_cast<int>(d.size()));
        int i = 0;
        for (double v : d) { m.set(i, i, v); ++i; }
        return m;
    }
    template <typename Seq>
    static SymMatrix diag_seq(const Seq& d, int n) {
        SymMatrix m(n);
        for (int i = 0; i < n; ++i) m.set(i, i, d[static_cast<std::size_t>(i)]);
        return m;
    }
    static SymMatrix from_dense_symmetrized(const SmallMatrix& d) {
        SymMatrix m(d.dim());
        for (int i = 0; i < d.dim(); ++i)
            for (int j = i; j < d.dim(); ++j) m.set(i, j, 0.5 * (d(i, j) + d(j, i)));
        return m;
    }

    int dim() const { return n_; }

    double operator()(int i, int j) const { return a_[idx(i, j)]; }
    void set(int i, int j, double v) { a_[idx(i, j)] = v; }
    void add(int i, int j, double v) { a_[idx(i, j)] += v; }

    SmallMatrix dense() const {
        SmallMatrix d(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) d(i, j) = (*this)(i, j);
        return d;
    }

    SymMatrix operator+(const SymMatrix& o) const {
        SymMatrix r(n_);
        for (std::size_t k = 0; k < packed_size(); ++k) r.a_[k] = a_[k] + o.a_[k];
        return r;
    }
    SymMatrix operator-(const SymMatrix& o) const {
        SymMatrix r(n_);
        for (std::size_t k = 0; k < packed_size(); ++k) r.a_[k] = a_[k] - o.a_[k];
        return r;
    }
    SymMatrix operator*(double s) const {
        SymMatrix r(n_);
        for (std::size_t k = 0; k < packed_size(); ++k) r.a_[k] = a_[k] * s;
        return r;
    }

    double max_abs() const {
        double m = 0.0;
        for (std::size_t k = 0; k < packed_size(); ++k) m = std::fmax(m, std::fabs(a_[k]));
        return m;
    }
    double frob_norm() const {
        double s = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) s += (*this)(i, j) * (*this)(i, j);
        return std::sqrt(s);
    }

    // quadratic form <x, A y>
    template <typename V1, typename V2>
    double quad(const V1& x, const V2& y) const {
        double s = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) s += x[static_cast<std::size_t>(i)] * (*this)(i, j) * y[static_cast<std::size_t>(j)];
        return s;
    }

private:
    std::size_t packed_size() const { return static_cast<std::size_t>(n_ * (n_ + 1) / 2); }
    std::size_t idx(int i, int j) const {
        if (i > j) { const int t = i; i = j; j = t; }
        return static_cast<std::size_t>(i * n_ - i * (i - 1) / 2 + (j - i));
    }

    int n_;
    std::array<double, kMaxDim*(kMaxDim + 1) / 2> a_;
};

inline SmallMatrix SmallMatrix::solve(const SmallMatrix& b) const {
    const int n = n_;
    SmallMatrix a = *this;
    SmallMatrix x = b;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
        if (std::fabs(a(piv, col)) < 1e-300)
            throw SingularJacobian("matrix solve: zero pivot");
        if (piv != col) {
            for (int j = 0; j < n; ++j) { std::swap(a(col, j), a(piv, j)); std::swap(x(col, j), x(piv, j)); }
        }
        const double d = a(col, col);
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col) / d;
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            for (int j = 0; j < n; ++j) x(r, j) -= f * x(col, j);
        }
    }
    for (int i = 0; i < n; ++i) {
        const double d = a(i, i);
        for (int j = 0; j < n; ++j) x(i, j) /= d;
    }
    return x;
}

inline std::array<double, kMaxDim> SmallMatrix::solve_vec(const std::array<double, kMaxDim>& rhs) const {
    SmallMatrix b(n_);
    for (int i = 0; i < n_; ++i) b(i, 0) = rhs[static_cast<std::size_t>(i)];
    SmallMatrix x = solve(b);
    std::array<double, kMaxDim> out{};
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = x(i, 0);
    return out;
}

} // namespace lmce
