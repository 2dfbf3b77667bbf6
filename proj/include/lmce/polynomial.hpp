#pragma once

#include <array>
#include <vector>

#include "lmce/sym_matrix.hpp"
#include "lmce/rng.hpp"

namespace lmce {

// Multivariate polynomial up to total degree 6 with an optional center shift;
// all partial derivatives of every order are exact. This is the oracle
// generator for the identity tests: stencils are checked against it, and the
// graph-geometry identities are evaluated on it analytically.
class PolynomialTestFunction {
public:
    struct Term {
        double coef;
        std::array<int, kMaxDim> exp;
    };

    PolynomialTestFunction() : n_(0) {}
    explicit PolynomialTestFunction(int n) : n_(n) {}

    int dim() const { return n_; }
    void set_center(const std::array<double, kMaxDim>& c) { center_ = c; }
    const std::array<double, kMaxDim>& center() const { return center_; }

    void add_term(double coef, const std::array<int, kMaxDim>& exp) {
        int deg = 0;
        for (int a = 0; a < n_; ++a) deg += exp[static_cast<std::size_t>(a)];
        if (deg > 6) throw Error("polynomial: total degree > 6");
        terms_.push_back({coef, exp});
    }

    const std::vector<Term>& terms() const { return terms_; }

    double eval(const double* x) const {
        std::array<int, kMaxDim> zero{};
        return eval_deriv(x, zero);
    }

    // D^alpha at x (falling factorials on the exponents); exact.
    double eval_deriv(const double* x, const std::array<int, kMaxDim>& alpha) const {
        double acc = 0.0;
        for (const Term& t : terms_) {
            double v = t.coef;
            bool dead = false;
            for (int a = 0; a < n_ && !dead; ++a) {
                const int e = t.exp[static_cast<std::size_t>(a)];
                const int d = alpha[static_cast<std::size_t>(a)];
                if (d > e) { dead = true; break; }
                double fall = 1.0;
                for (int q = 0; q < d; ++q) fall *= (e - q);
                v *= fall;
                const int rem = e - d;
                const double y = x[a] - center_[static_cast<std::size_t>(a)];
                for (int q = 0; q < rem; ++q) v *= y;
            }
            if (!dead) acc += v;
        }
        return acc;
    }

    std::array<double, kMaxDim> gradient(const double* x) const {
        std::array<double, kMaxDim> g{};
        std::array<int, kMaxDim> a{};
        for (int i = 0; i < n_; ++i) {
            a[static_cast<std::size_t>(i)] = 1;
            g[static_cast<std::size_t>(i)] = eval_deriv(x, a);
            a[static_cast<std::size_t>(i)] = 0;
        }
        return g;
    }

    SymMatrix hessian(const double* x) const {
        SymMatrix m(n_);
        std::array<int, kMaxDim> a{};
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j) {
                a[static_cast<std::size_t>(i)] += 1;
                a[static_cast<std::size_t>(j)] += 1;
                m.set(i, j, eval_deriv(x, a));
                a[static_cast<std::size_t>(i)] = 0;
                a[static_cast<std::size_t>(j)] = 0;
            }
        return m;
    }

    double third(const double* x, int i, int j, int k) const {
        std::array<int, kMaxDim> a{};
        a[static_cast<std::size_t>(i)] += 1;
        a[static_cast<std::size_t>(j)] += 1;
        a[static_cast<std::size_t>(k)] += 1;
        return eval_deriv(x, a);
    }

    double fourth(const double* x, int i, int j, int k, int l) const {
        std::array<int, kMaxDim> a{};
        a[static_cast<std::size_t>(i)] += 1;
        a[static_cast<std::size_t>(j)] += 1;
        a[static_cast<std::size_t>(k)] += 1;
        a[static_cast<std::size_t>(l)] += 1;
        return eval_deriv(x, a);
    }

    // Random polynomial of the given total degree; coefficient magnitude
    // decays with degree so quartics stay tame on the unit box.
    static PolynomialTestFunction random(int n, int degree, Rng& rng, double scale = 1.0);

    // Polynomial with prescribed 2-jet and 3-jet at `center` plus a random
    // small quartic tail: the constrained-sample builder for the Jacobi
    // inequality checks.
    static PolynomialTestFunction from_jets(int n, const std::array<double, kMaxDim>& center,
                                            const SymMatrix& hess, Rng& rng,
                                            double third_scale, double fourth_scale);

private:
    static void enumerate(int n, int degree, std::array<int, kMaxDim>& cur, int axis, int left,
                          std::vector<std::array<int, kMaxDim>>& out);

    int n_;
    std::array<double, kMaxDim> center_{};
    std::vector<Term> terms_;
};

} // namespace lmce
