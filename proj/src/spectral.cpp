#include "lmce/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace lmce {

namespace {

constexpr double kPi = 3.14159265358979323846;

void sort_descending_with_vectors(Spectrum& s) {
    const int n = s.n;
    std::array<int, kMaxDim> order{};
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.begin() + n, [&](int a, int b) {
        return s.lambda[static_cast<std::size_t>(a)] > s.lambda[static_cast<std::size_t>(b)];
    });
    std::array<double, kMaxDim> l = s.lambda;
    SmallMatrix g = s.gamma;
    for (int c = 0; c < n; ++c) {
        const int src = order[static_cast<std::size_t>(c)];
        s.lambda[static_cast<std::size_t>(c)] = l[static_cast<std::size_t>(src)];
        for (int r = 0; r < n; ++r) s.gamma(r, c) = g(r, src);
    }
}

void fix_signs(Spectrum& s) {
    for (int c = 0; c < s.n; ++c) {
        int arg = 0;
        double best = 0.0;
        for (int r = 0; r < s.n; ++r) {
            const double a = std::fabs(s.gamma(r, c));
            if (a > best) { best = a; arg = r; }
        }
        if (s.gamma(arg, c) < 0.0)
            for (int r = 0; r < s.n; ++r) s.gamma(r, c) = -s.gamma(r, c);
    }
}

double offdiag_frob(const SmallMatrix& a) {
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

} // namespace

Spectrum eig_sym(const SymMatrix& m) {
    const int n = m.dim();
    Spectrum s;
    s.n = n;
    SmallMatrix a = m.dense();
    SmallMatrix v = SmallMatrix::identity(n);

    const double norm = std::fmax(m.frob_norm(), 1e-300);
    const double stop = 1e-14 * norm;

    for (int sweep = 0; sweep < 64 && offdiag_frob(a) > stop; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) <= 1e-2 * stop / (n * n)) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(tau * tau + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }

    for (int i = 0; i < n; ++i) s.lambda[static_cast<std::size_t>(i)] = a(i, i);
    s.gamma = v;
    sort_descending_with_vectors(s);
    fix_signs(s);
    s.gap = 1e300;
    for (int i = 0; i + 1 < n; ++i)
        s.gap = std::fmin(s.gap, s.lambda[static_cast<std::size_t>(i)] - s.lambda[static_cast<std::size_t>(i + 1)]);
    if (n == 1) s.gap = 1e300;
    return s;
}

double phase(const Spectrum& s) {
    double t = 0.0;
    for (int i = 0; i < s.n; ++i) t += std::atan(s.lambda[static_cast<std::size_t>(i)]);
    return t;
}

double phase_of(const SymMatrix& m) { return phase(eig_sym(m)); }

namespace {
SymMatrix apply_spectral_fn(const SymMatrix& m, double (*fn)(double)) {
    const Spectrum s = eig_sym(m);
    const int n = m.dim();
    SymMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k)
                acc += s.gamma(i, k) * fn(s.lambda[static_cast<std::size_t>(k)]) * s.gamma(j, k);
            out.set(i, j, acc);
        }
    return out;
}
} // namespace

SymMatrix arctan_matrix(const SymMatrix& m) { return apply_spectral_fn(m, [](double x) { return std::atan(x); }); }
SymMatrix tan_matrix(const SymMatrix& m) { return apply_spectral_fn(m, [](double x) { return std::tan(x); }); }

std::array<double, kMaxDim + 1> sigma_all(const double* lambda, int n) {
    std::array<double, kMaxDim + 1> s{};
    s[0] = 1.0;
    for (int m = 0; m < n; ++m) {
        const double lm = lambda[m];
        for (int k = m + 1; k >= 1; --k) s[static_cast<std::size_t>(k)] += lm * s[static_cast<std::size_t>(k - 1)];
    }
    return s;
}

double sigma_k(const double* lambda, int n, int k) {
    if (k < 0 || k > n) throw Error("sigma_k: k out of range");
    return sigma_all(lambda, n)[static_cast<std::size_t>(k)];
}

double dsigma_k(const double* lambda, int n, int k, int i) {
    if (k < 1 || k > n - 1) throw Error("dsigma_k: k out of range");
    if (i < 0 || i >= n) throw Error("dsigma_k: index out of range");
    std::array<double, kMaxDim> rest{};
    int m = 0;
    for (int j = 0; j < n; ++j)
        if (j != i) rest[static_cast<std::size_t>(m++)] = lambda[j];
    return sigma_all(rest.data(), n - 1)[static_cast<std::size_t>(k - 1)];
}

PhaseClass classify_phase(double theta, int n) {
    const double limit = n * kPi / 2.0;
    if (std::fabs(theta) >= limit) throw Error("classify_phase: |theta| >= n*pi/2");
    const double crit = (n - 2) * kPi / 2.0;
    PhaseClass pc;
    pc.theta = theta;
    pc.n = n;
    const double a = std::fabs(theta);
    if (std::fabs(a - crit) <= 1e-12) pc.range = PhaseRange::Critical;
    else if (a > crit) pc.range = PhaseRange::Supercritical;
    else pc.range = PhaseRange::Subcritical;
    return pc;
}

EigenDerivative eigen_derivative(const SymMatrix& m, const SymMatrix& dm) {
    return eigen_derivative(eig_sym(m), dm);
}

EigenDerivative eigen_derivative(const Spectrum& s, const SymMatrix& dm) {
    const int n = s.n;
    if (s.gap <= 1e-8)
        throw DegenerateSpectrum("eigen_derivative: eigenvalue gap <= 1e-8");
    EigenDerivative d;
    d.dgamma = SmallMatrix(n);
    // project dM into the eigenbasis once
    SmallMatrix b(n);  // b(i,l) = <gamma_i, dM gamma_l>
    for (int i = 0; i < n; ++i) {
        const auto gi = s.column(i);
        for (int l = 0; l < n; ++l) {
            const auto gl = s.column(l);
            b(i, l) = dm.quad(gi, gl);
        }
    }
    for (int l = 0; l < n; ++l) {
        d.dlambda[static_cast<std::size_t>(l)] = b(l, l);
        for (int r = 0; r < n; ++r) d.dgamma(r, l) = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == l) continue;
            const double c = b(i, l) / (s.lambda[static_cast<std::size_t>(l)] - s.lambda[static_cast<std::size_t>(i)]);
            for (int r = 0; r < n; ++r) d.dgamma(r, l) += c * s.gamma(r, i);
        }
    }
    return d;
}

std::array<double, kMaxDim> sample_supercritical_angles(int n, double target, Rng& rng, double edge) {
    const double hi = kPi / 2.0 - edge;
    std::array<double, kMaxDim> alpha{};
    double need = target;  // remaining sum requirement
    for (int i = 0; i < n; ++i) {
        const int remaining_after = n - 1 - i;
        // alpha_i must leave the rest able to reach `need`
        const double lo_bound = std::fmax(-hi, need - remaining_after * hi);
        if (lo_bound > hi) {
            // infeasible only if target itself exceeds n*hi; clamp to the edge
            alpha[static_cast<std::size_t>(i)] = hi;
            need -= hi;
            continue;
        }
        const double a = rng.uniform(lo_bound, hi);
        alpha[static_cast<std::size_t>(i)] = a;
        need -= a;
    }
    return alpha;
}

SmallMatrix random_orthogonal(int n, Rng& rng) {
    SmallMatrix q(n);
    for (int c = 0; c < n; ++c) {
        std::array<double, kMaxDim> v{};
        for (;;) {
            for (int r = 0; r < n; ++r) v[static_cast<std::size_t>(r)] = rng.normal();
            for (int prev = 0; prev < c; ++prev) {
                double dot = 0.0;
                for (int r = 0; r < n; ++r) dot += v[static_cast<std::size_t>(r)] * q(r, prev);
                for (int r = 0; r < n; ++r) v[static_cast<std::size_t>(r)] -= dot * q(r, prev);
            }
            double norm = 0.0;
            for (int r = 0; r < n; ++r) norm += v[static_cast<std::size_t>(r)] * v[static_cast<std::size_t>(r)];
            norm = std::sqrt(norm);
            if (norm > 1e-6) {
                for (int r = 0; r < n; ++r) q(r, c) = v[static_cast<std::size_t>(r)] / norm;
                break;
            }
        }
    }
    return q;
}

SymMatrix conjugate_by_random_orthogonal(const double* lambda, int n, Rng& rng) {
    const SmallMatrix q = random_orthogonal(n, rng);
    SymMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += q(i, k) * lambda[k] * q(j, k);
            out.set(i, j, acc);
        }
    return out;
}

} // namespace lmce
