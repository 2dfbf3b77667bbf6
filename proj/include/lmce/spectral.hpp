#pragma once

#include <array>
#include <vector>

#include "lmce/sym_matrix.hpp"
#include "lmce/rng.hpp"

namespace lmce {

// Eigendecomposition of a symmetric matrix, lambda[0] >= ... >= lambda[n-1].
// Column i of gamma is the eigenvector of lambda[i]; sign fixed so the
// largest-magnitude component is positive.
struct Spectrum {
    int n = 0;
    std::array<double, kMaxDim> lambda{};
    SmallMatrix gamma;  // column i = gamma_i
    double gap = 0.0;   // smallest consecutive eigenvalue gap

    std::array<double, kMaxDim> column(int i) const {
        std::array<double, kMaxDim> v{};
        for (int r = 0; r < n; ++r) v[static_cast<std::size_t>(r)] = gamma(r, i);
        return v;
    }
};

enum class PhaseRange { Subcritical, Critical, Supercritical };

struct PhaseClass {
    double theta = 0.0;
    int n = 0;
    PhaseRange range = PhaseRange::Subcritical;
};

// Cyclic Jacobi rotations; stops when the off-diagonal Frobenius norm drops
// below 1e-14 * ||M||_F. Unconditionally stable for symmetric input.
Spectrum eig_sym(const SymMatrix& m);

// sum_i arctan(lambda_i), in (-n*pi/2, n*pi/2)
double phase(const Spectrum& s);
double phase_of(const SymMatrix& m);

// Q arctan(Xi) Q^T; commutes with M, eigenvalues in (-pi/2, pi/2).
SymMatrix arctan_matrix(const SymMatrix& m);
// Q tan(Xi) Q^T (test oracle for the arctan round trip)
SymMatrix tan_matrix(const SymMatrix& m);

// Elementary symmetric polynomials via the recurrence
// sigma_k(l_1..l_m) = sigma_k(l_1..l_{m-1}) + l_m sigma_{k-1}(l_1..l_{m-1}).
// sigma_all returns sigma_0..sigma_n.
std::array<double, kMaxDim + 1> sigma_all(const double* lambda, int n);
double sigma_k(const double* lambda, int n, int k);
// d sigma_k / d lambda_i = sigma_{k-1}(lambda with entry i removed), 1 <= k <= n-1
double dsigma_k(const double* lambda, int n, int k, int i);

// supercritical iff (n-2)pi/2 < |theta| < n*pi/2, critical at equality with
// the lower bound (absolute tolerance 1e-12). Throws for |theta| >= n*pi/2.
PhaseClass classify_phase(double theta, int n);

struct EigenDerivative {
    std::array<double, kMaxDim> dlambda{};
    SmallMatrix dgamma;  // column l = derivative of gamma_l
};

// First-order perturbation of the eigensystem:
//   dlambda_l = <gamma_l, dM gamma_l>
//   dgamma_l  = sum_{i != l} (lambda_l - lambda_i)^{-1} <gamma_i, dM gamma_l> gamma_i
// Requires all eigenvalue gaps > 1e-8 (DegenerateSpectrum otherwise).
EigenDerivative eigen_derivative(const SymMatrix& m, const SymMatrix& dm);
EigenDerivative eigen_derivative(const Spectrum& s, const SymMatrix& dm);

// Samples Jordan angles alpha_i in (-pi/2, pi/2) with sum(alpha) >= target,
// drawing each alpha_i uniformly from its feasible interval given the
// remaining slack. Angles are kept away from +-pi/2 by `edge` so that
// tan(alpha) stays in a numerically safe range.
std::array<double, kMaxDim> sample_supercritical_angles(int n, double target, Rng& rng,
                                                        double edge = 1e-5);

inline std::array<double, kMaxDim> angles_to_lambda(const std::array<double, kMaxDim>& alpha, int n) {
    std::array<double, kMaxDim> l{};
    for (int i = 0; i < n; ++i) l[static_cast<std::size_t>(i)] = std::tan(alpha[static_cast<std::size_t>(i)]);
    return l;
}

// Random symmetric matrix with the given spectrum: Q diag(lambda) Q^T for a
// Haar-ish random orthogonal Q (Gram-Schmidt on Gaussian columns).
SymMatrix conjugate_by_random_orthogonal(const double* lambda, int n, Rng& rng);
SmallMatrix random_orthogonal(int n, Rng& rng);

} // namespace lmce
