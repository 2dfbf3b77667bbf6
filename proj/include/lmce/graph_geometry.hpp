#pragma once

#include <functional>

#include "lmce/spectral.hpp"
#include "lmce/polynomial.hpp"
#include "lmce/grid.hpp"
#include "lmce/stencil.hpp"

namespace lmce {

// Fully symmetric rank-3 tensor, n <= 8, unique components i <= j <= k.
struct SymTensor3 {
    int n = 0;
    std::array<double, 120> a{};

    SymTensor3() = default;
    explicit SymTensor3(int dim) : n(dim) {}

    static int pidx(int n, int i, int j, int k) { return Tensor3Field::pack_index(n, i, j, k); }
    double operator()(int i, int j, int k) const { return a[static_cast<std::size_t>(pidx(n, i, j, k))]; }
    void set(int i, int j, int k, double v) { a[static_cast<std::size_t>(pidx(n, i, j, k))] = v; }

    double max_abs() const {
        double m = 0.0;
        const int count = n * (n + 1) * (n + 2) / 6;
        for (int q = 0; q < count; ++q) m = std::fmax(m, std::fabs(a[static_cast<std::size_t>(q)]));
        return m;
    }
};

// A potential with exact derivatives of every order: the evaluator takes a
// multi-index. Polynomials and the radial counterexample both provide this.
struct Potential {
    int n = 0;
    std::function<double(const double*, const std::array<int, kMaxDim>&)> deriv;

    double value(const double* x) const {
        std::array<int, kMaxDim> zero{};
        return deriv(x, zero);
    }
};

Potential potential_of(const PolynomialTestFunction& p);

std::array<double, kMaxDim> grad_of(const Potential& u, const double* x);
SymMatrix hess_of(const Potential& u, const double* x);
SymTensor3 tensor3_of(const Potential& u, const double* x);

// theta := tr arctan D^2u and its first two derivatives, from the chain rule
// sum_ij g^{ij} u_ijk = theta_k with g^{-1} = (I + (D^2u)^2)^{-1}. Needs
// derivatives of u up to fourth order.
struct ThetaJets {
    double theta = 0.0;
    std::array<double, kMaxDim> grad{};
    SymMatrix hess;
};
ThetaJets theta_jets(const Potential& u, const double* x);
std::array<double, kMaxDim> theta_gradient(int n, const SymMatrix& hess, const SymTensor3& d3);

// Per-point bundle of graph quantities for L = G_{Du}: induced metric
// g = I + (D^2u)^2, volume element v, Jordan angles, adapted frames
//   e_i = (gamma_i, lambda_i gamma_i)/sqrt(1+lambda_i^2),
//   nu_i = (-lambda_i gamma_i, gamma_i)/sqrt(1+lambda_i^2),
// second fundamental form components
//   h_ijk = prod (1+lambda^2)^{-1/2} D^3u(gamma_i, gamma_j, gamma_k),
// and mean curvature H = sum_k (sum_i h_iik) nu_k.
struct GraphGeometry {
    int n = 0;
    Spectrum spectrum;
    SymMatrix g;
    SymMatrix ginv;
    double v = 1.0;
    std::array<double, kMaxDim> jordan{};      // Theta_i = arctan lambda_i
    std::array<double, 2 * kMaxDim> e[kMaxDim];   // tangent frame, R^{2n}
    std::array<double, 2 * kMaxDim> nu[kMaxDim];  // normal frame, R^{2n}
    SymTensor3 h;                              // in the eigenframe
    std::array<double, 2 * kMaxDim> H{};       // mean curvature vector
    bool degenerate_flagged = false;           // tie-broken eigenbasis used
};

GraphGeometry geometry_at(int n, const std::array<double, kMaxDim>& du, const SymMatrix& d2u,
                          const SymTensor3& d3u);

// || H_geom - J grad^L theta ||, both sides evaluated independently.
double mean_curvature_residual(int n, const std::array<double, kMaxDim>& du, const SymMatrix& d2u,
                               const SymTensor3& d3u, const std::array<double, kMaxDim>& theta_grad);

// Laplace-Beltrami of f on the graph of Du through the divergence form
// (1/v) sum_i d_i (v g^{ij} d_j f). The inner vector field is evaluated
// analytically from the jets of u and the supplied gradient of f; the outer
// divergence is a 4th-order central difference at step 1e-3 (1 + |x|),
// Richardson-extrapolated once.
struct ScalarOnBase {
    std::function<double(const double*)> value;
    std::function<std::array<double, kMaxDim>(const double*)> gradient;
};
double laplace_beltrami(const Potential& u, const ScalarOnBase& f, const double* x);

// Grid path: 2nd-order divergence form at an interior node (margin 2).
double laplace_beltrami_grid(const ScalarField& u, const ScalarOnBase& f,
                             const std::array<int, 3>& idx);

// log v_m = sum_{i<=m} log sqrt(1 + lambda_i^2) and its Euclidean gradient.
double log_vm(const Spectrum& s, int m);
std::array<double, kMaxDim> log_vm_gradient(const Potential& u, const double* x, int m);

// Both sides of the Delta_L log v_m identity. The right side is assembled
// exactly as displayed (curvature terms, theta terms); the left side comes
// from laplace_beltrami, which is an independent route.
struct JacobiReport {
    std::array<double, kMaxDim> point{};
    int m = 0;
    double lhs = 0.0;
    double rhs_identity = 0.0;
    std::array<double, kMaxDim> Tk{};
    double gradient_term = 0.0;    // |grad^L log v_m|^2
    double divergence_term = 0.0;  // (1/v) sum_{i<=m} sum_{j,k} d_j(lambda_i theta_k v g_ji g_ki / (1+lambda_i^2))
    double residual = 0.0;         // |lhs - rhs|
};
JacobiReport jacobi_identity_report(const Potential& u, int m, const double* x);

// RHS of the identity, standalone (used by the margin evaluator).
double delta_log_vm_rhs(const GraphGeometry& gg, const ThetaJets& tj, int m);

// n = 2, m = 1 five-term specialization (independent cross-check).
double delta_log_v1_rhs_n2(const GraphGeometry& gg, const ThetaJets& tj);

// T_k of the constrained Jacobi inequality, k in [1, n] (1-based).
std::array<double, kMaxDim> jacobi_Tk(const GraphGeometry& gg, int m);

// Jacobi inequality with constraints lambda_m/2 >= lambda_{m+1} >= 1:
//   Delta_L log v_m - delta |grad log v_m|^2
//     >= (1/v) sum d_j(lambda_i theta_k v g_ji g_ki/(1+lambda_i^2)) - Lambda^2/delta.
// Returns lhs - rhs for the supplied delta. ConstraintViolated when the
// hypothesis fails at the point.
double jacobi_inequality_margin(const Potential& u, int m, const double* x, double delta,
                                double Lambda);

// Variant for v = v_n under lambda_{n-1} >= 2 n^2 / tau, lambda_n >= -1/tau.
double jacobi_inequality_margin_full(const Potential& u, const double* x, double delta_star,
                                     double Lambda, double tau);

// | sum_j d_j(lambda_l v g_jl g_kl / (1+lambda_l^2)) - RHS |, the left side
// via the eigen-derivative chain rule, the right via h_ijk.
double divergence_identity_residual(const Potential& u, int l, int k, const double* x);

// Relative residual of the algebraic identity
//   sum_i v/(1+lambda_i^2) = cos(theta) sum (-1)^k (n-2k) sigma_{2k}
//                          - sin(theta) sum (-1)^k (n-2k+1) sigma_{2k-1}.
double vlai_residual(const double* lambda, int n);

// Graph area over an axis-aligned sub-box: trapezoid-weighted sum of v h^n.
double graph_area(const ScalarField& u, const Box& region, Exec exec = Exec::Parallel);

} // namespace lmce
