#pragma once

#include "lmce/spectral.hpp"
#include "lmce/grid.hpp"
#include "lmce/parallel.hpp"

namespace lmce {

// Rotation vector beta with |beta_i| <= pi/2; S_beta = diag(beta).
struct RotationSpec {
    int n = 0;
    std::array<double, kMaxDim> beta{};

    RotationSpec() = default;
    RotationSpec(int dim, const std::array<double, kMaxDim>& b) : n(dim), beta(b) {
        for (int i = 0; i < n; ++i)
            if (std::fabs(beta[static_cast<std::size_t>(i)]) > 1.5707963267948966 + 1e-15)
                throw Error("rotation: |beta_i| must be <= pi/2");
    }

    static RotationSpec uniform(int n, double b) {
        std::array<double, kMaxDim> v{};
        for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = b;
        return RotationSpec(n, v);
    }

    double sum() const {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += beta[static_cast<std::size_t>(i)];
        return s;
    }
};

// beta* = (pi/2, ..., pi/2, -pi/2); sin S_{beta*} = diag(1, ..., 1, -1).
RotationSpec beta_star(int n);

// Jacobian of the base map, J_beta = cos S + sin S * M (not symmetric for
// non-uniform beta).
SmallMatrix rotation_jacobian(const SymMatrix& m, const RotationSpec& spec);
double min_singular_value(const SmallMatrix& a);

// Rotated Hessian (-sin S + cos S M)(cos S + sin S M)^{-1}; throws
// SingularJacobian when J_beta loses invertibility. The matrix identity
// arctan(Mbar) = arctan(M) - S_beta holds when S_beta commutes with M
// (uniform beta, or M diagonal) and no rotated angle crosses +-pi/2; the
// trace version (phase additivity) holds for every beta whose rotation path
// keeps the plane graphical.
SymMatrix rotate_hessian(const SymMatrix& m, const RotationSpec& spec);

// true when some rotated Jordan angle arctan(lambda_i) - beta_i leaves
// (-pi/2, pi/2): the arctan identity is then unverifiable at this point.
bool rotation_wraps(const SymMatrix& m, const RotationSpec& spec);

// Under beta*, the rotated spectrum is exactly {-1/lambda_i}; returned
// sorted descending. SingularHessian when some |lambda_i| <= 1e-10.
std::array<double, kMaxDim> beta_star_eigen_inversion(const SymMatrix& m);

// delta = inf theta - (n-2) pi/2 and sigma = cot(delta/n). delta = 0 marks
// sigma infinite (no rotation needed); delta >= pi/2 flags the convex regime.
struct LewyYuanSigma {
    double delta = 0.0;
    double sigma = 0.0;
    bool sigma_infinite = false;
    bool convex_regime = false;
};
LewyYuanSigma lewy_yuan_sigma(double inf_theta, int n);

// Forward-maps the graph of Du through the base rotation and resamples the
// rotated gradient onto target_grid. Inverse lookup is a damped fixed point
// x <- x - J_beta^{-1} (xbar(x) - target), tolerance 1e-10, 50 iterations,
// using multilinear interpolation of Du and D^2u between nodes.
struct RotatedGraph {
    Grid source_grid;
    VectorField xbar;           // images of source nodes
    VectorField ybar;           // Dubar at those images
    Grid target_grid;
    VectorField ubar_gradient;  // resampled Dubar on target nodes
    std::vector<unsigned char> valid;
    double jacobian_min = 0.0;  // min eigenvalue of sym(J_beta) over source nodes
};

RotatedGraph rotate_graph(const ScalarField& u, const RotationSpec& spec, const Grid& target_grid,
                          Exec exec = Exec::Parallel,
                          double jacobian_floor = 1.0 / 3.0);

// Largest axis-aligned box inside the image of the source nodes, shrunk by
// `margin` on each side; a safe target for rotate_graph.
Box rotated_image_box(const ScalarField& u, const RotationSpec& spec, double margin = 0.05);

} // namespace lmce
