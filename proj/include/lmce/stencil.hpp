#pragma once

#include "lmce/grid.hpp"
#include "lmce/parallel.hpp"

namespace lmce {

// Second-order finite differences on uniform grids. Interior stencils are
// centered; gradient and Hessian fall back to one-sided 2nd-order forms on
// boundary nodes (flagged in MatrixField, not used by the solver residual).

// centered interior, one-sided 2nd-order at boundary
VectorField gradient(const ScalarField& f, Exec exec = Exec::Parallel);

MatrixField hessian(const ScalarField& f, Exec exec = Exec::Parallel);

// Pointwise variants used by hot loops (idx must be interior for `centered`).
double deriv1(const ScalarField& f, const std::array<int, 3>& idx, int axis);
double deriv2(const ScalarField& f, const std::array<int, 3>& idx, int a, int b);

// Rank-3 symmetric tensor: unique components (i <= j <= k), node-major.
// Needs an interior margin of 2 nodes; entries elsewhere are zero with the
// node flagged.
struct Tensor3Field {
    Grid grid;
    int pack = 0;
    std::vector<double> values;
    std::vector<unsigned char> valid;

    static int pack_size(int n) { return n * (n + 1) * (n + 2) / 6; }
    static int pack_index(int n, int i, int j, int k);

    Tensor3Field() = default;
    explicit Tensor3Field(const Grid& g)
        : grid(g), pack(pack_size(g.n)),
          values(g.num_nodes() * static_cast<std::size_t>(pack_size(g.n)), 0.0),
          valid(g.num_nodes(), 0) {}

    double get(std::size_t node, int i, int j, int k) const {
        return values[node * static_cast<std::size_t>(pack) + static_cast<std::size_t>(pack_index(grid.n, i, j, k))];
    }
    void set(std::size_t node, int i, int j, int k, double v) {
        values[node * static_cast<std::size_t>(pack) + static_cast<std::size_t>(pack_index(grid.n, i, j, k))] = v;
    }
};

Tensor3Field third_derivatives(const ScalarField& f, Exec exec = Exec::Parallel);

} // namespace lmce
