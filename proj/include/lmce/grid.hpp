#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "lmce/errors.hpp"
#include "lmce/sym_matrix.hpp"

namespace lmce {

// Axis-aligned rectangular grid, n = 2 or 3, same node count per axis.
// Odd resolutions keep the center point on a node.
struct Grid {
    int n = 2;
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};
    int resolution = 0;
    std::array<double, 3> h{};

    Grid() = default;
    Grid(int dim, std::array<double, 3> lo_, std::array<double, 3> hi_, int res)
        : n(dim), lo(lo_), hi(hi_), resolution(res) {
        if (dim < 2 || dim > 3) throw ConfigError("grid: dimension must be 2 or 3");
        if (res < 5) throw ConfigError("grid: resolution too small");
        for (int a = 0; a < dim; ++a) {
            if (!(hi[static_cast<std::size_t>(a)] > lo[static_cast<std::size_t>(a)]))
                throw ConfigError("grid: hi must exceed lo");
            h[static_cast<std::size_t>(a)] =
                (hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)]) / (res - 1);
        }
    }

    static Grid cube(int dim, double a, double b, int res) {
        std::array<double, 3> lo{a, a, a}, hi{b, b, b};
        return Grid(dim, lo, hi, res);
    }

    std::size_t num_nodes() const {
        std::size_t c = 1;
        for (int a = 0; a < n; ++a) c *= static_cast<std::size_t>(resolution);
        return c;
    }

    // row-major index from per-axis indices
    std::size_t index(const std::array<int, 3>& idx) const {
        std::size_t lin = 0;
        for (int a = 0; a < n; ++a) lin = lin * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
        return lin;
    }
    std::array<int, 3> unindex(std::size_t lin) const {
        std::array<int, 3> idx{};
        for (int a = n - 1; a >= 0; --a) {
            idx[static_cast<std::size_t>(a)] = static_cast<int>(lin % static_cast<std::size_t>(resolution));
            lin /= static_cast<std::size_t>(resolution);
        }
        return idx;
    }

    std::array<double, 3> coord(const std::array<int, 3>& idx) const {
        std::array<double, 3> x{};
        for (int a = 0; a < n; ++a)
            x[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)] +
                idx[static_cast<std::size_t>(a)] * h[static_cast<std::size_t>(a)];
        return x;
    }

    bool is_interior(const std::array<int, 3>& idx, int margin = 1) const {
        for (int a = 0; a < n; ++a) {
            const int i = idx[static_cast<std::size_t>(a)];
            if (i < margin || i > resolution - 1 - margin) return false;
        }
        return true;
    }

    bool same_layout(const Grid& o) const {
        if (n != o.n || resolution != o.resolution) return false;
        for (int a = 0; a < n; ++a) {
            if (lo[static_cast<std::size_t>(a)] != o.lo[static_cast<std::size_t>(a)]) return false;
            if (hi[static_cast<std::size_t>(a)] != o.hi[static_cast<std::size_t>(a)]) return false;
        }
        return true;
    }
};

struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.num_nodes(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    double& at(const std::array<int, 3>& idx) { return values[grid.index(idx)]; }
    double at(const std::array<int, 3>& idx) const { return values[grid.index(idx)]; }

    template <typename F>
    static ScalarField sample(const Grid& g, F&& f) {
        ScalarField out(g);
        const std::size_t count = g.num_nodes();
        for (std::size_t i = 0; i < count; ++i) out.values[i] = f(g.coord(g.unindex(i)));
        return out;
    }
};

struct VectorField {
    Grid grid;
    std::vector<double> values;  // node-major, component-minor

    VectorField() = default;
    explicit VectorField(const Grid& g) : grid(g), values(g.num_nodes() * static_cast<std::size_t>(g.n), 0.0) {}

    double& comp(std::size_t node, int c) { return values[node * static_cast<std::size_t>(grid.n) + static_cast<std::size_t>(c)]; }
    double comp(std::size_t node, int c) const { return values[node * static_cast<std::size_t>(grid.n) + static_cast<std::size_t>(c)]; }
};

// Axis-aligned coordinate box, used for area regions and resampling targets.
struct Box {
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};
};

// Per-node symmetric matrix (packed upper triangle), with a per-node flag
// marking entries produced by one-sided boundary stencils.
struct MatrixField {
    Grid grid;
    int pack = 0;
    std::vector<double> values;
    std::vector<unsigned char> boundary_flag;

    MatrixField() = default;
    explicit MatrixField(const Grid& g)
        : grid(g), pack(g.n * (g.n + 1) / 2),
          values(g.num_nodes() * static_cast<std::size_t>(g.n * (g.n + 1) / 2), 0.0),
          boundary_flag(g.num_nodes(), 0) {}

    SymMatrix get(std::size_t node) const {
        SymMatrix m(grid.n);
        std::size_t k = node * static_cast<std::size_t>(pack);
        for (int i = 0; i < grid.n; ++i)
            for (int j = i; j < grid.n; ++j) m.set(i, j, values[k++]);
        return m;
    }
    void put(std::size_t node, const SymMatrix& m) {
        std::size_t k = node * static_cast<std::size_t>(pack);
        for (int i = 0; i < grid.n; ++i)
            for (int j = i; j < grid.n; ++j) values[k++] = m(i, j);
    }
};

} // namespace lmce
