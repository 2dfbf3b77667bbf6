#include "lmce/polynomial.hpp"

namespace lmce {

void PolynomialTestFunction::enumerate(int n, int degree, std::array<int, kMaxDim>& cur, int axis,
                                       int left, std::vector<std::array<int, kMaxDim>>& out) {
    if (axis == n - 1) {
        cur[static_cast<std::size_t>(axis)] = left;
        out.push_back(cur);
        return;
    }
    for (int e = 0; e <= left; ++e) {
        cur[static_cast<std::size_t>(axis)] = e;
        enumerate(n, degree, cur, axis + 1, left - e, out);
    }
    cur[static_cast<std::size_t>(axis)] = 0;
}

PolynomialTestFunction PolynomialTestFunction::random(int n, int degree, Rng& rng, double scale) {
    PolynomialTestFunction p(n);
    std::vector<std::array<int, kMaxDim>> exps;
    std::array<int, kMaxDim> cur{};
    for (int d = 0; d <= degree; ++d) enumerate(n, d, cur, 0, d, exps);
    for (const auto& e : exps) {
        int deg = 0;
        for (int a = 0; a < n; ++a) deg += e[static_cast<std::size_t>(a)];
        double fact = 1.0;
        for (int q = 2; q <= deg; ++q) fact *= q;
        p.add_term(scale * rng.uniform(-1.0, 1.0) / fact, e);
    }
    return p;
}

PolynomialTestFunction PolynomialTestFunction::from_jets(int n, const std::array<double, kMaxDim>& center,
                                                         const SymMatrix& hess, Rng& rng,
                                                         double third_scale, double fourth_scale) {
    PolynomialTestFunction p(n);
    p.set_center(center);
    // quadratic part: sum_ij H_ij y_i y_j / 2
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            std::array<int, kMaxDim> e{};
            e[static_cast<std::size_t>(i)] += 1;
            e[static_cast<std::size_t>(j)] += 1;
            p.add_term((i == j ? 0.5 : 1.0) * hess(i, j), e);
        }
    // random cubic and quartic tails
    std::vector<std::array<int, kMaxDim>> exps;
    std::array<int, kMaxDim> cur{};
    enumerate(n, 3, cur, 0, 3, exps);
    for (const auto& e : exps) p.add_term(third_scale * rng.uniform(-1.0, 1.0) / 6.0, e);
    exps.clear();
    enumerate(n, 4, cur, 0, 4, exps);
    for (const auto& e : exps) p.add_term(fourth_scale * rng.uniform(-1.0, 1.0) / 24.0, e);
    return p;
}

} // namespace lmce
