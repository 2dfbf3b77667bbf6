#pragma once

#include <cstddef>
#include <vector>
#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lmce {

// Execution policy for the data-parallel kernels. Every parallel kernel has a
// serial twin used as the reference in tests and in the benchmark target.
enum class Exec { Serial, Parallel };

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

template <typename F>
inline void parallel_for(std::ptrdiff_t n, Exec exec, F&& body) {
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    }
}

// Ordered block reduction: partial sums over fixed 4096-element blocks are
// computed (possibly in parallel) and then added in block order, so the result
// is bitwise identical for any thread count.
template <typename F>
inline double ordered_sum(std::ptrdiff_t n, Exec exec, F&& term) {
    constexpr std::ptrdiff_t block = 4096;
    const std::ptrdiff_t nblocks = (n + block - 1) / block;
    std::vector<double> partial(static_cast<std::size_t>(std::max<std::ptrdiff_t>(nblocks, 1)), 0.0);
    parallel_for(nblocks, exec, [&](std::ptrdiff_t b) {
        const std::ptrdiff_t lo = b * block;
        const std::ptrdiff_t hi = std::min(lo + block, n);
        double s = 0.0;
        for (std::ptrdiff_t i = lo; i < hi; ++i) s += term(i);
        partial[static_cast<std::size_t>(b)] = s;
    });
    double total = 0.0;
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) total += partial[static_cast<std::size_t>(b)];
    return total;
}

template <typename F>
inline double ordered_max(std::ptrdiff_t n, Exec exec, F&& term) {
    constexpr std::ptrdiff_t block = 4096;
    const std::ptrdiff_t nblocks = (n + block - 1) / block;
    std::vector<double> partial(static_cast<std::size_t>(std::max<std::ptrdiff_t>(nblocks, 1)),
                                -1.7976931348623157e308);
    parallel_for(nblocks, exec, [&](std::ptrdiff_t b) {
        const std::ptrdiff_t lo = b * block;
        const std::ptrdiff_t hi = std::min(lo + block, n);
        double s = -1.7976931348623157e308;
        for (std::ptrdiff_t i = lo; i < hi; ++i) s = std::max(s, term(i));
        partial[static_cast<std::size_t>(b)] = s;
    });
    double total = -1.7976931348623157e308;
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) total = std::max(total, partial[static_cast<std::size_t>(b)]);
    return total;
}

} // namespace lmce
