#include <chrono>
#include <cstdio>
#include <string>

#include "lmce/stencil.hpp"
#include "lmce/dirichlet.hpp"
#include "lmce/verification.hpp"

using namespace lmce;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = clock_type::now();
        fn();
        best = std::fmin(best, seconds_since(t0));
    }
    return best;
}

} // namespace

int main(int argc, char** argv) {
    int res = 257;
    long samples = 200000;
    if (argc > 1) res = std::stoi(argv[1]);
    if (argc > 2) samples = std::stol(argv[2]);

    std::printf("threads available: %d\n", max_threads());
    std::printf("%-28s %12s %12s %8s\n", "kernel", "serial [s]", "parallel [s]", "speedup");

    const Grid g = Grid::cube(2, -1.0, 1.0, res);
    const ScalarField u = ScalarField::sample(g, [](const std::array<double, 3>& x) {
        return 0.4 * x[0] * x[0] - 0.3 * x[1] * x[1] + 0.1 * x[0] * x[0] * x[0] * x[1];
    });

    {
        const double ts = time_best_of(3, [&] { hessian(u, Exec::Serial); });
        const double tp = time_best_of(3, [&] { hessian(u, Exec::Parallel); });
        std::printf("%-28s %12.4f %12.4f %8.2f\n",
                    ("hessian stencil " + std::to_string(res) + "^2").c_str(), ts, tp, ts / tp);
        // the parallel kernel must agree with the serial reference bitwise
        const MatrixField a = hessian(u, Exec::Serial);
        const MatrixField b = hessian(u, Exec::Parallel);
        for (std::size_t i = 0; i < a.values.size(); ++i)
            if (a.values[i] != b.values[i]) {
                std::printf("MISMATCH in hessian kernel at %zu\n", i);
                return 1;
            }
    }

    {
        const PhaseSpec phase = PhaseSpec::constant(3.14159265358979323846 / 2.0);
        const Grid sg = Grid::cube(2, -1.0, 1.0, std::min(res, 129));
        const DirichletProblem prob = DirichletProblem::make(sg, phase, [](const double* x) {
            return 0.5 * (x[0] * x[0] + x[1] * x[1]);
        });
        SolveOptions so;
        so.exec = Exec::Serial;
        const double ts = time_best_of(1, [&] { solve(prob, so); });
        so.exec = Exec::Parallel;
        const double tp = time_best_of(1, [&] { solve(prob, so); });
        std::printf("%-28s %12.4f %12.4f %8.2f\n", "dirichlet solve 129^2", ts, tp, ts / tp);
    }

    {
        const double ts = time_best_of(1, [&] { run_lambda_suite(4, samples, 42, Exec::Serial); });
        const double tp = time_best_of(1, [&] { run_lambda_suite(4, samples, 42, Exec::Parallel); });
        std::printf("%-28s %12.4f %12.4f %8.2f\n",
                    ("lambda suite n=4 x" + std::to_string(samples)).c_str(), ts, tp, ts / tp);
        const SuiteReport a = run_lambda_suite(4, samples, 42, Exec::Serial);
        const SuiteReport b = run_lambda_suite(4, samples, 42, Exec::Parallel);
        if (a.to_json() != b.to_json()) {
            std::printf("MISMATCH between serial and parallel lambda suites\n");
            return 1;
        }
    }
    return 0;
}
