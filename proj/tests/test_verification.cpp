#include "doctest.h"

#include <cmath>

#include "lmce/verification.hpp"
#include "lmce/spectral.hpp"
#include "lmce/field_io.hpp"

using namespace lmce;

namespace {

// mutation fixture: a sigma_k with an injected sign error on k = 2.
// (On supercritical samples sigma_2 >= 1, so a small offset would never go
// negative; the sign flip is always caught.)
double broken_sigma(const double* lambda, int n, int k) {
    const double v = sigma_k(lambda, n, k);
    return (k == 2) ? -v : v;
}

} // namespace

TEST_SUITE("verification") {

TEST_CASE("lambda suite: clean run, determinism, mutation fixture") {
    const SuiteReport rep = run_lambda_suite(3, 20000, 42);
    CHECK(rep.passed);
    CHECK(rep.metrics.at("violations") == 0.0);
    CHECK(rep.metrics.at("worst_sigma_k") >= -1e-10);
    CHECK(rep.metrics.at("worst_dsigma_k") >= -1e-10);
    CHECK(rep.metrics.at("worst_2lan_plus_lan2") >= -1e-10);
    CHECK(rep.metrics.at("worst_triple_product") >= -1e-10);
    CHECK(rep.metrics.at("worst_angle_margin") >= -1e-12);
    // the subcritical control search must find violations (hypothesis active)
    CHECK(rep.metrics.at("subcritical_violations_found") >= 1.0);

    const SuiteReport again = run_lambda_suite(3, 20000, 42);
    CHECK(rep.to_json() == again.to_json());
    const SuiteReport serial = run_lambda_suite(3, 20000, 42, Exec::Serial);
    CHECK(rep.to_json() == serial.to_json());

    const SuiteReport bad = run_lambda_suite(3, 2000, 42, Exec::Parallel, &broken_sigma);
    CHECK(!bad.passed);
    CHECK(bad.metrics.at("violations") >= 1.0);
    REQUIRE(!bad.failures.empty());
    CHECK(bad.failures[0].find("lambda=[") != std::string::npos);
}

TEST_CASE("lambda suite runs for every n in range") {
    for (int n = 3; n <= 6; ++n) {
        const SuiteReport rep = run_lambda_suite(n, 5000, 42);
        CHECK(rep.passed);
    }
    CHECK_THROWS_AS(run_lambda_suite(2, 100, 1), Error);
    CHECK_THROWS_AS(run_lambda_suite(7, 100, 1), Error);
}

TEST_CASE("identity suite: small budget clean run") {
    IdentityBudgets b;
    b.quartic_trials = 12;
    b.rotation_samples = 400;
    b.vlai_samples = 4000;
    const SuiteReport rep = run_identity_suite({2, 3}, b, 42);
    CHECK(rep.passed);
    CHECK(rep.metrics.at("jacobi_identity_max_residual") <= 1e-6);
    CHECK(rep.metrics.at("divergence_identity_max_residual") <= 1e-7);
    CHECK(rep.metrics.at("mean_curvature_max_residual") <= 1e-7);
    CHECK(rep.metrics.at("rotation_identity_max") <= 1e-9);
    CHECK(rep.metrics.at("phase_additivity_max") <= 1e-9);
    CHECK(rep.metrics.at("beta_star_inversion_max") <= 1e-10);
    CHECK(rep.metrics.at("vlai_max_relative_residual") <= 1e-9);
}

TEST_CASE("jacobi suite: margins and recorded deltas") {
    const SuiteReport rep = run_jacobi_suite(3, 40, 42);
    CHECK(rep.passed);
    CHECK(rep.metrics.at("instances_built") >= 20.0);
    CHECK(rep.metrics.at("worst_margin_delta_1e-3") >= -1e-8);
    CHECK(rep.metrics.at("largest_valid_delta") > 0.0);
    CHECK(rep.metrics.at("worst_Tm_margin") >= -1e-8);
    CHECK(rep.metrics.at("worst_Tk_margin") >= -1e-8);
    CHECK(rep.metrics.at("worst_full_variant_margin") >= -1e-8);
}

TEST_CASE("wnn probe: frame guard fires for a weak instance") {
    WnnProbeOptions opts;
    opts.strength = 0.1;
    opts.resolutions = {17};
    CHECK_THROWS_AS(run_wnn_probe(2, 42, opts), FrameHypothesisUnmet);
}

TEST_CASE("wnn probe: small run, both dimensions") {
    WnnProbeOptions opts;
    opts.resolutions = {17, 33};
    for (int n : {2, 3}) {
        const SuiteReport rep = run_wnn_probe(n, 42, opts);
        CHECK(rep.passed);
        CHECK(rep.metrics.at("wnn_min") > 0.0);
        CHECK(rep.metrics.at("halfmax_margin_min") >= -1e-10);
        CHECK(rep.metrics.at("frame_deviation") < 1.0 / (10.0 * n));
    }
}

TEST_CASE("volume suite passes and the growth order matches the dimension") {
    for (int n : {2, 3}) {
        const SuiteReport rep = run_volume_suite(n, 42);
        CHECK(rep.passed);
        CHECK(std::fabs(rep.metrics.at("slope_vs_graph_scale") - n) <= 0.05);
        CHECK(std::fabs(rep.metrics.at("slope_vs_kappa_large_set") - n) <= 0.05);
        CHECK(rep.metrics.at("rescaling_invariance") <= 1e-9);
        // the stated-set kappa slope is the (1+kappa^2)^{n/2} growth curve
        CHECK(rep.metrics.at("slope_vs_kappa_stated_set") < n);
        CHECK(rep.metrics.at("slope_vs_kappa_stated_set") > 0.7 * n);
    }
}

TEST_CASE("sharpness exhibit: family blow-up against bounded-resolution solves") {
    const SuiteReport rep = run_sharpness_exhibit({0.2, 0.1}, 33);
    CHECK(rep.passed);
    CHECK(rep.metrics.at("family_origin_hessian_eps_" + format_full(0.1)) >
          rep.metrics.at("family_origin_hessian_eps_" + format_full(0.2)));
    CHECK(rep.metrics.at("lip_theta_eps_" + format_full(0.1)) >
          rep.metrics.at("lip_theta_eps_" + format_full(0.2)));
}

TEST_CASE("suite reports serialize to json") {
    const SuiteReport rep = run_lambda_suite(3, 1000, 7);
    const std::string j = rep.to_json();
    CHECK(j.find("\"suite\"") != std::string::npos);
    CHECK(j.find("worst_sigma_k") != std::string::npos);
    const std::string s = summary_json({rep}, 7);
    CHECK(s.find("all_passed") != std::string::npos);
}

TEST_CASE("composed summaries are byte-identical for a fixed seed") {
    auto make = [] {
        std::vector<SuiteReport> reps;
        reps.push_back(run_lambda_suite(3, 3000, 99));
        reps.push_back(run_volume_suite(2, 99));
        reps.push_back(run_jacobi_suite(3, 8, 99));
        return summary_json(reps, 99);
    };
    const std::string a = make();
    const std::string b = make();
    CHECK(a == b);
}

} // TEST_SUITE
