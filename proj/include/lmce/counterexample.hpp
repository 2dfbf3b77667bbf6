#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "lmce/errors.hpp"
#include "lmce/sym_matrix.hpp"

namespace lmce {

// Radial family u_eps on B_1 built from a prescribed modulus phi > 0 on
// (0, 2] with phi(0+) = infinity:
//   Phi(t)   = int_0^t min{phi_*(s)/2, |log(s/2)|} ds
//   1/f(t)   = c + int_t^2 ds/Phi(s)
//   u_eps(x) = int_0^{|x|} dt / f(eps + t)
// Hessian spectrum: 1/(|x| f_eps(|x|)) with multiplicity n-1 and
// -1/Phi_eps(|x|) with multiplicity 1 (radial direction). The smooth
// minorant phi_* is the mollified halved monotone-envelope of phi.
class CounterexampleFamily {
public:
    int n = 0;
    double eps = 0.0;
    double c = 0.0;

    double phi(double t) const;
    double phi_star(double t) const;
    double Phi(double t) const;          // cached cumulative integral
    double Phi_integrand(double t) const;  // min{phi_*/2, |log(t/2)|} = Phi'
    double f(double t) const;            // 1/(c + int_t^2 1/Phi)
    double fprime(double t) const { return f(t) * f(t) / Phi(t); }
    double sup_f() const { return f(2.0); }

    // independent adaptive-quadrature route for Phi (the test oracle)
    double Phi_direct(double t, double rel_tol = 1e-10) const;

    double u_radial(double r) const;  // int_0^r 1/f_eps

    CounterexampleFamily with_eps(double new_eps) const {
        CounterexampleFamily out = *this;
        out.eps = new_eps;
        return out;
    }

    struct Tables;
    std::shared_ptr<const Tables> tables_;
};

CounterexampleFamily build_family(const std::function<double(double)>& phi, int n, double eps);

// the spec'd profile phi(t) = 1 + log^2(t/2)
double phi_log2(double t);

struct UEvaluation {
    double u = 0.0;
    std::array<double, kMaxDim> du{};
    double lambda_tangential = 0.0;  // multiplicity n-1
    double lambda_radial = 0.0;      // multiplicity 1
    bool origin_flagged = false;     // tangential value at r = 0 is a flagged limit
};
UEvaluation eval_u_eps(const CounterexampleFamily& fam, const double* x);

struct ThetaEvaluation {
    double theta = 0.0;
    double dtheta_norm = 0.0;
};
ThetaEvaluation eval_theta_eps(const CounterexampleFamily& fam, double r);

struct BlowupRow {
    double eps;
    double min_eigenvalue_origin;  // -1/Phi(eps)
    double sup_dtheta;
    double inf_phase_above_critical;
};
std::vector<BlowupRow> blowup_table(const CounterexampleFamily& fam,
                                    const std::vector<double>& eps_list,
                                    int radial_samples = 4096);

} // namespace lmce
