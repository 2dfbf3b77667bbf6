#include "lmce/counterexample.hpp"

#include <algorithm>
#include <cmath>

namespace lmce {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTMin = 1e-7;
constexpr int kGridN = 3000;

// 16-point Gauss-Legendre nodes/weights on [-1, 1]
constexpr double kGx[16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr double kGw[16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

template <typename F>
double gauss16(const F& fn, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int q = 0; q < 16; ++q) s += kGw[q] * fn(mid + half * kGx[q]);
    return s * half;
}

// adaptive bisection around gauss16 until the refinement stops moving
template <typename F>
double adaptive_quad(const F& fn, double a, double b, double rel_tol, int depth = 0) {
    const double whole = gauss16(fn, a, b);
    const double m = 0.5 * (a + b);
    const double split = gauss16(fn, a, m) + gauss16(fn, m, b);
    if (depth >= 30 || std::fabs(split - whole) <= rel_tol * (std::fabs(split) + 1e-300)) return split;
    return adaptive_quad(fn, a, m, rel_tol, depth + 1) + adaptive_quad(fn, m, b, rel_tol, depth + 1);
}

// antiderivative of |log(s/2)| = log(2/s) on (0, 2]
double log_branch_antideriv(double s) { return s <= 0.0 ? 0.0 : s * (1.0 + std::log(2.0 / s)); }

// mollifier quadrature against the normalized bump exp(-1/(1-r^2))
struct Bump {
    std::array<double, 16> w{};
    Bump() {
        double total = 0.0;
        for (int q = 0; q < 16; ++q) {
            const double r = kGx[q];
            const double rho = std::exp(-1.0 / (1.0 - r * r));
            w[static_cast<std::size_t>(q)] = kGw[q] * rho;
            total += w[static_cast<std::size_t>(q)];
        }
        for (auto& x : w) x /= total;
    }
};
const Bump kBump;

} // namespace

struct CounterexampleFamily::Tables {
    std::function<double(double)> phi;
    std::vector<double> t;         // log-spaced grid on [kTMin, 2]
    std::vector<double> phi_star;  // minorant on the grid
    std::vector<double> Phi;       // cumulative integral of the min-branch
    std::vector<double> G;         // int_t^2 1/Phi
    bool log_branch_at_zero = false;

    double interp(const std::vector<double>& y, double x) const {
        if (x <= t.front()) return y.front();
        if (x >= t.back()) return y.back();
        const double u = std::log(x / t.front()) / std::log(t.back() / t.front()) * (t.size() - 1);
        std::size_t i = static_cast<std::size_t>(u);
        if (i >= t.size() - 1) i = t.size() - 2;
        const double w = (x - t[i]) / (t[i + 1] - t[i]);
        return y[i] * (1.0 - w) + y[i + 1] * w;
    }
};

double phi_log2(double t) {
    const double l = std::log(t / 2.0);
    return 1.0 + l * l;
}

double CounterexampleFamily::phi(double t) const { return tables_->phi(t); }

double CounterexampleFamily::phi_star(double t) const {
    if (t >= tables_->t.front()) return tables_->interp(tables_->phi_star, t);
    // below the table: the envelope construction evaluated directly
    const auto& phi = tables_->phi;
    double m = phi(t);
    for (int q = 0; q < 48; ++q) {
        const double s = t * (1.0 + q / 47.0);
        m = std::fmin(m, phi(std::fmin(s, 2.0)));
    }
    return 0.5 * m;
}

double CounterexampleFamily::Phi_integrand(double t) const {
    return std::fmin(0.5 * phi_star(t), std::fabs(std::log(t / 2.0)));
}

double CounterexampleFamily::Phi(double t) const {
    if (t <= 0.0) return 0.0;
    if (t <= tables_->t.front()) {
        if (tables_->log_branch_at_zero) return log_branch_antideriv(t);
        return Phi_integrand(0.5 * t) * t;  // slowly varying head
    }
    // cumulative at the left grid neighbor plus a short Gauss segment
    const auto& tt = tables_->t;
    const double u = std::log(t / tt.front()) / std::log(tt.back() / tt.front()) * (tt.size() - 1);
    std::size_t i = static_cast<std::size_t>(std::fmax(0.0, u));
    if (i >= tt.size() - 1) i = tt.size() - 2;
    const double base = tables_->Phi[i];
    return base + gauss16([&](double s) { return Phi_integrand(s); }, tt[i], t);
}

double CounterexampleFamily::Phi_direct(double t, double rel_tol) const {
    if (t <= 0.0) return 0.0;
    const double head_end = std::fmin(t, kTMin);
    double head = 0.0;
    if (tables_->log_branch_at_zero) head = log_branch_antideriv(head_end);
    else head = Phi_integrand(0.5 * head_end) * head_end;
    if (t <= kTMin) return head;
    return head + adaptive_quad([&](double s) { return Phi_integrand(s); }, kTMin, t, rel_tol);
}

double CounterexampleFamily::f(double t) const {
    if (t >= 2.0) return 1.0 / c;
    double g;
    if (t <= tables_->t.front()) g = tables_->G.front();
    else {
        const auto& tt = tables_->t;
        const double u = std::log(t / tt.front()) / std::log(tt.back() / tt.front()) * (tt.size() - 1);
        std::size_t i = static_cast<std::size_t>(std::fmax(0.0, u));
        if (i >= tt.size() - 1) i = tt.size() - 2;
        g = tables_->G[i] - gauss16([&](double s) { return 1.0 / Phi(s); }, tt[i], t);
    }
    return 1.0 / (c + g);
}

double CounterexampleFamily::u_radial(double r) const {
    if (r <= 0.0) return 0.0;
    // 1/f_eps(t) = c + G(eps + t); integrate on [0, r]
    return adaptive_quad([&](double t) { return 1.0 / f(eps + t); }, 0.0, r, 1e-10);
}

CounterexampleFamily build_family(const std::function<double(double)>& phi, int n, double eps) {
    if (n < 2) throw Error("build_family: n >= 2 required");
    if (!(eps >= 1e-4 && eps <= 0.5)) throw Error("build_family: eps restricted to [1e-4, 0.5]");

    // positivity and divergence probes on a dense sample
    double head_min = 1e300, tail_max = 0.0;
    for (int q = 0; q < 400; ++q) {
        const double t = kTMin * std::pow(2.0 / kTMin, q / 399.0);
        const double v = phi(t);
        if (!(v > 0.0)) throw PhiNonpositive("build_family: phi must be positive on (0, 2]");
        if (t <= 1e-4) head_min = std::fmin(head_min, v);
        if (t >= 0.5) tail_max = std::fmax(tail_max, v);
    }
    if (!(head_min > 4.0 * tail_max) || !(head_min > 20.0))
        throw PhiNotDiverging("build_family: phi(t) must diverge as t -> 0");

    auto tables = std::make_shared<CounterexampleFamily::Tables>();
    tables->phi = phi;
    tables->t.resize(kGridN);
    for (int i = 0; i < kGridN; ++i)
        tables->t[static_cast<std::size_t>(i)] = kTMin * std::pow(2.0 / kTMin, i / (kGridN - 1.0));

    // phi~(t) = inf over [t, min(2t, 2)], then mollified at scale t/4, halved
    tables->phi_star.resize(kGridN);
    auto envelope = [&](double t) {
        double m = phi(t);
        for (int q = 1; q <= 48; ++q) {
            const double s = std::fmin(t * (1.0 + q / 48.0), 2.0);
            m = std::fmin(m, phi(s));
        }
        return m;
    };
    for (int i = 0; i < kGridN; ++i) {
        const double t = tables->t[static_cast<std::size_t>(i)];
        double acc = 0.0;
        for (int q = 0; q < 16; ++q) {
            double s = t + kGx[q] * t / 4.0;
            s = std::fmin(std::fmax(s, kTMin * 0.5), 2.0);
            acc += kBump.w[static_cast<std::size_t>(q)] * envelope(s);
        }
        tables->phi_star[static_cast<std::size_t>(i)] = 0.5 * acc;
        if (!(tables->phi_star[static_cast<std::size_t>(i)] > 0.0) ||
            tables->phi_star[static_cast<std::size_t>(i)] > phi(t))
            throw PhiNonpositive("build_family: minorant construction failed (phi too irregular)");
    }

    CounterexampleFamily fam;
    fam.n = n;
    fam.eps = eps;
    fam.tables_ = tables;

    // is the log branch active all the way to 0?
    tables->log_branch_at_zero = true;
    for (int i = 0; i < kGridN / 8; ++i) {
        const double t = tables->t[static_cast<std::size_t>(i)];
        if (std::fabs(std::log(t / 2.0)) > 0.5 * tables->phi_star[static_cast<std::size_t>(i)]) {
            tables->log_branch_at_zero = false;
            break;
        }
    }

    // cumulative Phi on the grid
    tables->Phi.resize(kGridN);
    tables->Phi[0] = tables->log_branch_at_zero
                         ? log_branch_antideriv(tables->t[0])
                         : fam.Phi_integrand(0.5 * tables->t[0]) * tables->t[0];
    for (int i = 1; i < kGridN; ++i)
        tables->Phi[static_cast<std::size_t>(i)] =
            tables->Phi[static_cast<std::size_t>(i - 1)] +
            gauss16([&](double s) { return fam.Phi_integrand(s); }, tables->t[static_cast<std::size_t>(i - 1)],
                    tables->t[static_cast<std::size_t>(i)]);

    // G(t) = int_t^2 1/Phi, cumulative from the right
    tables->G.resize(kGridN);
    tables->G[static_cast<std::size_t>(kGridN - 1)] = 0.0;
    for (int i = kGridN - 2; i >= 0; --i)
        tables->G[static_cast<std::size_t>(i)] =
            tables->G[static_cast<std::size_t>(i + 1)] +
            gauss16([&](double s) { return 1.0 / fam.Phi(s); }, tables->t[static_cast<std::size_t>(i)],
                    tables->t[static_cast<std::size_t>(i + 1)]);

    // choose c: start at 2n / inf(phi_star), double until the derived bounds
    // verify on a sample (the proof's "suitably large c")
    double inf_star = 1e300;
    for (double v : tables->phi_star) inf_star = std::fmin(inf_star, v);
    fam.c = 2.0 * n / inf_star;
    const std::array<double, 4> probe_eps{1e-4, 0.01, 0.1, 0.5};
    for (int doubling = 0; doubling < 60; ++doubling) {
        bool ok = true;
        const double supf = fam.sup_f();
        for (double pe : probe_eps) {
            for (int q = 0; q < 2500 && ok; ++q) {
                const double r = q / 2499.0;
                const double fe = fam.f(pe + r);
                const double fpe = fam.fprime(pe + r);
                const double ps = fam.phi_star(pe + r);
                if (fe + r * fpe > ps / (2.0 * (n - 1)) + 1e-14) ok = false;
                if (fam.Phi(pe + r) < (n - 1) * r * fe - 1e-14) ok = false;
            }
            if (!ok) break;
        }
        for (int i = 0; i < kGridN && ok; i += 7)
            if (tables->phi_star[static_cast<std::size_t>(i)] < 2.0 * (n - 1) * supf) ok = false;
        if (ok) break;
        fam.c *= 2.0;
        if (doubling == 59) throw Error("build_family: c-doubling did not terminate");
    }
    return fam;
}

UEvaluation eval_u_eps(const CounterexampleFamily& fam, const double* x) {
    const int n = fam.n;
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
    const double r = std::sqrt(r2);
    if (r > 1.0 + 1e-12) throw Error("eval_u_eps: |x| <= 1 required");

    UEvaluation out;
    out.u = fam.u_radial(r);
    out.lambda_radial = -1.0 / fam.Phi(fam.eps + r);
    if (r < 1e-12) {
        out.origin_flagged = true;
        // flagged limit convention for the tangential direction at the origin
        out.lambda_tangential = 1.0 / (fam.eps * fam.f(fam.eps));
        out.du.fill(0.0);
        return out;
    }
    const double fe = fam.f(fam.eps + r);
    out.lambda_tangential = 1.0 / (r * fe);
    for (int a = 0; a < n; ++a) out.du[static_cast<std::size_t>(a)] = x[a] / (r * fe);
    return out;
}

ThetaEvaluation eval_theta_eps(const CounterexampleFamily& fam, double r) {
    const int n = fam.n;
    if (r < 0.0 || r > 1.0 + 1e-12) throw Error("eval_theta_eps: r in [0, 1] required");
    const double fe = fam.f(fam.eps + r);
    const double Pe = fam.Phi(fam.eps + r);
    ThetaEvaluation out;
    out.theta = (n - 2) * kPi / 2.0 + std::atan(Pe) - (n - 1) * std::atan(r * fe);
    const double dPhi = fam.Phi_integrand(fam.eps + r);  // Phi_eps'
    const double fpe = fam.fprime(fam.eps + r);
    const double radial = dPhi / (1.0 + Pe * Pe);
    const double tangential = (n - 1) * (fe + r * fpe) / (1.0 + r * r * fe * fe);
    out.dtheta_norm = std::fabs(radial - tangential);
    return out;
}

std::vector<BlowupRow> blowup_table(const CounterexampleFamily& fam,
                                    const std::vector<double>& eps_list, int radial_samples) {
    std::vector<BlowupRow> rows;
    rows.reserve(eps_list.size());
    for (double e : eps_list) {
        const CounterexampleFamily fe = fam.with_eps(e);
        BlowupRow row;
        row.eps = e;
        row.min_eigenvalue_origin = -1.0 / fe.Phi(e);
        row.sup_dtheta = 0.0;
        double inf_theta = 1e300;
        for (int q = 0; q < radial_samples; ++q) {
            const double r = q / (radial_samples - 1.0);
            const ThetaEvaluation te = eval_theta_eps(fe, r);
            row.sup_dtheta = std::fmax(row.sup_dtheta, te.dtheta_norm);
            inf_theta = std::fmin(inf_theta, te.theta);
        }
        row.inf_phase_above_critical = inf_theta - (fam.n - 2) * kPi / 2.0;
        rows.push_back(row);
    }
    return rows;
}

} // namespace lmce
