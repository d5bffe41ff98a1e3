#pragma once

// Checks of the structural estimates the coupled system is supposed to
// satisfy: the sup bound on the potential, the duality identity, mass
// balance, ellipticity floors of the mobility, subgradient membership of
// the selected kink direction, and the fast-geometric-decay iteration used
// to prove boundedness.  Everything here is observational; nothing feeds
// back into the solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "facetflow/grid.hpp"
#include "facetflow/model.hpp"
#include "facetflow/usolver.hpp"
#include "facetflow/vsolver.hpp"

namespace facetflow {

// tau-free kink energy, comparable across continuation levels
inline double surface_energy(const ScalarField& u, const ModelParams& m) {
    ScalarField s = face_slope_sq(u);
    double acc = 0.0;
    for (int k = 0; k < s.size(); ++k)
        acc += std::pow(s[k], 0.5 * m.p) / m.p + m.beta * std::sqrt(s[k]);
    return acc * u.grid().cell_area();
}

// Same integral with the tau-regularized density.  Dominates surface_energy
// and tends to it as tau -> 0; bounded level sequences are the health signal
// for the continuation sweep.
inline double regularized_surface_energy(const ScalarField& u, const ModelParams& m) {
    ScalarField s = face_slope_sq(u);
    double acc = 0.0;
    for (int k = 0; k < s.size(); ++k) acc += psi_tau_sq(s[k], m);
    return acc * u.grid().cell_area();
}

// -div(rho_tau(s) grad u), the driving potential of the slope equation
inline ScalarField chemical_potential(const ScalarField& u, const ModelParams& m) {
    ScalarField zero(u.grid(), 0.0);
    ScalarField mu = residual_u(u, zero, m);
    for (int k = 0; k < mu.size(); ++k) {
        double zeroth = m.tau * std::pow(std::abs(u[k]), m.p - 1.0) * (u[k] < 0.0 ? -1.0 : 1.0);
        mu[k] -= zeroth;
    }
    return mu;
}

// the selected element of the kink subgradient, cell by cell
inline VectorField subgradient_field(const ScalarField& u, double tau) {
    VectorField gu = gradient(u);
    VectorField h(u.grid());
    for (int j = 0; j < u.grid().ny; ++j)
        for (int i = 0; i < u.grid().nx; ++i) {
            Vec2 hh = subgradient_select(gu.at(i, j), tau);
            h.x(i, j) = hh.x;
            h.y(i, j) = hh.y;
        }
    return h;
}

inline double sup_magnitude(const VectorField& w) {
    double m = 0.0;
    for (int k = 0; k < w.x.size(); ++k)
        m = std::max(m, std::sqrt(w.x[k] * w.x[k] + w.y[k] * w.y[k]));
    return m;
}

// fraction of cells whose selected direction passes the membership test
inline double membership_fraction(const ScalarField& u, double tau, double tol) {
    VectorField gu = gradient(u);
    int pass = 0;
    for (int j = 0; j < u.grid().ny; ++j)
        for (int i = 0; i < u.grid().nx; ++i) {
            Vec2 xi = gu.at(i, j);
            if (in_subgradient(subgradient_select(xi, tau), xi, tol)) ++pass;
        }
    return static_cast<double>(pass) / u.grid().ncells();
}

// closed-form distance of the smallest mobility eigenvalue from its floor
// 1/(1+q|xi|) + tau: equals (1 - 1/(1+q|xi|)) tau / (|xi|^2 + tau)
inline double ellipticity_margin(const ScalarField& u, const ModelParams& m) {
    VectorField gu = gradient(u);
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < u.size(); ++k) {
        double s = gu.x[k] * gu.x[k] + gu.y[k] * gu.y[k];
        double n = std::sqrt(s);
        double margin = (1.0 - 1.0 / (1.0 + m.q * n)) * m.tau / (s + m.tau);
        worst = std::min(worst, margin);
    }
    return worst;
}

struct AprioriReport {
    double sup_v = 0.0;
    double sup_bound = 0.0;             // ||f - a u||_inf / tau
    double max_principle_margin = 0.0;  // sup_bound - sup_v
    double duality_gap = 0.0;           // |<F(u) - v, u>| / max(1, |<v, u>|)
    double mean_balance_defect = 0.0;   // |a int u + tau int v - int f| / max(1, |int f|)
    double ellipticity_margin = 0.0;
    double sup_grad_u = 0.0;
    double sup_h = 0.0;
    double membership_fraction = 0.0;
    double subgradient_tol = 0.0;       // max(1e-6, sqrt(tau))
    double surface_energy = 0.0;
    double w1p_seminorm_u = 0.0;
};

inline AprioriReport apriori_report(const ScalarField& u, const ScalarField& v,
                                    const ScalarField& f, const ModelParams& m) {
    require_same_grid(u.grid(), v.grid(), "apriori_report");
    require_same_grid(u.grid(), f.grid(), "apriori_report");
    AprioriReport r;

    ScalarField rhs(u.grid());
    for (int k = 0; k < rhs.size(); ++k) rhs[k] = f[k] - m.a * u[k];
    r.sup_v = norm_inf(v);
    r.sup_bound = norm_inf(rhs) / m.tau;
    r.max_principle_margin = r.sup_bound - r.sup_v;

    double pairing = dot_grid(v, u);
    r.duality_gap = std::abs(dot_grid(residual_u(u, v, m), u)) / std::max(1.0, std::abs(pairing));

    double balance = m.a * integrate(u) + m.tau * integrate(v) - integrate(f);
    r.mean_balance_defect = std::abs(balance) / std::max(1.0, std::abs(integrate(f)));

    r.ellipticity_margin = ellipticity_margin(u, m);
    r.sup_grad_u = sup_magnitude(gradient(u));
    VectorField h = subgradient_field(u, m.tau);
    r.sup_h = sup_magnitude(h);
    r.subgradient_tol = std::max(1e-6, std::sqrt(m.tau));
    r.membership_fraction = membership_fraction(u, m.tau, r.subgradient_tol);
    r.surface_energy = surface_energy(u, m);
    r.w1p_seminorm_u = w1p_seminorm(u, m.p);
    return r;
}

// --- structural inequality fuzzing ------------------------------------------
// Each field is the worst relative violation seen; a healthy build keeps all
// of them at roundoff level.

struct InequalityFuzzReport {
    int samples = 0;
    double mobility_floor = 0.0;      // D(xi) xi'.xi'   >= |xi'|^2 / (1+q|xi|)
    double mobility_tau_floor = 0.0;  // D_tau(xi) xi'.xi' >= (1/(1+q|xi|)+tau)|xi'|^2
    double monotone_p = 0.0;          // regularized p-term strong monotonicity, 1 < p <= 2
    double monotone_kink = 0.0;       // regularized kink term monotone
    double pgrowth = 0.0;             // p-term growth with constant 2^{1-p}, p >= 2
    double pflat = 0.0;               // flattened p-term monotonicity, 1 < p <= 2

    double worst() const {
        return std::max({mobility_floor, mobility_tau_floor, monotone_p, monotone_kink, pgrowth,
                         pflat});
    }
};

namespace detail {
inline Vec2 random_direction_scaled(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
    std::uniform_real_distribution<double> logmag(-3.0, 3.0);
    double t = angle(rng), r = std::pow(10.0, logmag(rng));
    return {r * std::cos(t), r * std::sin(t)};
}
inline double rel_violation(double lhs, double rhs, double extra_scale = 0.0) {
    // how far lhs falls short of rhs, relative; extra_scale carries the
    // magnitude of the terms paired inside lhs so that cancellation noise
    // is not mistaken for a violation
    return std::max(0.0, rhs - lhs) / (std::abs(lhs) + std::abs(rhs) + extra_scale + 1e-300);
}
}  // namespace detail

inline InequalityFuzzReport inequality_fuzz(std::uint64_t seed, int nsamples) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> up_flat(1.0 + 1e-6, 2.0), up_grow(2.0, 4.0);
    std::uniform_real_distribution<double> ulogtau(-6.0, 0.0), ulogq(-1.0, 1.0);
    std::uniform_real_distribution<double> ubeta(0.0, 2.0);

    InequalityFuzzReport rep;
    rep.samples = nsamples;
    for (int n = 0; n < nsamples; ++n) {
        double tau = std::pow(10.0, ulogtau(rng));
        double q = std::pow(10.0, ulogq(rng));
        double beta = ubeta(rng);
        double p = up_flat(rng);
        double pg = up_grow(rng);
        Vec2 xi = detail::random_direction_scaled(rng);
        Vec2 eta = detail::random_direction_scaled(rng);
        Vec2 xip = detail::random_direction_scaled(rng);

        {
            Mat2 d = mobility_D(xi, q);
            double lhs = dot(d.apply(xip), xip);
            double rhs = xip.norm2() / (1.0 + q * xi.norm());
            rep.mobility_floor = std::max(rep.mobility_floor, detail::rel_violation(lhs, rhs));
        }
        {
            Mat2 d = mobility_D_tau(xi, q, tau);
            double lhs = dot(d.apply(xip), xip);
            double rhs = (1.0 / (1.0 + q * xi.norm()) + tau) * xip.norm2();
            rep.mobility_tau_floor =
                std::max(rep.mobility_tau_floor, detail::rel_violation(lhs, rhs));
        }
        {
            // regularized p-term: w(z) = (|z|^2 + tau)^{(p-2)/2} z
            auto w = [&](const Vec2& z) {
                return std::pow(z.norm2() + tau, 0.5 * (p - 2.0)) * z;
            };
            Vec2 diff = eta - xi;
            double lhs = dot(w(eta) - w(xi), diff);
            double rhs = (p - 1.0) * std::pow(1.0 + xi.norm2() + eta.norm2(), 0.5 * (p - 2.0)) *
                         diff.norm2();
            double scale = (w(eta).norm() + w(xi).norm()) * diff.norm();
            rep.monotone_p = std::max(rep.monotone_p, detail::rel_violation(lhs, rhs, scale));
        }
        {
            auto w = [&](const Vec2& z) { return beta / std::sqrt(z.norm2() + tau) * z; };
            Vec2 diff = eta - xi;
            double lhs = dot(w(eta) - w(xi), diff);
            double scale = (w(eta).norm() + w(xi).norm()) * diff.norm();
            rep.monotone_kink =
                std::max(rep.monotone_kink, detail::rel_violation(lhs, 0.0, scale));
        }
        {
            auto w = [&](const Vec2& z) { return std::pow(z.norm(), pg - 2.0) * z; };
            Vec2 diff = eta - xi;
            double lhs = dot(w(eta) - w(xi), diff);
            double rhs = std::pow(2.0, 1.0 - pg) * std::pow(diff.norm(), pg);
            double scale = (w(eta).norm() + w(xi).norm()) * diff.norm();
            rep.pgrowth = std::max(rep.pgrowth, detail::rel_violation(lhs, rhs, scale));
        }
        {
            auto w = [&](const Vec2& z) {
                double nz = z.norm();
                return nz == 0.0 ? Vec2{0.0, 0.0} : std::pow(nz, p - 2.0) * z;
            };
            Vec2 diff = eta - xi;
            double flat = std::pow(1.0 + xi.norm2() + eta.norm2(), 0.5 * (2.0 - p));
            double lhs = flat * dot(w(eta) - w(xi), diff);
            double rhs = (p - 1.0) * diff.norm2();
            double scale = flat * (w(eta).norm() + w(xi).norm()) * diff.norm();
            rep.pflat = std::max(rep.pflat, detail::rel_violation(lhs, rhs, scale));
        }
    }
    return rep;
}

// --- fast geometric decay iteration ------------------------------------------
// y_{n+1} = c b^n y_n^{1+alpha}; vanishes iff y_0 is below the threshold
// c^{-1/alpha} b^{-1/alpha^2}.

inline std::vector<double> degiorgi_iterate(double c, double b, double alpha, double y0, int n) {
    if (!(c > 0.0) || !(b > 1.0) || !(alpha > 0.0) || !(y0 >= 0.0))
        throw std::invalid_argument("degiorgi_iterate: requires c > 0, b > 1, alpha > 0, y0 >= 0");
    std::vector<double> y{y0};
    y.reserve(n + 1);
    for (int k = 0; k < n; ++k)
        y.push_back(c * std::pow(b, k) * std::pow(y.back(), 1.0 + alpha));
    return y;
}

inline double degiorgi_threshold(double c, double b, double alpha) {
    return std::pow(c, -1.0 / alpha) * std::pow(b, -1.0 / (alpha * alpha));
}

}  // namespace facetflow
