#pragma once

// Solver for the slope equation
//
//   -div( rho_tau(|grad u|^2) grad u ) + tau |u|^{p-2} u = g
//
// posed as minimization of the convex energy
//
//   E(u) = sum_c A [ Psi_tau(s_c) + (tau/p)|u_c|^p - g_c u_c ],
//
// where s_c is half the sum of squared one-sided face slopes of cell c
// (boundary faces mirror and drop out).  With that sampling the discrete
// residual below is the exact gradient of E, so Newton directions, the
// Armijo search, and the energy/duality diagnostics all see one function.
//
// Convexity of E: per cell the kink term is zeta -> Psi_tau(|zeta|^2 / 2)
// with zeta the 4-vector of face slopes, and its radial Hessian eigenvalue
// is (rho_tau + 2 s rho_tau') / 2 >= 0, same sign condition as in the
// continuum.  The Newton system is therefore SPD and safe for CG.

#include <algorithm>
#include <cmath>
#include <utility>

#include "facetflow/grid.hpp"
#include "facetflow/linsolve.hpp"
#include "facetflow/model.hpp"
#include "facetflow/report.hpp"

namespace facetflow {

struct UsolveOptions {
    double tol_residual = 1e-10;  // on ||residual||_2 / max(||g||_2, 1)
    int max_newton = 100;
    double armijo_c = 1e-4;
    double armijo_shrink = 0.5;
};

// curvature cap for |u|^{p-2} at u = 0; enters the Hessian only, the
// residual keeps the exact gradient tau |u|^{p-1} sign(u)
inline constexpr double kZerothCurvatureFloor = 1e-12;

// per-cell slope magnitude squared: half the sum of squared one-sided face
// differences over the (up to four) interior faces of the cell
inline ScalarField face_slope_sq(const ScalarField& u) {
    const Grid& g = u.grid();
    ScalarField s(g, 0.0);
    const double hx = g.hx(), hy = g.hy();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            double d = (u(i + 1, j) - u(i, j)) / hx;
            s(i, j) += 0.5 * d * d;
            s(i + 1, j) += 0.5 * d * d;
        }
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double d = (u(i, j + 1) - u(i, j)) / hy;
            s(i, j) += 0.5 * d * d;
            s(i, j + 1) += 0.5 * d * d;
        }
    return s;
}

inline double energy_u(const ScalarField& u, const ScalarField& gsrc, const ModelParams& m) {
    require_same_grid(u.grid(), gsrc.grid(), "energy_u");
    ScalarField s = face_slope_sq(u);
    double acc = 0.0;
    for (int k = 0; k < u.size(); ++k)
        acc += psi_tau_sq(s[k], m) + (m.tau / m.p) * std::pow(std::abs(u[k]), m.p) -
               gsrc[k] * u[k];
    return acc * u.grid().cell_area();
}

// exact gradient of energy_u divided by the cell area
inline ScalarField residual_u(const ScalarField& u, const ScalarField& gsrc,
                              const ModelParams& m) {
    require_same_grid(u.grid(), gsrc.grid(), "residual_u");
    const Grid& g = u.grid();
    const double hx = g.hx(), hy = g.hy();

    ScalarField s = face_slope_sq(u);
    ScalarField rho(g);
    for (int k = 0; k < s.size(); ++k) rho[k] = rho_tau(s[k], m);

    ScalarField out(g, 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            double flux = 0.5 * (rho(i, j) + rho(i + 1, j)) * (u(i + 1, j) - u(i, j)) / hx;
            out(i, j) -= flux / hx;
            out(i + 1, j) += flux / hx;
        }
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double flux = 0.5 * (rho(i, j) + rho(i, j + 1)) * (u(i, j + 1) - u(i, j)) / hy;
            out(i, j) -= flux / hy;
            out(i, j + 1) += flux / hy;
        }
    for (int k = 0; k < u.size(); ++k)
        out[k] += m.tau * std::pow(std::abs(u[k]), m.p - 1.0) * (u[k] < 0.0 ? -1.0 : u[k] > 0.0 ? 1.0 : 0.0) -
                  gsrc[k];
    return out;
}

// frozen data for one Newton linearization
struct UNewtonContext {
    ScalarField u;
    ScalarField rho;        // rho_tau(s_c)
    ScalarField rho_prime;  // rho_tau'(s_c)
    ScalarField zeroth;     // tau (p-1) (u^2 + floor)^{(p-2)/2}
};

inline UNewtonContext u_newton_context(const ScalarField& u, const ModelParams& m) {
    UNewtonContext c;
    c.u = u;
    ScalarField s = face_slope_sq(u);
    const Grid& g = u.grid();
    c.rho = ScalarField(g);
    c.rho_prime = ScalarField(g);
    c.zeroth = ScalarField(g);
    for (int k = 0; k < s.size(); ++k) {
        c.rho[k] = rho_tau(s[k], m);
        c.rho_prime[k] = rho_tau_prime(s[k], m);
        c.zeroth[k] =
            m.tau * (m.p - 1.0) * std::pow(u[k] * u[k] + kZerothCurvatureFloor, 0.5 * (m.p - 2.0));
    }
    return c;
}

// H d with H the exact Hessian of energy_u (up to the curvature floor),
// scaled so that dot_grid(H d, e) is the second variation of the energy
inline ScalarField hessian_apply(const UNewtonContext& c, const ScalarField& d) {
    const Grid& g = d.grid();
    require_same_grid(c.u.grid(), g, "hessian_apply");
    const double hx = g.hx(), hy = g.hy();
    const ScalarField& u = c.u;

    // m_c = sum over faces of cell c of slope(u) * slope(d)
    ScalarField md(g, 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            double t = (u(i + 1, j) - u(i, j)) * (d(i + 1, j) - d(i, j)) / (hx * hx);
            md(i, j) += t;
            md(i + 1, j) += t;
        }
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double t = (u(i, j + 1) - u(i, j)) * (d(i, j + 1) - d(i, j)) / (hy * hy);
            md(i, j) += t;
            md(i, j + 1) += t;
        }

    ScalarField out(g);
    for (int k = 0; k < d.size(); ++k) out[k] = c.zeroth[k] * d[k];
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            double du = (u(i + 1, j) - u(i, j)) / hx;
            double dd = (d(i + 1, j) - d(i, j)) / hx;
            double flux = 0.5 * (c.rho(i, j) + c.rho(i + 1, j)) * dd +
                          0.5 * (c.rho_prime(i, j) * md(i, j) + c.rho_prime(i + 1, j) * md(i + 1, j)) * du;
            out(i, j) -= flux / hx;
            out(i + 1, j) += flux / hx;
        }
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double du = (u(i, j + 1) - u(i, j)) / hy;
            double dd = (d(i, j + 1) - d(i, j)) / hy;
            double flux = 0.5 * (c.rho(i, j) + c.rho(i, j + 1)) * dd +
                          0.5 * (c.rho_prime(i, j) * md(i, j) + c.rho_prime(i, j + 1) * md(i, j + 1)) * du;
            out(i, j) -= flux / hy;
            out(i, j + 1) += flux / hy;
        }
    return out;
}

// diagonal of the face part plus the zeroth term; the rho' part is dropped
// so the preconditioner stays positive
inline ScalarField hessian_diag(const UNewtonContext& c) {
    const Grid& g = c.u.grid();
    const double ihx2 = 1.0 / (g.hx() * g.hx()), ihy2 = 1.0 / (g.hy() * g.hy());
    ScalarField diag = c.zeroth;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            double cmean = 0.5 * (c.rho(i, j) + c.rho(i + 1, j)) * ihx2;
            diag(i, j) += cmean;
            diag(i + 1, j) += cmean;
        }
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double cmean = 0.5 * (c.rho(i, j) + c.rho(i, j + 1)) * ihy2;
            diag(i, j) += cmean;
            diag(i, j + 1) += cmean;
        }
    return diag;
}

// Damped Newton with Armijo backtracking on the energy.  The initial guess
// is the warm start when given, otherwise the per-cell solve of
// tau |u|^{p-2} u = g, which is exact for constant states.
inline std::pair<ScalarField, SolveReport> solve_u(const ScalarField& gsrc, const ModelParams& m,
                                                   const UsolveOptions& opts = {},
                                                   const ScalarField* warm = nullptr) {
    m.validate();
    const Grid& g = gsrc.grid();

    ScalarField u(g, 0.0);
    if (warm) {
        require_same_grid(warm->grid(), g, "solve_u warm start");
        u = *warm;
    } else {
        // constant guess solving tau |c|^{p-2} c = mean(g): no kink energy,
        // exact for constant sources
        double gbar = mean_value(gsrc);
        double mag = std::pow(std::abs(gbar) / m.tau, 1.0 / (m.p - 1.0));
        ScalarField init(g, gbar < 0.0 ? -mag : mag);
        u = init;
    }

    const double gscale = std::max(norm_lp(gsrc, 2.0), 1.0);
    SolveReport rep;
    rep.stage = "u";
    double energy = energy_u(u, gsrc, m);

    for (int it = 0;; ++it) {
        ScalarField res = residual_u(u, gsrc, m);
        double rnorm = norm_lp(res, 2.0);
        double rel = rnorm / gscale;
        rep.residual_history.push_back(rel);
        rep.energy_history.push_back(energy);
        rep.residual_final = rel;
        if (rel <= opts.tol_residual) {
            rep.converged = true;
            break;
        }
        if (it >= opts.max_newton) break;

        UNewtonContext ctx = u_newton_context(u, m);
        ScalarField diag = hessian_diag(ctx);
        ScalarField rhs(g);
        for (int k = 0; k < rhs.size(); ++k) rhs[k] = -res[k];
        ScalarField d(g, 0.0);
        double inner_tol = std::min(0.1, std::sqrt(rel)) * rnorm;
        detail::pcg([&](const ScalarField& x) { return hessian_apply(ctx, x); }, diag, rhs, d,
                    inner_tol, 10 * (g.nx + g.ny));

        double slope = dot_grid(res, d);
        if (!(slope < 0.0)) {
            // CG returned a non-descent direction (roundoff near the floor);
            // fall back to the preconditioned gradient
            for (int k = 0; k < d.size(); ++k) d[k] = -res[k] / diag[k];
            slope = dot_grid(res, d);
            if (!(slope < 0.0)) break;
        }

        double t = 1.0;
        bool accepted = false;
        ScalarField trial(g);
        // near the minimizer the predicted decrease is below the roundoff
        // resolution of the energy; the allowance keeps full steps flowing
        const double eps_energy = 1e-15 * (std::abs(energy) + 1.0);
        for (int ls = 0; ls < 60; ++ls) {
            for (int k = 0; k < trial.size(); ++k) trial[k] = u[k] + t * d[k];
            double etrial = energy_u(trial, gsrc, m);
            if (etrial <= energy + opts.armijo_c * t * slope + eps_energy) {
                u = trial;
                energy = etrial;
                accepted = true;
                break;
            }
            t *= opts.armijo_shrink;
        }
        rep.iterations = it + 1;
        if (!accepted) break;
    }
    rep.energy_final = energy;
    return {std::move(u), rep};
}

}  // namespace facetflow
