#pragma once

// Solver for the chemical-potential equation
//
//   -div( D_tau(grad u) grad v ) + tau v = rhs
//
// with the anisotropic step mobility D_tau evaluated from the cell-centered
// gradient of u.  D_tau is symmetric and uniformly elliptic for tau > 0, so
// the discrete operator (shared flux_divergence stencil plus the tau mass
// term) is SPD and preconditioned CG applies.

#include <algorithm>
#include <cmath>
#include <utility>

#include "facetflow/grid.hpp"
#include "facetflow/linsolve.hpp"
#include "facetflow/model.hpp"
#include "facetflow/report.hpp"

namespace facetflow {

struct VsolveOptions {
    double tol = 1e-11;  // on ||B v - rhs||_2 / max(||rhs||_2, 1)
    int max_cg = 0;      // 0 picks 10 (nx + ny)
};

inline TensorField mobility_field(const VectorField& gu, const ModelParams& m) {
    TensorField coef(gu.grid);
    for (int j = 0; j < gu.grid.ny; ++j)
        for (int i = 0; i < gu.grid.nx; ++i)
            coef.set(i, j, mobility_D_tau(gu.at(i, j), m.q, m.tau));
    return coef;
}

inline ScalarField apply_v_operator(const TensorField& coef, double tau, const ScalarField& v) {
    ScalarField out = flux_divergence(coef, v);
    for (int k = 0; k < out.size(); ++k) out[k] = tau * v[k] - out[k];
    return out;
}

// five-point part of the operator diagonal plus the mass term; the corner
// cross-term contribution is skipped, this is only a preconditioner
inline ScalarField v_operator_diag(const TensorField& coef, double tau) {
    const Grid& g = coef.grid;
    const double ihx2 = 1.0 / (g.hx() * g.hx()), ihy2 = 1.0 / (g.hy() * g.hy());
    ScalarField diag(g, tau);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            double c = 0.5 * (coef.a11(i, j) + coef.a11(i + 1, j)) * ihx2;
            diag(i, j) += c;
            diag(i + 1, j) += c;
        }
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double c = 0.5 * (coef.a22(i, j) + coef.a22(i, j + 1)) * ihy2;
            diag(i, j) += c;
            diag(i, j + 1) += c;
        }
    return diag;
}

inline std::pair<ScalarField, SolveReport> solve_v(const TensorField& coef, const ScalarField& rhs,
                                                   const ModelParams& m,
                                                   const VsolveOptions& opts = {},
                                                   const ScalarField* warm = nullptr) {
    m.validate();
    const Grid& g = rhs.grid();
    require_same_grid(coef.grid, g, "solve_v");

    ScalarField v(g, 0.0);
    if (warm) {
        require_same_grid(warm->grid(), g, "solve_v warm start");
        v = *warm;
    }
    int max_cg = opts.max_cg > 0 ? opts.max_cg : 10 * (g.nx + g.ny);
    double scale = std::max(norm_lp(rhs, 2.0), 1.0);
    ScalarField diag = v_operator_diag(coef, m.tau);
    detail::CgResult cg =
        detail::pcg([&](const ScalarField& x) { return apply_v_operator(coef, m.tau, x); }, diag,
                    rhs, v, opts.tol * scale, max_cg);

    SolveReport rep;
    rep.stage = "v";
    rep.iterations = cg.iterations;
    rep.converged = cg.converged;
    rep.residual_final = cg.residual / scale;
    rep.residual_history.push_back(rep.residual_final);
    return {std::move(v), rep};
}

inline std::pair<ScalarField, SolveReport> solve_v(const ScalarField& u, const ScalarField& rhs,
                                                   const ModelParams& m,
                                                   const VsolveOptions& opts = {},
                                                   const ScalarField* warm = nullptr) {
    return solve_v(mobility_field(gradient(u), m), rhs, m, opts, warm);
}

// sup bound carried by the mass term: ||v||_inf <= ||rhs||_inf / tau.
// Returns the margin; nonnegative when the bound holds.
inline double v_maximum_margin(const ScalarField& v, const ScalarField& rhs, double tau) {
    return norm_inf(rhs) / tau - norm_inf(v);
}

}  // namespace facetflow
