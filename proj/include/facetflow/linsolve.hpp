#pragma once

#include <cmath>

#include "facetflow/grid.hpp"

namespace facetflow::detail {

struct CgResult {
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

// Preconditioned conjugate gradient with a diagonal preconditioner.
// Terminates on ||b - A x||_2 <= tol_abs in the grid-weighted norm.
// Breaks out early if the operator loses positive definiteness along
// the search direction; the caller sees converged = false.
template <class Op>
CgResult pcg(const Op& apply, const ScalarField& diag, const ScalarField& b, ScalarField& x,
             double tol_abs, int max_iter) {
    const Grid& g = b.grid();
    require_same_grid(x.grid(), g, "pcg");

    ScalarField r = apply(x);
    for (int k = 0; k < r.size(); ++k) r[k] = b[k] - r[k];
    ScalarField z(g), p(g), ap(g);

    for (int k = 0; k < r.size(); ++k) z[k] = r[k] / diag[k];
    p = z;
    double rz = dot_grid(r, z);
    double rnorm = std::sqrt(dot_grid(r, r));

    CgResult res;
    res.residual = rnorm;
    if (rnorm <= tol_abs) {
        res.converged = true;
        return res;
    }
    for (int it = 1; it <= max_iter; ++it) {
        ap = apply(p);
        double pap = dot_grid(p, ap);
        if (!(pap > 0.0)) break;
        double alpha = rz / pap;
        for (int k = 0; k < x.size(); ++k) x[k] += alpha * p[k];
        for (int k = 0; k < r.size(); ++k) r[k] -= alpha * ap[k];
        res.iterations = it;
        rnorm = std::sqrt(dot_grid(r, r));
        res.residual = rnorm;
        if (rnorm <= tol_abs) {
            res.converged = true;
            return res;
        }
        for (int k = 0; k < r.size(); ++k) z[k] = r[k] / diag[k];
        double rz_next = dot_grid(r, z);
        double beta = rz_next / rz;
        rz = rz_next;
        for (int k = 0; k < p.size(); ++k) p[k] = z[k] + beta * p[k];
    }
    return res;
}

}  // namespace facetflow::detail
