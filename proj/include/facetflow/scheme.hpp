#pragma once

// Coupled solves for the stationary pair
//
//   -div( D_tau(grad u) grad v ) + tau v = f - a u
//   -div( rho_tau(s) grad u ) + tau |u|^{p-2} u = v
//
// by a damped fixed-point sweep in v, plus continuation that walks tau down
// a geometric schedule and a backward-Euler evolution built on top of it.
//
// Stability note for the sweep: the raw update amplifies the constant mode
// of v by roughly -a / (tau^2 kbar), where kbar is the mean curvature of the
// zeroth-order term tau |u|^{p-2} u.  That factor is far outside the unit
// circle for small tau, so uniform damping cannot fix it.  The sweep below
// therefore splits v into mean and fluctuation: the fluctuation is relaxed
// with the requested damping while the mean gets the implicit gain
// tau^2 kbar / (tau^2 kbar + a), which is exactly the Newton step for the
// constant mode and leaves every fixed point unchanged.

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "facetflow/diagnostics.hpp"
#include "facetflow/grid.hpp"
#include "facetflow/model.hpp"
#include "facetflow/report.hpp"
#include "facetflow/usolver.hpp"
#include "facetflow/vsolver.hpp"

namespace facetflow {

struct PicardOptions {
    double damping = 0.7;  // fluctuation relaxation factor in (0, 1]
    double tol_fp = 1e-8;  // on the sup change of v per sweep
    int max_picard = 200;
};

struct StationaryOptions {
    PicardOptions picard;
    UsolveOptions usolve;
    VsolveOptions vsolve;
};

struct PicardStepResult {
    ScalarField u;
    ScalarField v;
    double v_change = 0.0;  // sup norm of the applied update
    SolveReport u_report;
    SolveReport v_report;
};

// One sweep v -> (u, v_new).  damping applies to the fluctuation part only;
// the mean is always updated with its implicit gain.  At a fixed point the
// output v equals the input v for every damping value.
inline PicardStepResult picard_step(const ScalarField& v, const ScalarField& f,
                                    const ModelParams& m, double damping,
                                    const UsolveOptions& uopts = {},
                                    const VsolveOptions& vopts = {},
                                    const ScalarField* u_warm = nullptr) {
    require_same_grid(v.grid(), f.grid(), "picard_step");
    const Grid& g = v.grid();

    PicardStepResult out;
    auto usolved = solve_u(v, m, uopts, u_warm);
    out.u = std::move(usolved.first);
    out.u_report = std::move(usolved.second);

    ScalarField rhs(g);
    for (int k = 0; k < rhs.size(); ++k) rhs[k] = f[k] - m.a * out.u[k];
    auto vsolved = solve_v(mobility_field(gradient(out.u), m), rhs, m, vopts, &v);
    ScalarField vraw = std::move(vsolved.first);
    out.v_report = std::move(vsolved.second);

    double kbar = 0.0;
    for (int k = 0; k < out.u.size(); ++k)
        kbar += std::pow(out.u[k] * out.u[k] + kZerothCurvatureFloor, 0.5 * (m.p - 2.0));
    kbar *= (m.p - 1.0) / g.ncells();
    double sigma_mean = m.tau * m.tau * kbar / (m.tau * m.tau * kbar + m.a);

    double mean_in = mean_value(v), mean_raw = mean_value(vraw);
    double mean_new = mean_in + sigma_mean * (mean_raw - mean_in);

    out.v = ScalarField(g);
    double change = 0.0;
    for (int k = 0; k < v.size(); ++k) {
        double fluct_in = v[k] - mean_in;
        double fluct_raw = vraw[k] - mean_raw;
        out.v[k] = mean_new + fluct_in + damping * (fluct_raw - fluct_in);
        change = std::max(change, std::abs(out.v[k] - v[k]));
    }
    out.v_change = change;
    return out;
}

struct StationaryResult {
    ScalarField u;
    ScalarField v;
    SolveReport report;                   // stage "picard"; history = v changes
    bool certified = false;               // undamped re-sweep kept v fixed
    double certification_change = 0.0;
    double residual_u = 0.0;              // relative, slope equation at (u, v)
    double residual_v = 0.0;              // relative, potential equation at (u, v)
};

inline StationaryResult solve_stationary(const ScalarField& f, const ModelParams& m,
                                         const StationaryOptions& opts = {},
                                         const ScalarField* u0 = nullptr,
                                         const ScalarField* v0 = nullptr) {
    m.validate();
    const Grid& g = f.grid();

    StationaryResult res;
    res.v = v0 ? *v0 : f;
    ScalarField u_prev;
    const ScalarField* u_warm = nullptr;
    if (u0) {
        u_prev = *u0;
        u_warm = &u_prev;
    }

    res.report.stage = "picard";
    // Divergence safeguard: if a sweep blows up past the best iterate seen,
    // retreat to that iterate and halve the damping.  Damping never changes
    // the fixed point, only the basin, so this is free insurance for strongly
    // coupled data.
    double damping = opts.picard.damping;
    constexpr double kDivergeFactor = 100.0;
    constexpr double kDampingFloor = 0.02;
    double best_change = std::numeric_limits<double>::infinity();
    ScalarField best_u(g), best_v(g);
    bool have_best = false;

    for (int sweep = 1; sweep <= opts.picard.max_picard; ++sweep) {
        PicardStepResult step =
            picard_step(res.v, f, m, damping, opts.usolve, opts.vsolve, u_warm);
        res.report.iterations = sweep;
        bool blown = !std::isfinite(step.v_change) ||
                     (have_best &&
                      step.v_change > kDivergeFactor * std::max(best_change, opts.picard.tol_fp));
        if (blown) {
            if (have_best) {
                res.v = best_v;
                u_prev = best_u;
                u_warm = &u_prev;
                res.report.residual_final = best_change;
                if (damping > kDampingFloor) damping *= 0.5;
                continue;
            }
            u_prev = std::move(step.u);
            u_warm = &u_prev;
            res.v = std::move(step.v);
            res.report.residual_history.push_back(step.v_change);
            res.report.residual_final = step.v_change;
            break;
        }
        u_prev = std::move(step.u);
        u_warm = &u_prev;
        res.v = std::move(step.v);
        res.report.residual_history.push_back(step.v_change);
        res.report.residual_final = step.v_change;
        if (step.v_change < best_change) {
            best_change = step.v_change;
            best_u = u_prev;
            best_v = res.v;
            have_best = true;
        }
        if (step.v_change <= opts.picard.tol_fp) {
            res.report.converged = true;
            break;
        }
    }
    res.u = std::move(u_prev);

    if (res.report.converged) {
        // certification: one undamped sweep must reproduce v
        PicardStepResult full =
            picard_step(res.v, f, m, 1.0, opts.usolve, opts.vsolve, &res.u);
        res.certification_change = full.v_change;
        res.certified = full.v_change <= 10.0 * opts.picard.tol_fp;
        res.u = std::move(full.u);
        res.v = std::move(full.v);
    } else {
        res.certification_change = res.report.residual_final;
    }

    ScalarField ures = residual_u(res.u, res.v, m);
    res.residual_u = norm_lp(ures, 2.0) / std::max(norm_lp(res.v, 2.0), 1.0);
    ScalarField rhs(g);
    for (int k = 0; k < rhs.size(); ++k) rhs[k] = f[k] - m.a * res.u[k];
    ScalarField vres = apply_v_operator(mobility_field(gradient(res.u), m), m.tau, res.v);
    for (int k = 0; k < vres.size(); ++k) vres[k] -= rhs[k];
    res.residual_v = norm_lp(vres, 2.0) / std::max(norm_lp(rhs, 2.0), 1.0);
    res.report.energy_final = energy_u(res.u, res.v, m);
    return res;
}

// --- continuation in tau -----------------------------------------------------

struct TauSchedule {
    double tau0 = 1.0;
    double ratio = 0.5;
    double tau_min = 1e-6;

    std::vector<double> levels() const {
        if (!(tau0 > 0.0) || tau0 > 1.0)
            throw std::invalid_argument("schedule: requires 0 < tau0 <= 1");
        if (!(ratio > 0.0) || !(ratio < 1.0))
            throw std::invalid_argument("schedule: requires 0 < ratio < 1");
        if (!(tau_min > 0.0) || tau_min > tau0)
            throw std::invalid_argument("schedule: requires 0 < tau_min <= tau0");
        std::vector<double> out{tau0};
        while (out.back() > tau_min) out.push_back(std::max(out.back() * ratio, tau_min));
        return out;
    }
};

struct LevelRecord {
    double tau = 0.0;
    int sweeps = 0;
    bool converged = false;
    bool certified = false;
    double v_change_final = 0.0;
    double certification_change = 0.0;
    double residual_u = 0.0;
    double residual_v = 0.0;
    double energy_regularized = 0.0;  // integral of the tau-inclusive density at this level
    AprioriReport apriori;
};

struct ContinuationOptions {
    TauSchedule schedule;
    StationaryOptions stationary;
};

struct ContinuationResult {
    ScalarField u;
    ScalarField v;
    std::vector<LevelRecord> levels;
    bool converged = false;          // every level converged
    bool gradient_claim_applies = false;  // sup-slope control is only claimed for p > 4/3
};

inline ContinuationResult continuation_solve(const ScalarField& f, ModelParams m,
                                             const ContinuationOptions& opts = {},
                                             const ScalarField* u0 = nullptr,
                                             const ScalarField* v0 = nullptr) {
    ContinuationResult res;
    res.gradient_claim_applies = m.p > 4.0 / 3.0;
    res.converged = true;

    const ScalarField* uw = u0;
    const ScalarField* vw = v0;
    for (double tau : opts.schedule.levels()) {
        m.tau = tau;
        StationaryResult st = solve_stationary(f, m, opts.stationary, uw, vw);
        LevelRecord rec;
        rec.tau = tau;
        rec.sweeps = st.report.iterations;
        rec.converged = st.report.converged;
        rec.certified = st.certified;
        rec.v_change_final = st.report.residual_final;
        rec.certification_change = st.certification_change;
        rec.residual_u = st.residual_u;
        rec.residual_v = st.residual_v;
        rec.energy_regularized = regularized_surface_energy(st.u, m);
        rec.apriori = apriori_report(st.u, st.v, f, m);
        res.levels.push_back(rec);
        res.converged = res.converged && st.report.converged;

        res.u = std::move(st.u);
        res.v = std::move(st.v);
        uw = &res.u;
        vw = &res.v;
    }
    return res;
}

// --- backward-Euler evolution --------------------------------------------------

struct EvolveOptions {
    int steps = 1;
    ContinuationOptions continuation;
    bool store_trajectory = false;
};

struct StepRecord {
    int step = 0;
    bool converged = false;
    double drift_sup = 0.0;  // ||u_k - u_{k-1}||_inf
    AprioriReport apriori;   // at the final tau of the step
};

struct EvolveResult {
    ScalarField u;
    ScalarField v;
    std::vector<StepRecord> steps;
    std::vector<ScalarField> trajectory_u;
    std::vector<ScalarField> trajectory_v;
    bool converged = false;
};

// Each step solves the stationary system with a = 1/delta and
// f = u_prev / delta (+ external forcing), walking tau down the schedule.
inline EvolveResult evolve(const ScalarField& u_init, const ModelParams& m,
                           const EvolveOptions& opts, const ScalarField* f_ext = nullptr) {
    if (opts.steps < 1) throw std::invalid_argument("evolve: requires steps >= 1");
    if (f_ext) require_same_grid(f_ext->grid(), u_init.grid(), "evolve");
    const Grid& g = u_init.grid();

    ModelParams mstep = m;
    mstep.a = 1.0 / m.delta;

    EvolveResult res;
    res.converged = true;
    res.u = u_init;
    const ScalarField* uw = &res.u;
    const ScalarField* vw = nullptr;

    for (int step = 1; step <= opts.steps; ++step) {
        ScalarField f(g);
        for (int k = 0; k < f.size(); ++k)
            f[k] = res.u[k] / m.delta + (f_ext ? (*f_ext)[k] : 0.0);

        ContinuationResult cr = continuation_solve(f, mstep, opts.continuation, uw, vw);

        StepRecord rec;
        rec.step = step;
        rec.converged = cr.converged;
        rec.drift_sup = norm_inf_diff(cr.u, res.u);
        ModelParams mfinal = mstep;
        mfinal.tau = opts.continuation.schedule.levels().back();
        rec.apriori = apriori_report(cr.u, cr.v, f, mfinal);
        res.steps.push_back(rec);
        res.converged = res.converged && cr.converged;

        res.u = std::move(cr.u);
        res.v = std::move(cr.v);
        uw = &res.u;
        vw = &res.v;
        if (opts.store_trajectory) {
            res.trajectory_u.push_back(res.u);
            res.trajectory_v.push_back(res.v);
        }
    }
    return res;
}

}  // namespace facetflow
