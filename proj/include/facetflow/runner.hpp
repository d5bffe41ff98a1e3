#pragma once

// Drives one run per mode, writes field CSVs and a summary.json into the
// output directory, and maps outcomes to process exit codes:
//   0 converged, 2 finished without convergence (outputs still written),
//   3 configuration error (handled by the caller), 4 I/O failure.
// Everything in summary.json except the "timings" section is reproducible
// bit for bit across runs with the same configuration.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "facetflow/config.hpp"
#include "facetflow/diagnostics.hpp"
#include "facetflow/presets.hpp"
#include "facetflow/scheme.hpp"

namespace facetflow {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitIo = 4;

namespace detail {

inline ordered_json json_grid(const Grid& g) {
    return {{"nx", g.nx}, {"ny", g.ny}, {"lx", g.lx}, {"ly", g.ly}};
}

inline ordered_json json_model(const ModelParams& m) {
    return {{"p", m.p},     {"beta", m.beta},   {"q", m.q},
            {"a", m.a},     {"tau", m.tau},     {"delta", m.delta},
            {"allow_p_above_2", m.allow_p_above_2}};
}

inline ordered_json json_apriori(const AprioriReport& r) {
    return {{"sup_v", r.sup_v},
            {"sup_bound", r.sup_bound},
            {"max_principle_margin", r.max_principle_margin},
            {"duality_gap", r.duality_gap},
            {"mean_balance_defect", r.mean_balance_defect},
            {"ellipticity_margin", r.ellipticity_margin},
            {"sup_grad_u", r.sup_grad_u},
            {"sup_h", r.sup_h},
            {"membership_fraction", r.membership_fraction},
            {"subgradient_tol", r.subgradient_tol},
            {"surface_energy", r.surface_energy},
            {"w1p_seminorm_u", r.w1p_seminorm_u}};
}

inline ordered_json json_level(const LevelRecord& rec) {
    return {{"tau", rec.tau},
            {"sweeps", rec.sweeps},
            {"converged", rec.converged},
            {"certified", rec.certified},
            {"v_change_final", rec.v_change_final},
            {"certification_change", rec.certification_change},
            {"residual_u", rec.residual_u},
            {"residual_v", rec.residual_v},
            {"energy_regularized", rec.energy_regularized},
            {"apriori", json_apriori(rec.apriori)}};
}

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

  private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline void write_summary(const std::filesystem::path& dir, ordered_json& summary,
                          double seconds) {
    summary["timings"] = {{"total_seconds", seconds}};
    std::ofstream os(dir / "summary.json");
    if (!os) throw std::runtime_error("cannot open " + (dir / "summary.json").string());
    os << summary.dump(2) << "\n";
    if (!os) throw std::runtime_error("write failed for " + (dir / "summary.json").string());
}

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string());
}

}  // namespace detail

inline int run_stationary(const RunConfig& cfg, const std::string& out_dir) {
    detail::Stopwatch clock;
    Grid g = cfg.make_grid();
    ScalarField f = make_preset(cfg.forcing, g);
    StationaryResult st = solve_stationary(f, cfg.model, cfg.stationary);
    AprioriReport rep = apriori_report(st.u, st.v, f, cfg.model);

    std::filesystem::path dir(out_dir);
    detail::ensure_dir(dir);
    if (cfg.write_fields) {
        dump_field(st.u, (dir / "u.csv").string());
        dump_field(st.v, (dir / "v.csv").string());
        dump_field(chemical_potential(st.u, cfg.model), (dir / "mu.csv").string());
    }

    ordered_json summary{{"mode", "stationary"},
                         {"grid", detail::json_grid(g)},
                         {"model", detail::json_model(cfg.model)},
                         {"forcing", cfg.forcing},
                         {"result",
                          {{"converged", st.report.converged},
                           {"certified", st.certified},
                           {"sweeps", st.report.iterations},
                           {"v_change_final", st.report.residual_final},
                           {"certification_change", st.certification_change},
                           {"residual_u", st.residual_u},
                           {"residual_v", st.residual_v},
                           {"energy", st.report.energy_final},
                           {"apriori", detail::json_apriori(rep)}}}};
    detail::write_summary(dir, summary, clock.seconds());
    return st.report.converged ? kExitOk : kExitNotConverged;
}

inline int run_continuation(const RunConfig& cfg, const std::string& out_dir) {
    detail::Stopwatch clock;
    Grid g = cfg.make_grid();
    ScalarField f = make_preset(cfg.forcing, g);

    ContinuationOptions opts;
    opts.schedule = cfg.schedule;
    opts.stationary = cfg.stationary;
    ModelParams m = cfg.model;
    ContinuationResult cr = continuation_solve(f, m, opts);

    std::filesystem::path dir(out_dir);
    detail::ensure_dir(dir);
    if (cfg.write_fields) {
        dump_field(cr.u, (dir / "u.csv").string());
        dump_field(cr.v, (dir / "v.csv").string());
        ModelParams mf = cfg.model;
        mf.tau = opts.schedule.levels().back();
        dump_field(chemical_potential(cr.u, mf), (dir / "mu.csv").string());
        VectorField h = subgradient_field(cr.u, mf.tau);
        dump_field(h.x, (dir / "h_x.csv").string());
        dump_field(h.y, (dir / "h_y.csv").string());
    }

    ordered_json levels = ordered_json::array();
    for (const LevelRecord& rec : cr.levels) levels.push_back(detail::json_level(rec));
    ordered_json summary{{"mode", "continuation"},
                         {"grid", detail::json_grid(g)},
                         {"model", detail::json_model(cfg.model)},
                         {"forcing", cfg.forcing},
                         {"schedule",
                          {{"tau0", cfg.schedule.tau0},
                           {"ratio", cfg.schedule.ratio},
                           {"tau_min", cfg.schedule.tau_min}}},
                         {"result",
                          {{"converged", cr.converged},
                           {"gradient_claim_applies", cr.gradient_claim_applies},
                           {"levels", levels}}}};
    detail::write_summary(dir, summary, clock.seconds());
    return cr.converged ? kExitOk : kExitNotConverged;
}

inline int run_evolve(const RunConfig& cfg, const std::string& out_dir) {
    detail::Stopwatch clock;
    Grid g = cfg.make_grid();
    ScalarField u0 = make_preset(cfg.initial, g);
    ScalarField fext;
    bool has_ext = !cfg.forcing_ext.empty();
    if (has_ext) fext = make_preset(cfg.forcing_ext, g);

    EvolveOptions opts;
    opts.steps = cfg.steps;
    opts.continuation.schedule = cfg.schedule;
    opts.continuation.stationary = cfg.stationary;
    opts.store_trajectory = cfg.write_trajectory;
    EvolveResult ev = evolve(u0, cfg.model, opts, has_ext ? &fext : nullptr);

    std::filesystem::path dir(out_dir);
    detail::ensure_dir(dir);
    if (cfg.write_fields) {
        dump_field(ev.u, (dir / "u.csv").string());
        dump_field(ev.v, (dir / "v.csv").string());
    }
    if (cfg.write_trajectory) {
        double tau_fin = cfg.schedule.levels().back();
        for (size_t k = 0; k < ev.trajectory_u.size(); ++k) {
            std::string step = "_step" + std::to_string(k + 1);
            dump_field(ev.trajectory_u[k], (dir / ("u" + step + ".csv")).string());
            dump_field(ev.trajectory_v[k], (dir / ("v" + step + ".csv")).string());
            VectorField h = subgradient_field(ev.trajectory_u[k], tau_fin);
            dump_field(h.x, (dir / ("h" + step + "_x.csv")).string());
            dump_field(h.y, (dir / ("h" + step + "_y.csv")).string());
        }
    }

    ordered_json steps = ordered_json::array();
    for (const StepRecord& rec : ev.steps)
        steps.push_back({{"step", rec.step},
                         {"converged", rec.converged},
                         {"drift_sup", rec.drift_sup},
                         {"apriori", detail::json_apriori(rec.apriori)}});
    ordered_json summary{{"mode", "evolve"},
                         {"grid", detail::json_grid(g)},
                         {"model", detail::json_model(cfg.model)},
                         {"initial", cfg.initial},
                         {"forcing_ext", cfg.forcing_ext},
                         {"schedule",
                          {{"tau0", cfg.schedule.tau0},
                           {"ratio", cfg.schedule.ratio},
                           {"tau_min", cfg.schedule.tau_min}}},
                         {"result", {{"converged", ev.converged}, {"steps", steps}}}};
    detail::write_summary(dir, summary, clock.seconds());
    return ev.converged ? kExitOk : kExitNotConverged;
}

inline int run_verify(std::uint64_t seed, int samples, const std::string& out_dir) {
    detail::Stopwatch clock;
    InequalityFuzzReport fuzz = inequality_fuzz(seed, samples);

    std::vector<double> decay = degiorgi_iterate(1.0, 2.0, 1.0, 0.5, 40);
    bool decay_exact = true;
    for (int n = 0; n <= 40; ++n) decay_exact = decay_exact && decay[n] == std::ldexp(1.0, -(n + 1));
    std::vector<double> blowup = degiorgi_iterate(1.0, 2.0, 1.0, 1.0, 40);

    bool ok = fuzz.worst() <= 1e-10 && decay_exact && blowup.back() > 1e10;

    std::filesystem::path dir(out_dir);
    detail::ensure_dir(dir);
    ordered_json summary{{"mode", "verify"},
                         {"seed", seed},
                         {"samples", samples},
                         {"result",
                          {{"ok", ok},
                           {"inequalities",
                            {{"mobility_floor", fuzz.mobility_floor},
                             {"mobility_tau_floor", fuzz.mobility_tau_floor},
                             {"monotone_p", fuzz.monotone_p},
                             {"monotone_kink", fuzz.monotone_kink},
                             {"pgrowth", fuzz.pgrowth},
                             {"pflat", fuzz.pflat},
                             {"worst", fuzz.worst()}}},
                           {"decay_iteration",
                            {{"dyadic_exact", decay_exact},
                             {"threshold", degiorgi_threshold(1.0, 2.0, 1.0)},
                             {"supercritical_final", blowup.back()}}}}}};
    detail::write_summary(dir, summary, clock.seconds());
    return ok ? kExitOk : kExitNotConverged;
}

}  // namespace facetflow
