#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "facetflow/config.hpp"
#include "facetflow/presets.hpp"
#include "facetflow/runner.hpp"

using namespace facetflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("facetflow_" + tag);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("presets: shapes and argument handling", "[cli_io]") {
    Grid g(16, 16, 1.0, 1.0);

    ScalarField c = make_preset("constant:0.7", g);
    for (int k = 0; k < c.size(); ++k) CHECK(c[k] == 0.7);

    ScalarField bump = make_preset("gaussian-bump", g);
    double center = bump(8, 8), corner = bump(0, 0);
    CHECK(center > 3.0);  // default amplitude 4, cell centers straddle the peak
    CHECK(corner < 1e-3);
    CHECK(center <= 4.0);

    ScalarField ridge = make_preset("cosine-ridge:2", g);
    CHECK(ridge(0, 3) == Catch::Approx(2.0 * std::cos(M_PI * g.xc(0))));
    CHECK(ridge(0, 3) == ridge(0, 12));  // constant in y

    ScalarField ramp = make_preset("two-facet-ramp", g);
    CHECK(ramp(0, 0) < -0.99);
    CHECK(ramp(15, 0) > 0.99);
    CHECK(std::abs(ramp(8, 5)) < 0.5);

    CHECK_THROWS_AS(make_preset("no-such-preset", g), std::invalid_argument);
    CHECK_THROWS_AS(make_preset("constant", g), std::invalid_argument);
    CHECK_THROWS_AS(make_preset("constant:abc", g), std::invalid_argument);
}

TEST_CASE("config: happy path with every section", "[cli_io]") {
    std::stringstream ini(R"(
# sample run
[grid]
nx = 48
ny = 32
lx = 2.0
ly = 1.0

[model]
p = 1.5
beta = 0.5
q = 2.0
a = 1.0
tau = 0.25
delta = 0.1

[schedule]
tau0 = 0.5
ratio = 0.5
tau_min = 0.125

[picard]
damping = 0.8
tol_fp = 1e-9
max_picard = 150

[usolve]
tol_residual = 1e-11
max_newton = 80

[vsolve]
tol = 1e-12
max_cg = 500

[run]
forcing = cosine-ridge:0.5
initial = constant:0.7
steps = 4
write_fields = true
write_trajectory = false
)");
    RunConfig cfg = parse_config(ini);
    CHECK(cfg.nx == 48);
    CHECK(cfg.ly == 1.0);
    CHECK(cfg.model.p == 1.5);
    CHECK(cfg.model.tau == 0.25);
    CHECK(cfg.schedule.tau_min == 0.125);
    CHECK(cfg.stationary.picard.damping == 0.8);
    CHECK(cfg.stationary.usolve.max_newton == 80);
    CHECK(cfg.stationary.vsolve.max_cg == 500);
    CHECK(cfg.forcing == "cosine-ridge:0.5");
    CHECK(cfg.steps == 4);
}

TEST_CASE("config: all problems are reported together", "[cli_io]") {
    std::stringstream ini(R"(
[grid]
nx = 2
mystery = 1
[model]
p = banana
[nonsense]
whatever = 3
)");
    try {
        parse_config(ini);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.issues.size() == 4);  // unknown key, bad value, unknown section, nx too small
        std::string all;
        for (const auto& s : e.issues) all += s + "\n";
        CHECK(all.find("mystery") != std::string::npos);
        CHECK(all.find("banana") != std::string::npos);
        CHECK(all.find("nonsense") != std::string::npos);
        CHECK(all.find("nx >= 4") != std::string::npos);
    }
}

TEST_CASE("stationary run writes fields and a faithful summary", "[cli_io]") {
    RunConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.model.p = 2.0;
    cfg.model.tau = 0.1;
    cfg.forcing = "constant:1.01";
    fs::path dir = fresh_dir("stationary");

    int rc = run_stationary(cfg, dir.string());
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "u.csv"));
    CHECK(fs::exists(dir / "v.csv"));
    CHECK(fs::exists(dir / "mu.csv"));

    nlohmann::json summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["mode"] == "stationary");
    CHECK(summary["result"]["converged"] == true);
    CHECK(summary["result"]["certified"] == true);
    CHECK(summary["result"]["apriori"]["mean_balance_defect"].get<double>() <= 1e-9);
    CHECK(summary.contains("timings"));

    ScalarField u = load_field((dir / "u.csv").string(), cfg.make_grid());
    CHECK(norm_inf_diff(u, ScalarField(cfg.make_grid(), 1.0)) <= 1e-7);
}

TEST_CASE("repeat runs are byte-identical apart from timings", "[cli_io]") {
    RunConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.model.p = 1.5;
    cfg.model.tau = 0.5;
    cfg.forcing = "gaussian-bump:1.5";
    fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");

    REQUIRE(run_stationary(cfg, d1.string()) == 0);
    REQUIRE(run_stationary(cfg, d2.string()) == 0);

    CHECK(slurp(d1 / "u.csv") == slurp(d2 / "u.csv"));
    CHECK(slurp(d1 / "v.csv") == slurp(d2 / "v.csv"));

    auto s1 = nlohmann::ordered_json::parse(slurp(d1 / "summary.json"));
    auto s2 = nlohmann::ordered_json::parse(slurp(d2 / "summary.json"));
    s1.erase("timings");
    s2.erase("timings");
    CHECK(s1.dump() == s2.dump());
}

TEST_CASE("non-convergence exits 2 but still writes outputs", "[cli_io]") {
    RunConfig cfg;
    cfg.nx = cfg.ny = 16;
    cfg.model.p = 1.5;
    cfg.model.tau = 0.5;
    cfg.forcing = "gaussian-bump";
    cfg.stationary.picard.max_picard = 1;  // cannot reach tol in one sweep
    fs::path dir = fresh_dir("unconverged");

    int rc = run_stationary(cfg, dir.string());
    CHECK(rc == 2);
    CHECK(fs::exists(dir / "u.csv"));
    nlohmann::json summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["result"]["converged"] == false);
}

TEST_CASE("evolve run records steps and optional trajectory", "[cli_io]") {
    RunConfig cfg;
    cfg.nx = cfg.ny = 12;
    cfg.model.p = 1.5;
    cfg.model.delta = 1.0;
    cfg.initial = "constant:0.7";
    cfg.schedule = {1.0, 0.5, 0.25};
    cfg.steps = 2;
    cfg.write_trajectory = true;
    fs::path dir = fresh_dir("evolve");

    int rc = run_evolve(cfg, dir.string());
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "u_step1.csv"));
    CHECK(fs::exists(dir / "v_step2.csv"));
    CHECK(fs::exists(dir / "h_step1_x.csv"));
    CHECK(fs::exists(dir / "h_step2_y.csv"));
    nlohmann::json summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    REQUIRE(summary["result"]["steps"].size() == 2);
    CHECK(summary["result"]["steps"][0]["drift_sup"].get<double>() > 0.0);
}

TEST_CASE("continuation run writes the selection field and level records", "[cli_io]") {
    RunConfig cfg;
    cfg.nx = cfg.ny = 12;
    cfg.model.p = 1.5;
    cfg.schedule = {1.0, 0.5, 0.25};
    cfg.forcing = "gaussian-bump:2";
    fs::path dir = fresh_dir("continuation");

    int rc = run_continuation(cfg, dir.string());
    CHECK(rc == 0);
    for (const char* f : {"u.csv", "v.csv", "mu.csv", "h_x.csv", "h_y.csv"})
        CHECK(fs::exists(dir / f));
    nlohmann::json summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["result"]["converged"] == true);
    CHECK(summary["result"]["gradient_claim_applies"] == true);
    CHECK(summary["result"]["levels"].size() == 3);
}

TEST_CASE("verify run reports clean inequality fuzzing", "[cli_io]") {
    fs::path dir = fresh_dir("verify");
    int rc = run_verify(777, 5000, dir.string());
    CHECK(rc == 0);
    nlohmann::json summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["result"]["ok"] == true);
    CHECK(summary["result"]["inequalities"]["worst"].get<double>() <= 1e-10);
    CHECK(summary["result"]["decay_iteration"]["dyadic_exact"] == true);
}
