#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "facetflow/facetflow.hpp"

namespace {

facetflow::RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::ios_base::failure("cannot open config file " + path);
    return facetflow::parse_config(is);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"facetflow: solver for facet-forming surface relaxation"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::uint64_t seed = 12345;
    int samples = 100000;

    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "path to an INI run configuration")->required();
        cmd->add_option("--out", out_dir, "output directory (created if missing)");
    };
    CLI::App* stationary = app.add_subcommand("stationary", "solve the coupled pair at fixed tau");
    CLI::App* continuation =
        app.add_subcommand("continuation", "walk tau down the schedule to the kink limit");
    CLI::App* evolve = app.add_subcommand("evolve", "backward-Euler relaxation of an initial profile");
    add_run_options(stationary);
    add_run_options(continuation);
    add_run_options(evolve);

    CLI::App* verify = app.add_subcommand("verify", "fuzz the structural inequalities");
    verify->add_option("--seed", seed, "RNG seed");
    verify->add_option("--samples", samples, "number of fuzz samples");
    verify->add_option("--out", out_dir, "output directory (created if missing)");

    CLI11_PARSE(app, argc, argv);

    try {
        int rc = 0;
        if (*stationary)
            rc = facetflow::run_stationary(load_config(config_path), out_dir);
        else if (*continuation)
            rc = facetflow::run_continuation(load_config(config_path), out_dir);
        else if (*evolve)
            rc = facetflow::run_evolve(load_config(config_path), out_dir);
        else
            rc = facetflow::run_verify(seed, samples, out_dir);
        if (rc == facetflow::kExitNotConverged)
            std::fprintf(stderr, "facetflow: finished without convergence; outputs written to %s\n",
                         out_dir.c_str());
        return rc;
    } catch (const facetflow::ConfigError& e) {
        std::fprintf(stderr, "facetflow: invalid configuration\n");
        for (const std::string& issue : e.issues)
            std::fprintf(stderr, "  %s\n", issue.c_str());
        return facetflow::kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "facetflow: %s\n", e.what());
        return facetflow::kExitConfig;
    } catch (const std::ios_base::failure& e) {
        std::fprintf(stderr, "facetflow: %s\n", e.what());
        return facetflow::kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "facetflow: %s\n", e.what());
        return facetflow::kExitIo;
    }
}
