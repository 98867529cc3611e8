#include <iostream>

#include <CLI11.hpp>

#include "eetflux/cli/commands.hpp"
#include "eetflux/pathways.hpp"

using namespace eetflux;

namespace {

void add_overrides(CLI::App* cmd, cli::RunOverrides& o) {
    cmd->add_option("--dt", o.dt, "RK4 step (overrides the config)")->check(CLI::PositiveNumber);
    cmd->add_option("--t-final", o.t_final, "final time (overrides the config)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--dt-output", o.dt_output, "output spacing (overrides the config)")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eetflux: excitation-transfer density-matrix propagation and probability-current analysis"};
    app.set_version_flag("--version", EETFLUX_VERSION);
    app.require_subcommand(1);

    cli::SimulateOptions sim;
    std::string format = "text";
    auto* simulate = app.add_subcommand("simulate", "propagate rho(t) and write a trajectory file");
    simulate->add_option("--config", sim.configs, "model config (repeat for a parameter sweep)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out-dir", sim.out_dir, "output directory (default: $EETFLUX_OUT_DIR or cwd)");
    add_overrides(simulate, sim.overrides);
    simulate->add_option("--format", format, "trajectory format")->check(CLI::IsMember({"text", "binary"}));
    simulate->add_option("--jobs", sim.jobs, "parallel workers across configs")->check(CLI::PositiveNumber);

    cli::CurrentsOptions cur;
    auto* currents = app.add_subcommand("currents", "evaluate and decompose probability currents of a trajectory");
    currents->add_option("--trajectory", cur.trajectory, "trajectory file")->required()->check(CLI::ExistingFile);
    currents->add_option("--config", cur.config, "model config")->required()->check(CLI::ExistingFile);
    currents->add_option("--out-dir", cur.out_dir, "output directory (default: $EETFLUX_OUT_DIR or cwd)");

    cli::PathwaysOptions path;
    auto* pathways = app.add_subcommand("pathways", "time-integrated transfer graph from a currents file");
    pathways->add_option("--currents", path.currents, "currents file")->required()->check(CLI::ExistingFile);
    pathways->add_option("--t0", path.t0, "window start");
    pathways->add_option("--window", path.window, "window length (default: to the end of the data)");
    pathways->add_option("--threshold", path.threshold, "minimum net transfer for an edge")->required();
    pathways->add_option("--groups", path.groups, "JSON object of named site groups")->check(CLI::ExistingFile);
    pathways->add_option("--out-dir", path.out_dir, "output directory (default: $EETFLUX_OUT_DIR or cwd)");

    cli::CheckOptions chk;
    auto* check = app.add_subcommand("check", "run the invariant suite on a model or trajectory");
    check->add_option("--config", chk.config, "model config")->required()->check(CLI::ExistingFile);
    check->add_option("--trajectory", chk.trajectory, "check this trajectory instead of propagating")
        ->check(CLI::ExistingFile);
    add_overrides(check, chk.overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kValidation;
    }

    try {
        if (simulate->parsed()) {
            sim.format = parse_trajectory_format(format);
            return cli::cmd_simulate(sim, std::cout, std::cerr);
        }
        if (currents->parsed()) return cli::cmd_currents(cur, std::cout, std::cerr);
        if (pathways->parsed()) return cli::cmd_pathways(path, std::cout, std::cerr);
        if (check->parsed()) return cli::cmd_check(chk, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kValidation;
    }
    return cli::kValidation;
}
