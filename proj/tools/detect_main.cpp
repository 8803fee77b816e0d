// detect — wealth-distribution simulator for token economies.
//
// detect simulate|kinetic|invert|check --scenario <file> --out <dir>
//        [--seed N] [--ensemble N]
#include <CLI11.hpp>

#include "detect/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"token-economy wealth distribution simulator"};
    app.require_subcommand(1);

    struct {
        std::string scenario;
        std::string out = "out";
        std::int64_t seed = -1;
        std::int64_t ensemble = -1;
    } args;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", args.scenario, "scenario JSON file")
            ->required();
        cmd->add_option("--out", args.out, "output directory");
        cmd->add_option("--seed", args.seed, "override the scenario master seed");
        cmd->add_option("--ensemble", args.ensemble, "override the ensemble size");
    };
    add_common(app.add_subcommand("simulate", "run the macro dynamical system"));
    add_common(app.add_subcommand("kinetic", "run the agent-level exchange models"));
    add_common(app.add_subcommand("invert", "solve rates for a target distribution"));
    add_common(app.add_subcommand("check", "validate a scenario file"));

    CLI11_PARSE(app, argc, argv);

    detect::RunOptions options;
    options.scenario_path = args.scenario;
    options.out_dir = args.out;
    if (args.seed >= 0) options.seed_override = std::uint64_t(args.seed);
    if (args.ensemble >= 1) options.ensemble_override = std::size_t(args.ensemble);

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "simulate") options.command = detect::Command::Simulate;
    else if (command == "kinetic") options.command = detect::Command::Kinetic;
    else if (command == "invert") options.command = detect::Command::Invert;
    else options.command = detect::Command::Check;

    return detect::run_command(options);
}
