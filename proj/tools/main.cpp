#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <swarm/app.hpp>

int main(int argc, char** argv) {
    CLI::App cli{"Decentralized minimum-energy goal assignment and trajectory simulator"};

    swarm::run_options options;
    std::string horizon_text;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::string sweep_list;

    cli.add_option("--scenario", options.scenario_path, "Scenario file path")->required();
    auto* horizon_opt = cli.add_option("--horizon", horizon_text, "Sensing horizon override (number or 'inf')");
    auto* dt_opt = cli.add_option("--dt", dt, "Tick length override, seconds");
    auto* seed_opt = cli.add_option("--seed", seed, "Seed override");
    cli.add_option("--out", options.out_dir, "Output directory (default '.')");
    auto* sweep_opt = cli.add_option("--sweep", sweep_list, "Comma-separated horizon list; emits a metrics table");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : swarm::k_exit_invalid_input;
    }

    if (*horizon_opt) {
        if (horizon_text == "inf") {
            options.horizon = std::numeric_limits<double>::infinity();
        } else {
            try {
                options.horizon = std::stod(horizon_text);
            } catch (const std::exception&) {
                std::cerr << "bad --horizon value '" << horizon_text << "'\n";
                return swarm::k_exit_invalid_input;
            }
        }
    }
    if (*dt_opt) {
        options.dt = dt;
    }
    if (*seed_opt) {
        options.seed = seed;
    }
    if (*sweep_opt) {
        options.sweep = sweep_list;
    }

    return swarm::run_app(options, std::cout, std::cerr);
}
