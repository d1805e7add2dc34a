#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <swarm/scenario.hpp>
#include <swarm/simulator.hpp>

namespace swarm {

// Process exit codes shared by the CLI and the library entry points.
inline constexpr int k_exit_ok = 0;
inline constexpr int k_exit_invalid_input = 2;
inline constexpr int k_exit_infeasible_assignment = 3;
inline constexpr int k_exit_no_feasible_trajectory = 4;
inline constexpr int k_exit_internal = 5;

struct run_options {
    std::string scenario_path;
    std::optional<double> horizon;
    std::optional<double> dt;
    std::optional<std::uint64_t> seed;
    std::string out_dir{"."};
    std::optional<std::string> sweep;  // comma-separated horizon list
};

// Serialization of run artifacts (frozen schemas).
std::string format_trajectory_csv(const run_artifacts& artifacts);
std::string format_metrics(const metrics& totals);
std::string format_events(const std::vector<event>& events);

// One Table-style sweep row; `failure` non-empty when the run errored.
struct sweep_row {
    double horizon{0.0};
    metrics totals;
    std::string failure;
};

std::string format_sweep_table(const std::vector<sweep_row>& rows);

// Runs one scenario and writes trajectory.csv, metrics.txt, events.log and
// config_echo.txt into out_dir. Returns an exit code.
int run_command(const scenario_config& config, const std::string& out_dir, std::ostream& diagnostics);

// Runs the scenario once per horizon with identical initial conditions and
// prints the metrics table; failures become table rows and the sweep
// continues. Writes sweep.txt into out_dir when it is non-empty.
int sweep_command(const scenario_config& config,
                  const std::vector<double>& horizons,
                  const std::string& out_dir,
                  std::ostream& out,
                  std::ostream& diagnostics);

// Full CLI behavior behind flag parsing: load, apply overrides, dispatch.
int run_app(const run_options& options, std::ostream& out, std::ostream& diagnostics);

}  // namespace swarm
