#include <swarm/app.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <swarm/errors.hpp>

namespace swarm {

namespace {

std::string real12(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

const char* event_name(event::kind kind) {
    switch (kind) {
        case event::kind::assignment:
            return "assignment";
        case event::kind::ban:
            return "ban";
        case event::kind::replan:
            return "replan";
        case event::kind::junction_solve:
            return "junction_solve";
        case event::kind::bound_violation:
            return "bound_violation";
        case event::kind::arrival:
            return "arrival";
        case event::kind::halt:
            return "halt";
        case event::kind::invariant_breach:
            return "invariant_breach";
    }
    return "unknown";
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path path = fs::path{dir} / name;
    std::ofstream out{path, std::ios::binary};
    if (!out) {
        throw error{"cannot write " + path.string()};
    }
    out << content;
}

}  // namespace

std::string format_trajectory_csv(const run_artifacts& artifacts) {
    std::ostringstream out;
    out << "t,agent_id,x,y,vx,vy,ux,uy,goal\n";
    for (const auto& row : artifacts.trajectory_log) {
        out << real12(row.t) << "," << row.agent_id << "," << real12(row.position.x) << ","
            << real12(row.position.y) << "," << real12(row.velocity.x) << "," << real12(row.velocity.y) << ","
            << real12(row.control.x) << "," << real12(row.control.y) << "," << row.goal << "\n";
    }
    return out.str();
}

std::string format_metrics(const metrics& totals) {
    std::ostringstream out;
    out << "min_separation = " << real12(totals.min_separation) << "\n";
    out << "total_energy = " << real12(totals.total_energy) << "\n";
    out << "formation_energy = " << real12(totals.formation_energy) << "\n";
    out << "t_f = " << real12(totals.t_f) << "\n";
    out << "total_bans = " << totals.total_bans << "\n";
    out << "assignment_rounds = " << totals.assignment_rounds << "\n";
    out << "replans = " << totals.replans << "\n";
    out << "ticks = " << totals.ticks << "\n";
    out << "completed = " << (totals.completed ? "true" : "false") << "\n";
    out << "theorem_bound_ok = " << (totals.theorem_bound_ok ? "true" : "false") << "\n";
    return out.str();
}

std::string format_events(const std::vector<event>& events) {
    std::ostringstream out;
    for (const auto& e : events) {
        out << "event = " << event_name(e.type) << "\n";
        out << "time = " << real12(e.time) << "\n";
        switch (e.type) {
            case event::kind::assignment:
                out << "rounds = " << e.round << "\n";
                out << "local_solves = " << e.other << "\n";
                break;
            case event::kind::ban:
                out << "agent = " << e.agent << "\n";
                out << "goal = " << e.goal << "\n";
                out << "round = " << e.round << "\n";
                out << "winner = " << e.other << "\n";
                break;
            case event::kind::replan:
                out << "agent = " << e.agent << "\n";
                out << "goal = " << e.goal << "\n";
                out << "contact_arcs = " << e.round << "\n";
                break;
            case event::kind::junction_solve:
                out << "agent = " << e.agent << "\n";
                out << "leader = " << e.other << "\n";
                out << "energy = " << real12(e.value) << "\n";
                out << "detail = " << e.note << "\n";
                break;
            case event::kind::bound_violation:
                out << "agent = " << e.agent << "\n";
                out << "quantity = " << e.note << "\n";
                out << "magnitude = " << real12(e.value) << "\n";
                break;
            case event::kind::arrival:
                out << "agent = " << e.agent << "\n";
                out << "goal = " << e.goal << "\n";
                break;
            case event::kind::halt:
            case event::kind::invariant_breach:
                out << "note = " << e.note << "\n";
                if (e.agent != 0) {
                    out << "agent = " << e.agent << "\n";
                }
                break;
        }
        out << "\n";
    }
    return out.str();
}

std::string format_sweep_table(const std::vector<sweep_row>& rows) {
    std::ostringstream out;
    out << "h,min_separation,energy,t_f,total_bans\n";
    for (const auto& row : rows) {
        if (!row.failure.empty()) {
            out << real12(row.horizon) << ",error: " << row.failure << ",,,\n";
            continue;
        }
        out << real12(row.horizon) << "," << real12(row.totals.min_separation) << ","
            << real12(row.totals.total_energy) << "," << real12(row.totals.t_f) << "," << row.totals.total_bans
            << "\n";
    }
    return out.str();
}

int run_command(const scenario_config& config, const std::string& out_dir, std::ostream& diagnostics) {
    try {
        const run_artifacts artifacts = run_scenario(config);
        write_file(out_dir, "trajectory.csv", format_trajectory_csv(artifacts));
        write_file(out_dir, "metrics.txt", format_metrics(artifacts.totals));
        write_file(out_dir, "events.log", format_events(artifacts.events));
        write_file(out_dir, "config_echo.txt", save_scenario(config));
        return k_exit_ok;
    } catch (const infeasible_assignment& e) {
        diagnostics << "infeasible assignment: " << e.what() << "\n";
        return k_exit_infeasible_assignment;
    } catch (const no_feasible_trajectory& e) {
        diagnostics << "no feasible trajectory: " << e.what() << "\n";
        return k_exit_no_feasible_trajectory;
    } catch (const validation_error& e) {
        diagnostics << "invalid scenario: " << e.what() << "\n";
        return k_exit_invalid_input;
    } catch (const error& e) {
        diagnostics << "internal error: " << e.what() << "\n";
        return k_exit_internal;
    }
}

int sweep_command(const scenario_config& config,
                  const std::vector<double>& horizons,
                  const std::string& out_dir,
                  std::ostream& out,
                  std::ostream& diagnostics) {
    std::vector<sweep_row> rows;
    for (const double h : horizons) {
        scenario_config variant = config;
        variant.sensing_horizon = h;
        sweep_row row;
        row.horizon = h;
        try {
            validate_scenario(variant);
            row.totals = run_scenario(variant).totals;
        } catch (const error& e) {
            row.failure = e.what();
            diagnostics << "horizon " << real12(h) << " failed: " << e.what() << "\n";
        }
        rows.push_back(std::move(row));
    }
    const std::string table = format_sweep_table(rows);
    out << table;
    if (!out_dir.empty()) {
        write_file(out_dir, "sweep.txt", table);
    }
    return k_exit_ok;
}

int run_app(const run_options& options, std::ostream& out, std::ostream& diagnostics) {
    scenario_config config;
    try {
        config = load_scenario(options.scenario_path);
        if (options.horizon) {
            config.sensing_horizon = *options.horizon;
        }
        if (options.dt) {
            config.dt = *options.dt;
        }
        if (options.seed) {
            config.seed = *options.seed;
        }
        validate_scenario(config);
    } catch (const parse_error& e) {
        diagnostics << "parse error: " << e.what() << "\n";
        return k_exit_invalid_input;
    } catch (const validation_error& e) {
        diagnostics << "validation error: " << e.what() << "\n";
        return k_exit_invalid_input;
    }

    if (options.sweep) {
        std::vector<double> horizons;
        std::stringstream list{*options.sweep};
        std::string token;
        while (std::getline(list, token, ',')) {
            if (token.empty()) {
                continue;
            }
            try {
                horizons.push_back(token == "inf" ? std::numeric_limits<double>::infinity() : std::stod(token));
            } catch (const std::exception&) {
                diagnostics << "parse error: bad horizon '" << token << "' in sweep list\n";
                return k_exit_invalid_input;
            }
        }
        return sweep_command(config, horizons, options.out_dir, out, diagnostics);
    }
    return run_command(config, options.out_dir, diagnostics);
}

}  // namespace swarm
